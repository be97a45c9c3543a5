#include "stfilter/video.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

namespace stf {

namespace {

constexpr const char* kY4mMagic = "YUV4MPEG2";

std::string dims_str(const VideoVolume& v) {
    std::ostringstream os;
    os << v.width << "x" << v.height << ", " << v.frames << " frames";
    return os.str();
}

}  // namespace

FrameRate FrameRate::reduced() const {
    if (num == 0 || den == 0)
        return *this;
    uint32_t g = std::gcd(num, den);
    return {num / g, den / g};
}

FrameRate FrameRate::from_hz(double hz) {
    if (!(hz > 0) || !std::isfinite(hz))
        throw DataError("frame rate must be finite and > 0");
    double r = std::round(hz);
    if (std::abs(hz - r) < 1e-9 * hz && r <= 4e9)
        return {static_cast<uint32_t>(r), 1};

    // Continued-fraction rationalization, denominator capped at 1e6.
    uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = hz;
    for (int i = 0; i < 64; ++i) {
        double a = std::floor(x);
        uint64_t p2 = static_cast<uint64_t>(a) * p1 + p0;
        uint64_t q2 = static_cast<uint64_t>(a) * q1 + q0;
        if (q2 > 1000000 || p2 > 0xffffffffULL)
            break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = x - a;
        if (std::abs(static_cast<double>(p1) / q1 - hz) < 1e-9 * hz || frac < 1e-12)
            break;
        x = 1.0 / frac;
    }
    if (q1 == 0)
        throw DataError("cannot rationalize frame rate");
    FrameRate fr{static_cast<uint32_t>(p1), static_cast<uint32_t>(q1)};
    return fr.reduced();
}

VideoVolume VideoVolume::create(int width, int height, int frames, FrameRate fps) {
    VideoVolume v;
    v.width = width;
    v.height = height;
    v.frames = frames;
    v.fps = fps;
    if (width <= 0 || height <= 0 || frames <= 0)
        throw DataError("video dimensions must be positive");
    v.luma.assign(static_cast<size_t>(frames) * v.luma_samples_per_frame(), 0);
    v.cb.assign(static_cast<size_t>(frames) * v.chroma_samples_per_frame(), 0);
    v.cr = v.cb;
    v.validate();
    return v;
}

void VideoVolume::validate() const {
    if (bit_depth != 8)
        throw DataError("only 8-bit video is supported, got bit depth " +
                        std::to_string(bit_depth));
    if (width <= 0 || height <= 0)
        throw DataError("video dimensions must be positive, got " + dims_str(*this));
    if (frames <= 0)
        throw DataError("empty video rejected (frame count " + std::to_string(frames) + ")");
    if (fps.num == 0 || fps.den == 0)
        throw DataError("frame rate must be > 0");
    if (luma.size() != static_cast<size_t>(frames) * luma_samples_per_frame())
        throw DataError("luma plane size does not match dimensions (" + dims_str(*this) + ")");
    size_t chroma_expected = static_cast<size_t>(frames) * chroma_samples_per_frame();
    if (cb.size() != chroma_expected || cr.size() != chroma_expected)
        throw DataError("chroma plane size does not match dimensions (" + dims_str(*this) + ")");
}

VideoFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".y4m" ? VideoFormat::kY4m : VideoFormat::kRawYuv;
}

namespace {

void read_exact(std::istream& in, uint8_t* dst, size_t count, const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count)
        throw FormatError(std::string("truncated frame while reading ") + what);
}

VideoVolume read_raw(const std::filesystem::path& path, const RawDims& dims) {
    if (dims.width <= 0 || dims.height <= 0)
        throw DataError("raw video needs positive width/height");
    if (dims.fps.num == 0 || dims.fps.den == 0)
        throw DataError("raw video needs a frame rate > 0");

    std::error_code ec;
    uintmax_t bytes = std::filesystem::file_size(path, ec);
    if (ec)
        throw IoError("cannot stat " + path.string() + ": " + ec.message());

    VideoVolume probe;
    probe.width = dims.width;
    probe.height = dims.height;
    size_t frame_bytes = probe.frame_bytes();
    if (bytes == 0)
        throw FormatError("empty video rejected: " + path.string());
    if (bytes % frame_bytes != 0)
        throw FormatError("truncated frame: " + path.string() + " has " + std::to_string(bytes) +
                          " bytes, not a multiple of the " + std::to_string(frame_bytes) +
                          "-byte frame size");

    int frames = static_cast<int>(bytes / frame_bytes);
    VideoVolume v = VideoVolume::create(dims.width, dims.height, frames, dims.fps);

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    size_t ysize = v.luma_samples_per_frame();
    size_t csize = v.chroma_samples_per_frame();
    for (int t = 0; t < frames; ++t) {
        read_exact(in, v.luma.data() + static_cast<size_t>(t) * ysize, ysize, "luma plane");
        read_exact(in, v.cb.data() + static_cast<size_t>(t) * csize, csize, "Cb plane");
        read_exact(in, v.cr.data() + static_cast<size_t>(t) * csize, csize, "Cr plane");
    }
    return v;
}

// Reads bytes up to the next '\n'. Returns false on immediate EOF.
bool read_line(std::istream& in, std::string& line, size_t limit = 4096) {
    line.clear();
    char c;
    while (in.get(c)) {
        if (c == '\n')
            return true;
        line.push_back(c);
        if (line.size() > limit)
            throw FormatError("y4m header line exceeds " + std::to_string(limit) + " bytes");
    }
    return !line.empty();
}

bool is_supported_chroma(const std::string& c) {
    return c == "420" || c == "420jpeg" || c == "420mpeg2" || c == "420paldv";
}

VideoVolume read_y4m(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::string header;
    if (!read_line(in, header))
        throw FormatError("empty y4m file: " + path.string());

    std::istringstream tokens(header);
    std::string magic;
    tokens >> magic;
    if (magic != kY4mMagic)
        throw FormatError("malformed y4m header (missing YUV4MPEG2 magic): " + path.string());

    int width = 0, height = 0;
    FrameRate fps{};
    std::string tok;
    while (tokens >> tok) {
        switch (tok[0]) {
        case 'W':
            width = std::atoi(tok.c_str() + 1);
            break;
        case 'H':
            height = std::atoi(tok.c_str() + 1);
            break;
        case 'F': {
            unsigned num = 0, den = 0;
            if (std::sscanf(tok.c_str() + 1, "%u:%u", &num, &den) != 2 || num == 0 || den == 0)
                throw FormatError("malformed y4m frame-rate token '" + tok + "'");
            fps = FrameRate{num, den};
            break;
        }
        case 'C':
            if (!is_supported_chroma(tok.substr(1)))
                throw FormatError("unsupported chroma subsampling or bit depth '" + tok +
                                  "' (only 8-bit 4:2:0 is supported)");
            break;
        case 'I':
        case 'A':
        case 'X':
            std::cerr << "stfilter: warning: ignoring y4m header token '" << tok << "'\n";
            break;
        default:
            std::cerr << "stfilter: warning: ignoring unknown y4m header token '" << tok << "'\n";
            break;
        }
    }
    if (width <= 0 || height <= 0)
        throw FormatError("malformed y4m header (missing or bad W/H): " + path.string());
    if (fps.num == 0)
        throw FormatError("malformed y4m header (missing F token): " + path.string());

    VideoVolume probe;
    probe.width = width;
    probe.height = height;
    size_t ysize = probe.luma_samples_per_frame();
    size_t csize = probe.chroma_samples_per_frame();

    std::vector<uint8_t> ybuf, cbbuf, crbuf;
    std::string frame_line;
    int frames = 0;
    while (read_line(in, frame_line)) {
        if (frame_line.substr(0, 5) != "FRAME")
            throw FormatError("malformed y4m: expected FRAME marker before frame " +
                              std::to_string(frames));
        size_t base_y = ybuf.size(), base_c = cbbuf.size();
        ybuf.resize(base_y + ysize);
        cbbuf.resize(base_c + csize);
        crbuf.resize(base_c + csize);
        read_exact(in, ybuf.data() + base_y, ysize, "luma plane");
        read_exact(in, cbbuf.data() + base_c, csize, "Cb plane");
        read_exact(in, crbuf.data() + base_c, csize, "Cr plane");
        ++frames;
    }
    if (frames == 0)
        throw FormatError("empty video rejected: " + path.string() + " has no frames");

    VideoVolume v;
    v.width = width;
    v.height = height;
    v.frames = frames;
    v.fps = fps;
    v.luma = std::move(ybuf);
    v.cb = std::move(cbbuf);
    v.cr = std::move(crbuf);
    v.validate();
    return v;
}

void write_exact(std::ostream& out, const uint8_t* src, size_t count) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(count));
}

}  // namespace

VideoVolume read_video(const std::filesystem::path& path, VideoFormat format,
                       const std::optional<RawDims>& dims) {
    if (!std::filesystem::exists(path))
        throw IoError("no such file: " + path.string());
    if (format == VideoFormat::kY4m)
        return read_y4m(path);
    if (!dims)
        throw DataError("raw yuv input requires explicit dimensions and frame rate");
    return read_raw(path, *dims);
}

void write_video(const VideoVolume& v, const std::filesystem::path& path, VideoFormat format) {
    v.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");

    if (format == VideoFormat::kY4m) {
        FrameRate fr = v.fps.reduced();
        out << kY4mMagic << " W" << v.width << " H" << v.height << " F" << fr.num << ":" << fr.den
            << " Ip A1:1 C420\n";
    }
    size_t ysize = v.luma_samples_per_frame();
    size_t csize = v.chroma_samples_per_frame();
    for (int t = 0; t < v.frames; ++t) {
        if (format == VideoFormat::kY4m)
            out << "FRAME\n";
        write_exact(out, v.luma.data() + static_cast<size_t>(t) * ysize, ysize);
        write_exact(out, v.cb.data() + static_cast<size_t>(t) * csize, csize);
        write_exact(out, v.cr.data() + static_cast<size_t>(t) * csize, csize);
    }
    out.flush();
    if (!out)
        throw IoError("write failed: " + path.string());
}

double mean_luma(const VideoVolume& v) {
    v.validate();
    double sum = 0.0;
    for (uint8_t s : v.luma)
        sum += s;
    return sum / static_cast<double>(v.luma.size());
}

double global_contrast(const VideoVolume& v) {
    v.validate();
    uint8_t lo = 255, hi = 0;
    double sum = 0.0;
    for (uint8_t s : v.luma) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        sum += s;
    }
    double mean = sum / static_cast<double>(v.luma.size());
    if (mean <= 0.0)
        throw DataError("contrast undefined for a zero-mean volume");
    return (static_cast<double>(hi) - lo) / mean;
}

}  // namespace stf
