#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "stfilter/error.hpp"

namespace stf {

// Frame rate kept as an exact rational so Y4M `F num:den` headers round trip.
struct FrameRate {
    uint32_t num = 0;
    uint32_t den = 1;

    double hz() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
    FrameRate reduced() const;

    // Accepts integral rates exactly; everything else is rationalized by
    // continued fractions (29.97 -> 2997/100).
    static FrameRate from_hz(double hz);

    bool operator==(const FrameRate&) const = default;
};

// Uncompressed 8-bit 4:2:0 video: a luma plane sequence plus half-resolution
// chroma. Planes are frame-major: sample (t, y, x) of the luma lives at
// luma[(t * height + y) * width + x]. Values are immutable by convention once
// a volume is built; all free functions below return new volumes.
struct VideoVolume {
    int width = 0;
    int height = 0;
    int frames = 0;
    FrameRate fps;
    int bit_depth = 8;  // only 8 supported in v1

    std::vector<uint8_t> luma;  // frames * height * width
    std::vector<uint8_t> cb;    // frames * chroma_height * chroma_width
    std::vector<uint8_t> cr;

    int chroma_width() const { return (width + 1) / 2; }
    int chroma_height() const { return (height + 1) / 2; }
    size_t luma_samples_per_frame() const { return static_cast<size_t>(width) * height; }
    size_t chroma_samples_per_frame() const {
        return static_cast<size_t>(chroma_width()) * chroma_height();
    }
    size_t frame_bytes() const { return luma_samples_per_frame() + 2 * chroma_samples_per_frame(); }

    uint8_t luma_at(int t, int y, int x) const {
        return luma[(static_cast<size_t>(t) * height + y) * width + x];
    }
    uint8_t& luma_at(int t, int y, int x) {
        return luma[(static_cast<size_t>(t) * height + y) * width + x];
    }

    // Zero-filled volume with consistent plane sizes.
    static VideoVolume create(int width, int height, int frames, FrameRate fps);

    // Throws DataError when any invariant is broken.
    void validate() const;

    bool operator==(const VideoVolume&) const = default;
};

enum class VideoFormat { kRawYuv, kY4m };

// Dimensions a headerless raw file cannot carry itself.
struct RawDims {
    int width = 0;
    int height = 0;
    FrameRate fps;
};

// ".y4m" -> kY4m, everything else -> kRawYuv.
VideoFormat format_from_extension(const std::filesystem::path& path);

// Raw files are planar I420, all Y then Cb then Cr per frame; `dims` is
// required for them. Y4M headers are parsed for W/H/F/C; interlacing and
// extension tokens are ignored with a warning. A partial trailing frame is an
// error, never a silent truncation.
VideoVolume read_video(const std::filesystem::path& path, VideoFormat format,
                       const std::optional<RawDims>& dims = std::nullopt);

void write_video(const VideoVolume& v, const std::filesystem::path& path, VideoFormat format);

// Arithmetic mean over every luma sample of the whole volume.
double mean_luma(const VideoVolume& v);

// Michelson-style global contrast (max - min) / mean over the whole volume.
// Throws DataError for a zero-mean volume.
double global_contrast(const VideoVolume& v);

}  // namespace stf
