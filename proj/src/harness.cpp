#include "stfilter/harness.hpp"

#include <sys/wait.h>

#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "stfilter/pruning.hpp"
#include "stfilter/temporal.hpp"

namespace stf {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep))
        out.push_back(field);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad " + what + ": '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    double v = parse_double(s, what);
    if (v != std::floor(v))
        throw ConfigError(what + " must be an integer, got '" + s + "'");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "1" || s == "true" || s == "yes" || s == "on")
        return true;
    if (s == "0" || s == "false" || s == "no" || s == "off")
        return false;
    throw ConfigError("bad " + what + ": '" + s + "' (expected true/false)");
}

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// {placeholder} expansion; unknown names are an error so typos fail loudly.
std::string expand_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        size_t close = tmpl.find('}', i);
        if (close == std::string::npos)
            throw ConfigError("unterminated '{' in command template: " + tmpl);
        std::string name = tmpl.substr(i + 1, close - i - 1);
        auto it = vars.find(name);
        if (it == vars.end())
            throw ConfigError("unknown placeholder {" + name + "} in template: " + tmpl);
        out += it->second;
        i = close + 1;
    }
    return out;
}

int run_command(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    if (rc == -1)
        return -1;
    if (WIFEXITED(rc))
        return WEXITSTATUS(rc);
    return 128;  // killed by a signal
}

std::vector<double> read_energy_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open energy log " + path.string());
    std::vector<double> samples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty())
            continue;
        try {
            size_t pos = 0;
            double v = std::stod(t, &pos);
            if (pos != t.size())
                throw std::invalid_argument(t);
            samples.push_back(v);
        } catch (const std::exception&) {
            throw DataError("bad energy value '" + t + "' on line " + std::to_string(line_no) +
                            " of " + path.string());
        }
    }
    return samples;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "\"\"";
        else
            out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

std::string format_beta(double beta) {
    return fmt_g(beta);
}

std::string tuple_id(const std::string& video, double beta, int factor, int crf) {
    return video + "_b" + format_beta(beta) + "_x" + std::to_string(factor) + "_crf" +
           std::to_string(crf);
}

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());

    ExperimentConfig cfg;
    cfg.betas.clear();
    cfg.factors.clear();

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));

        if (key == "video") {
            // name:path[:WxH@fps]
            size_t first = value.find(':');
            if (first == std::string::npos)
                throw ConfigError("video entry needs 'name:path[:WxH@fps]', got '" + value + "'");
            VideoSource src;
            src.name = trim(value.substr(0, first));
            std::string rest = value.substr(first + 1);
            size_t last = rest.rfind(':');
            if (last != std::string::npos) {
                int w = 0, h = 0;
                double fps = 0.0;
                if (std::sscanf(rest.c_str() + last + 1, "%dx%d@%lf", &w, &h, &fps) == 3) {
                    src.dims = RawDims{w, h, FrameRate::from_hz(fps)};
                    rest = rest.substr(0, last);
                }
            }
            src.path = trim(rest);
            cfg.videos.push_back(std::move(src));
        } else if (key == "betas") {
            for (const std::string& f : split(value, ','))
                cfg.betas.push_back(parse_double(trim(f), "beta"));
        } else if (key == "factors") {
            for (const std::string& f : split(value, ','))
                cfg.factors.push_back(parse_int(trim(f), "factor"));
        } else if (key == "crfs") {
            for (const std::string& f : split(value, ','))
                cfg.crfs.push_back(parse_int(trim(f), "crf"));
        } else if (key == "encoder") {
            cfg.encoder_template = value;
        } else if (key == "decoder") {
            cfg.decoder_template = value;
        } else if (key == "energy_log") {
            cfg.energy_log_template = value;
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "quality_csv") {
            cfg.quality_csv = value;
        } else if (key == "rel_ci_width") {
            cfg.rel_ci_width = parse_double(value, "rel_ci_width");
        } else if (key == "confidence") {
            cfg.confidence = parse_double(value, "confidence");
        } else if (key == "min_decode_reps") {
            cfg.min_decode_reps = parse_int(value, "min_decode_reps");
        } else if (key == "max_decode_reps") {
            cfg.max_decode_reps = parse_int(value, "max_decode_reps");
        } else if (key == "workers") {
            cfg.workers = parse_int(value, "workers");
        } else if (key == "normalize") {
            cfg.normalize = parse_bool(value, "normalize");
        } else if (key == "allow_any_factor") {
            cfg.allow_any_factor = parse_bool(value, "allow_any_factor");
        } else {
            throw ConfigError("unknown config key '" + key + "' on line " +
                              std::to_string(line_no));
        }
    }
    if (cfg.betas.empty())
        cfg.betas.push_back(0.0);
    if (cfg.factors.empty())
        cfg.factors.push_back(1);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (videos.empty())
        throw ConfigError("config lists no videos");
    std::set<std::string> names;
    for (const VideoSource& v : videos) {
        if (v.name.empty() || v.name.find_first_of(",:|{} \t") != std::string::npos)
            throw ConfigError("video name '" + v.name + "' is empty or contains ',:|{}' or space");
        if (!names.insert(v.name).second)
            throw ConfigError("duplicate video name '" + v.name + "'");
        if (format_from_extension(v.path) == VideoFormat::kRawYuv && !v.dims)
            throw ConfigError("raw video '" + v.name + "' needs WxH@fps dimensions");
    }
    if (crfs.empty())
        throw ConfigError("config lists no crf values");
    if (betas.empty())
        throw ConfigError("config lists no beta values");
    for (double b : betas)
        if (!(b >= 0))
            throw ConfigError("beta values must be >= 0");
    for (int f : factors) {
        if (f < 1)
            throw ConfigError("downscale factors must be >= 1");
        if (!allow_any_factor && f != 1 && f != 2 && f != 4)
            throw ConfigError("factor " + std::to_string(f) +
                              " is outside {1, 2, 4}; set allow_any_factor = true to override");
    }
    for (const char* ph : {"{input}", "{output}", "{crf}"})
        if (encoder_template.find(ph) == std::string::npos)
            throw ConfigError(std::string("encoder template misses the required ") + ph +
                              " placeholder");
    if (!decoder_template.empty()) {
        if (decoder_template.find("{input}") == std::string::npos)
            throw ConfigError("decoder template misses the required {input} placeholder");
        if (energy_log_template.find("{id}") == std::string::npos)
            throw ConfigError("energy log template misses the required {id} placeholder");
        if (min_decode_reps < 2)
            throw ConfigError("min_decode_reps must be >= 2 (the CI needs two samples)");
        if (max_decode_reps < min_decode_reps)
            throw ConfigError("max_decode_reps must be >= min_decode_reps");
    }
    if (output_dir.empty())
        throw ConfigError("output_dir is required");
    if (!(rel_ci_width > 0) || !(rel_ci_width < 1))
        throw ConfigError("rel_ci_width must be in (0, 1)");
    if (!(confidence > 0) || !(confidence < 1))
        throw ConfigError("confidence must be in (0, 1)");
    if (workers < 1)
        throw ConfigError("workers must be >= 1");
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    os << "allow_any_factor=" << allow_any_factor << "\n";
    os << "betas=";
    for (size_t i = 0; i < betas.size(); ++i)
        os << (i ? "," : "") << fmt_full(betas[i]);
    os << "\nconfidence=" << fmt_full(confidence) << "\ncrfs=";
    for (size_t i = 0; i < crfs.size(); ++i)
        os << (i ? "," : "") << crfs[i];
    os << "\ndecoder=" << decoder_template;
    os << "\nencoder=" << encoder_template;
    os << "\nenergy_log=" << energy_log_template;
    os << "\nfactors=";
    for (size_t i = 0; i < factors.size(); ++i)
        os << (i ? "," : "") << factors[i];
    os << "\nmax_decode_reps=" << max_decode_reps;
    os << "\nmin_decode_reps=" << min_decode_reps;
    os << "\nnormalize=" << normalize;
    os << "\noutput_dir=" << output_dir.string();
    os << "\nquality_csv=" << quality_csv.string();
    os << "\nrel_ci_width=" << fmt_full(rel_ci_width);
    os << "\nvideos=";
    for (size_t i = 0; i < videos.size(); ++i) {
        const VideoSource& v = videos[i];
        os << (i ? ";" : "") << v.name << ":" << v.path.string();
        if (v.dims)
            os << ":" << v.dims->width << "x" << v.dims->height << "@" << fmt_full(v.dims->fps.hz());
    }
    os << "\nworkers=" << workers << "\n";
    return os.str();
}

std::string ExperimentConfig::hash() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_text())));
    return buf;
}

// ---------------------------------------------------------------------------
// Statistical validity

ValidityResult check_validity(const EnergySamples& e, double rel_width, double confidence) {
    const size_t n = e.samples.size();
    if (n < 2)
        throw DataError("energy validity check needs at least 2 samples, got " +
                        std::to_string(n));
    if (!(rel_width > 0) || !(confidence > 0) || !(confidence < 1))
        throw DataError("bad validity parameters");

    double sum = 0.0;
    for (double s : e.samples) {
        if (!(s > 0))
            throw DataError("energy samples must be > 0 (bitstream " + e.bitstream_id + ")");
        sum += s;
    }
    double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double s : e.samples)
        ss += (s - mean) * (s - mean);
    double stddev = std::sqrt(ss / static_cast<double>(n - 1));

    boost::math::students_t dist(static_cast<double>(n - 1));
    double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    double h = t * stddev / std::sqrt(static_cast<double>(n));

    ValidityResult r;
    r.mean = mean;
    r.half_width = h;
    r.n = static_cast<int>(n);
    r.valid = h <= rel_width * mean;
    return r;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json record_to_json(const TupleRecord& r) {
    json j;
    j["video"] = r.video;
    j["beta"] = r.beta;
    j["factor"] = r.factor;
    j["crf"] = r.crf;
    j["status"] = r.status;
    j["error"] = r.error;
    j["source"] = r.source;
    j["bitstream"] = r.bitstream;
    j["bitstream_bytes"] = r.bitstream_bytes;
    j["frames"] = r.frames;
    j["fps_num"] = r.fps.num;
    j["fps_den"] = r.fps.den;
    j["bitrate_bps"] = r.bitrate_bps;
    j["energy_samples"] = r.energy_samples;
    j["energy_j"] = r.energy_j;
    j["energy_valid"] = r.energy_valid;
    j["encoder_cmd"] = r.encoder_cmd;
    return j;
}

TupleRecord record_from_json(const json& j) {
    TupleRecord r;
    r.video = j.at("video").get<std::string>();
    r.beta = j.at("beta").get<double>();
    r.factor = j.at("factor").get<int>();
    r.crf = j.at("crf").get<int>();
    r.status = j.at("status").get<std::string>();
    r.error = j.value("error", "");
    r.source = j.value("source", "");
    r.bitstream = j.value("bitstream", "");
    r.bitstream_bytes = j.value("bitstream_bytes", uint64_t{0});
    r.frames = j.value("frames", 0);
    r.fps = FrameRate{j.value("fps_num", 0u), j.value("fps_den", 1u)};
    r.bitrate_bps = j.value("bitrate_bps", 0.0);
    r.energy_samples = j.value("energy_samples", std::vector<double>{});
    r.energy_j = j.value("energy_j", 0.0);
    r.energy_valid = j.value("energy_valid", false);
    r.encoder_cmd = j.value("encoder_cmd", "");
    return r;
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    Manifest m;
    m.config_hash = j.value("config_hash", "");
    if (j.contains("tuples"))
        for (auto& [id, rec] : j.at("tuples").items())
            m.tuples[id] = record_from_json(rec);
    return m;
}

void Manifest::save(const std::filesystem::path& path) const {
    json j;
    j["config_hash"] = config_hash;
    json tj = json::object();
    for (const auto& [id, rec] : tuples)
        tj[id] = record_to_json(rec);
    j["tuples"] = std::move(tj);

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out)
        throw IoError("cannot write manifest " + tmp.string());
    out << j.dump(2) << "\n";
    out.flush();
    if (!out)
        throw IoError("write failed: " + tmp.string());
    out.close();
    std::filesystem::rename(tmp, path);
}

size_t Manifest::failed_count() const {
    size_t n = 0;
    for (const auto& [id, rec] : tuples)
        n += rec.status == "failed" ? 1 : 0;
    return n;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct Job {
    const VideoSource* src = nullptr;
    double beta = 0.0;
    int factor = 1;
    std::vector<int> crfs;  // still to produce
    std::string pre_id;
    std::filesystem::path pre_path;
};

class VolumeCache {
public:
    std::shared_ptr<const VideoVolume> get(const VideoSource& src) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(src.name);
        if (it != cache_.end())
            return it->second;
        auto vol = std::make_shared<VideoVolume>(
            read_video(src.path, format_from_extension(src.path), src.dims));
        cache_.emplace(src.name, vol);
        return vol;
    }

private:
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<const VideoVolume>> cache_;
};

void write_results_csv(const std::filesystem::path& path, const Manifest& man) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "config_hash,video,beta,factor,crf,status,frames,fps,bitstream_bytes,bitrate_bps,"
           "energy_j,energy_n,energy_valid,error,encoder_cmd\n";
    for (const auto& [id, r] : man.tuples) {
        out << man.config_hash << ',' << r.video << ',' << format_beta(r.beta) << ',' << r.factor
            << ',' << r.crf << ',' << r.status << ',' << r.frames << ',' << fmt_g(r.fps.hz())
            << ',' << r.bitstream_bytes << ',' << fmt_full(r.bitrate_bps) << ','
            << (r.energy_samples.empty() ? std::string() : fmt_full(r.energy_j)) << ','
            << r.energy_samples.size() << ',' << (r.energy_valid ? 1 : 0) << ','
            << csv_escape(r.error) << ',' << csv_escape(r.encoder_cmd) << '\n';
    }
    if (!out.flush())
        throw IoError("write failed: " + path.string());
}

}  // namespace

Manifest run_pipeline(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();

    std::filesystem::path manifest_path = cfg.output_dir / "manifest.json";
    Manifest man;
    if (std::filesystem::exists(manifest_path)) {
        man = Manifest::load(manifest_path);
        if (man.config_hash != cfg.hash())
            throw ConfigError("manifest " + manifest_path.string() +
                              " was produced by a different config (hash " + man.config_hash +
                              " vs " + cfg.hash() + "); use a fresh output_dir");
    }
    man.config_hash = cfg.hash();

    // One job per (video, beta, factor); its tuples add the crf sweep.
    std::vector<Job> jobs;
    for (const VideoSource& src : cfg.videos)
        for (double beta : cfg.betas)
            for (int factor : cfg.factors) {
                Job job;
                job.src = &src;
                job.beta = beta;
                job.factor = factor;
                job.pre_id = src.name + "_b" + format_beta(beta) + "_x" + std::to_string(factor);
                job.pre_path = cfg.output_dir / (job.pre_id + ".y4m");
                for (int crf : cfg.crfs)
                    if (!man.tuples.count(tuple_id(src.name, beta, factor, crf)) ||
                        man.tuples.at(tuple_id(src.name, beta, factor, crf)).status != "done")
                        job.crfs.push_back(crf);
                if (!job.crfs.empty())
                    jobs.push_back(std::move(job));
            }

    if (opt.dry_run) {
        std::cout << "# command plan for config " << cfg.hash() << "\n";
        for (const Job& job : jobs) {
            std::cout << "preprocess " << job.src->name << " beta=" << format_beta(job.beta)
                      << " factor=" << job.factor << " -> " << job.pre_path.string() << "\n";
            for (int crf : job.crfs) {
                std::string id = tuple_id(job.src->name, job.beta, job.factor, crf);
                std::map<std::string, std::string> vars{
                    {"input", job.pre_path.string()},
                    {"output", (cfg.output_dir / (id + ".bin")).string()},
                    {"crf", std::to_string(crf)},
                    {"video", job.src->name},
                    {"beta", format_beta(job.beta)},
                    {"factor", std::to_string(job.factor)},
                    {"width", "?"},
                    {"height", "?"},
                    {"fps", "?"},
                    {"fps_num", "?"},
                    {"fps_den", "?"},
                    {"frames", "?"},
                    {"output_dir", cfg.output_dir.string()},
                    {"id", id}};
                std::cout << "encode: " << expand_template(cfg.encoder_template, vars) << "\n";
                if (!cfg.decoder_template.empty()) {
                    vars["input"] = vars["output"];
                    vars["log"] = expand_template(
                        cfg.energy_log_template,
                        {{"id", id}, {"output_dir", cfg.output_dir.string()}});
                    std::cout << "decode x" << cfg.min_decode_reps << "+: "
                              << expand_template(cfg.decoder_template, vars) << "\n";
                }
            }
        }
        std::cout << "# " << jobs.size() << " job(s) pending\n";
        return man;
    }

    std::filesystem::create_directories(cfg.output_dir);

    VolumeCache cache;
    std::mutex man_mu;
    auto commit = [&](const std::string& id, TupleRecord rec) {
        std::lock_guard<std::mutex> lock(man_mu);
        man.tuples[id] = std::move(rec);
        man.save(manifest_path);
    };

    auto run_job = [&](const Job& job) {
        TupleRecord base;
        base.video = job.src->name;
        base.beta = job.beta;
        base.factor = job.factor;

        // Preprocess once per job: filter first, then temporal downscale.
        std::string prep_error;
        int frames = 0;
        FrameRate fps;
        int width = 0, height = 0;
        try {
            std::shared_ptr<const VideoVolume> vol = cache.get(*job.src);
            if (!std::filesystem::exists(job.pre_path)) {
                VideoVolume work = *vol;
                if (job.beta > 0)
                    work = filter_video(work, CsfModel{}, job.beta, cfg.normalize);
                if (job.factor > 1)
                    work = downscale_temporal(
                        work, DownscaleSpec{job.factor, cfg.allow_any_factor});
                write_video(work, job.pre_path, VideoFormat::kY4m);
                frames = work.frames;
                fps = work.fps;
                width = work.width;
                height = work.height;
            } else {
                VideoVolume pre = read_video(job.pre_path, VideoFormat::kY4m);
                frames = pre.frames;
                fps = pre.fps;
                width = pre.width;
                height = pre.height;
            }
        } catch (const std::exception& e) {
            prep_error = e.what();
        }

        for (int crf : job.crfs) {
            std::string id = tuple_id(job.src->name, job.beta, job.factor, crf);
            TupleRecord rec = base;
            rec.crf = crf;
            rec.source = job.pre_path.string();
            rec.frames = frames;
            rec.fps = fps;

            if (!prep_error.empty()) {
                rec.status = "failed";
                rec.error = "preprocessing failed: " + prep_error;
                commit(id, std::move(rec));
                continue;
            }

            try {
                std::filesystem::path bitstream = cfg.output_dir / (id + ".bin");
                std::map<std::string, std::string> vars{
                    {"input", job.pre_path.string()},
                    {"output", bitstream.string()},
                    {"crf", std::to_string(crf)},
                    {"video", job.src->name},
                    {"beta", format_beta(job.beta)},
                    {"factor", std::to_string(job.factor)},
                    {"width", std::to_string(width)},
                    {"height", std::to_string(height)},
                    {"fps", fmt_g(fps.hz())},
                    {"fps_num", std::to_string(fps.num)},
                    {"fps_den", std::to_string(fps.den)},
                    {"frames", std::to_string(frames)},
                    {"output_dir", cfg.output_dir.string()},
                    {"id", id}};

                rec.encoder_cmd = expand_template(cfg.encoder_template, vars);
                rec.bitstream = bitstream.string();
                int rc = run_command(rec.encoder_cmd);
                if (rc != 0) {
                    rec.status = "failed";
                    rec.error = "encoder exited with status " + std::to_string(rc);
                    commit(id, std::move(rec));
                    continue;
                }
                std::error_code ec;
                uintmax_t bytes = std::filesystem::file_size(bitstream, ec);
                if (ec) {
                    rec.status = "failed";
                    rec.error = "encoder produced no output bitstream";
                    commit(id, std::move(rec));
                    continue;
                }
                rec.bitstream_bytes = bytes;
                rec.bitrate_bps = 8.0 * static_cast<double>(bytes) * fps.hz() / frames;

                if (!cfg.decoder_template.empty()) {
                    std::filesystem::path log = expand_template(
                        cfg.energy_log_template,
                        {{"id", id}, {"output_dir", cfg.output_dir.string()}});
                    std::filesystem::remove(log);
                    vars["input"] = bitstream.string();
                    vars["log"] = log.string();
                    std::string decode_cmd = expand_template(cfg.decoder_template, vars);

                    bool decode_failed = false;
                    ValidityResult vr;
                    int reps = 0;
                    while (reps < cfg.max_decode_reps) {
                        int drc = run_command(decode_cmd);
                        if (drc != 0) {
                            rec.status = "failed";
                            rec.error = "decoder exited with status " + std::to_string(drc);
                            decode_failed = true;
                            break;
                        }
                        ++reps;
                        if (reps >= cfg.min_decode_reps) {
                            std::vector<double> samples = read_energy_log(log);
                            if (samples.size() >= 2) {
                                vr = check_validity(EnergySamples{id, samples}, cfg.rel_ci_width,
                                                    cfg.confidence);
                                rec.energy_samples = std::move(samples);
                                if (vr.valid)
                                    break;
                            }
                        }
                    }
                    if (decode_failed) {
                        commit(id, std::move(rec));
                        continue;
                    }
                    if (rec.energy_samples.size() < 2) {
                        rec.status = "failed";
                        rec.error = "energy log holds " +
                                    std::to_string(rec.energy_samples.size()) +
                                    " sample(s) after " + std::to_string(reps) + " decode runs";
                        commit(id, std::move(rec));
                        continue;
                    }
                    rec.energy_j = vr.mean;
                    rec.energy_valid = vr.valid;
                    if (!vr.valid)
                        rec.error = "energy mean did not reach statistical validity after " +
                                    std::to_string(reps) + " decode runs";
                }

                rec.status = "done";
                commit(id, std::move(rec));
            } catch (const std::exception& e) {
                rec.status = "failed";
                rec.error = e.what();
                commit(id, std::move(rec));
            }
        }
    };

    if (cfg.workers <= 1 || jobs.size() <= 1) {
        for (const Job& job : jobs)
            run_job(job);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= jobs.size())
                    return;
                run_job(jobs[i]);
            }
        };
        std::vector<std::thread> pool;
        size_t nthreads = std::min<size_t>(cfg.workers, jobs.size());
        for (size_t i = 0; i < nthreads; ++i)
            pool.emplace_back(worker);
        for (std::thread& t : pool)
            t.join();
    }

    man.save(manifest_path);
    write_results_csv(cfg.output_dir / "results.csv", man);
    return man;
}

// ---------------------------------------------------------------------------
// Collection

std::vector<RdCurve> collect_results(const Manifest& man,
                                     const std::filesystem::path& quality_csv) {
    std::ifstream in(quality_csv);
    if (!in)
        throw IoError("cannot open quality CSV " + quality_csv.string());

    std::string line;
    if (!std::getline(in, line))
        throw FormatError("empty quality CSV: " + quality_csv.string());
    std::vector<std::string> header = split(trim(line), ',');
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i)
        col[trim(header[i])] = static_cast<int>(i);
    for (const char* required : {"video", "beta", "factor", "crf", "quality"})
        if (!col.count(required))
            throw FormatError("quality CSV misses the '" + std::string(required) + "' column");

    std::map<std::string, double> quality;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty())
            continue;
        std::vector<std::string> f = split(t, ',');
        if (f.size() < header.size())
            throw FormatError("quality CSV line " + std::to_string(line_no) + " has " +
                              std::to_string(f.size()) + " fields, expected " +
                              std::to_string(header.size()));
        auto num = [&](const char* name) {
            const std::string& s = f[col[name]];
            try {
                return std::stod(trim(s));
            } catch (const std::exception&) {
                throw FormatError("bad " + std::string(name) + " '" + s + "' on line " +
                                  std::to_string(line_no));
            }
        };
        std::string key = tuple_id(trim(f[col["video"]]), num("beta"),
                                   static_cast<int>(num("factor")), static_cast<int>(num("crf")));
        if (!quality.emplace(key, num("quality")).second)
            throw DataError("duplicate quality row for " + key);
    }

    std::vector<std::string> missing;
    std::set<std::string> used;
    // curve key -> (label, crf-ordered points)
    std::map<std::string, RdCurve> curves;
    for (const auto& [id, rec] : man.tuples) {
        if (rec.status != "done") {
            std::cerr << "stfilter: warning: skipping failed tuple " << id << "\n";
            continue;
        }
        auto q = quality.find(id);
        if (q == quality.end()) {
            missing.push_back(id);
            continue;
        }
        used.insert(id);
        if (!rec.energy_samples.empty() && !rec.energy_valid)
            throw DataError("tuple " + id + " has energy samples without statistical validity");

        RdPoint p;
        p.bitrate = rec.bitrate_bps;
        if (rec.energy_valid)
            p.energy = rec.energy_j;
        p.quality = q->second;
        p.crf = rec.crf;

        std::string label =
            rec.video + "_x" + std::to_string(rec.factor) + "_b" + format_beta(rec.beta);
        auto [it, inserted] = curves.try_emplace(label, RdCurve{label, {}});
        it->second.points.push_back(p);
    }
    if (!missing.empty()) {
        std::string list;
        for (const std::string& id : missing)
            list += (list.empty() ? "" : ", ") + id;
        throw DataError("quality CSV misses rows for: " + list);
    }
    for (const auto& [key, q] : quality)
        if (!used.count(key))
            std::cerr << "stfilter: warning: quality row " << key
                      << " matches no manifest tuple\n";

    std::vector<RdCurve> out;
    for (auto& [label, curve] : curves) {
        std::sort(curve.points.begin(), curve.points.end(),
                  [](const RdPoint& a, const RdPoint& b) { return a.crf < b.crf; });
        // Quality must sweep strictly in one direction along the crf axis.
        if (curve.points.size() >= 2) {
            bool inc = true, dec = true;
            for (size_t i = 1; i < curve.points.size(); ++i) {
                inc = inc && curve.points[i].quality > curve.points[i - 1].quality;
                dec = dec && curve.points[i].quality < curve.points[i - 1].quality;
            }
            if (!inc && !dec)
                throw DataError("curve " + label +
                                " has non-monotone quality across the crf sweep");
        }
        out.push_back(std::move(curve));
    }
    return out;
}

}  // namespace stf
