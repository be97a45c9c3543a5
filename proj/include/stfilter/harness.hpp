#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stfilter/bd.hpp"
#include "stfilter/video.hpp"

namespace stf {

struct VideoSource {
    std::string name;
    std::filesystem::path path;
    std::optional<RawDims> dims;  // required for raw .yuv inputs
};

// Experiment description, loaded from a flat key = value file (see the
// README for the schema). Encode/decode commands are user templates; the
// harness never hardcodes a codec.
struct ExperimentConfig {
    std::vector<VideoSource> videos;
    std::vector<double> betas{0.0};
    std::vector<int> factors{1};
    std::vector<int> crfs;

    // Placeholders: encoder needs {input} {output} {crf}; decoder needs
    // {input}; the energy log template needs {id}. Optional everywhere:
    // {video} {beta} {factor} {width} {height} {fps} {fps_num} {fps_den}
    // {frames} {output_dir} {log}.
    std::string encoder_template;
    std::string decoder_template;  // empty = skip decoding/energy measurement
    std::string energy_log_template = "{output_dir}/{id}.energy";

    std::filesystem::path output_dir;
    std::filesystem::path quality_csv;  // consumed by collect, not by run

    double rel_ci_width = 0.02;  // statistical validity: CI half-width / mean
    double confidence = 0.95;
    int min_decode_reps = 5;
    int max_decode_reps = 30;
    int workers = 1;
    bool normalize = false;         // pass the contrast-normalized mask mode through
    bool allow_any_factor = false;

    static ExperimentConfig load(const std::filesystem::path& path);
    void validate() const;

    // Canonical serialization; its FNV-1a hash stamps manifests and results.
    std::string canonical_text() const;
    std::string hash() const;
};

// Repeated energy readings for one bitstream, one joule value per decode run.
struct EnergySamples {
    std::string bitstream_id;
    std::vector<double> samples;
};

struct ValidityResult {
    bool valid = false;
    double mean = 0.0;        // point estimate, meaningful when valid
    double half_width = 0.0;  // two-sided Student-t CI half-width
    int n = 0;
};

// Student-t confidence interval on the mean; valid iff half_width / mean is
// within rel_width. Needs at least two samples.
ValidityResult check_validity(const EnergySamples& e, double rel_width, double confidence);

struct TupleRecord {
    std::string video;
    double beta = 0.0;
    int factor = 1;
    int crf = 0;

    std::string status;  // "done" | "failed"
    std::string error;

    std::string source;     // preprocessed video fed to the encoder
    std::string bitstream;
    uint64_t bitstream_bytes = 0;
    int frames = 0;
    FrameRate fps;
    double bitrate_bps = 0.0;

    std::vector<double> energy_samples;
    double energy_j = 0.0;  // mean, when energy_valid
    bool energy_valid = false;

    std::string encoder_cmd;  // command line actually executed
};

// Persistent record of everything a run produced; completed tuples are
// skipped on re-runs. Keyed by tuple id, iteration order is deterministic.
struct Manifest {
    std::string config_hash;
    std::map<std::string, TupleRecord> tuples;

    static Manifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    size_t failed_count() const;
};

struct RunOptions {
    bool dry_run = false;  // print the command plan, execute nothing
};

std::string tuple_id(const std::string& video, double beta, int factor, int crf);

// Executes filter -> downscale -> encode -> decode-with-energy-log for every
// (video, beta, factor, crf) tuple, appends everything to the manifest and
// regenerates <output_dir>/results.csv. Subprocess failures mark the tuple
// failed and the batch continues; systemic I/O problems throw IoError.
Manifest run_pipeline(const ExperimentConfig& cfg, const RunOptions& opt = {});

// Joins the manifest with the externally produced quality CSV
// (header `video,beta,factor,crf,quality`) into one RdCurve per
// (video, beta, factor). Missing quality rows, invalid energy and
// non-monotone quality along the crf sweep are errors.
std::vector<RdCurve> collect_results(const Manifest& man,
                                     const std::filesystem::path& quality_csv);

// "%g"-style canonical beta formatting used in tuple ids, labels and joins.
std::string format_beta(double beta);

}  // namespace stf
