#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stfilter/error.hpp"

namespace stf {

// One measured operating point of a configuration.
struct RdPoint {
    double bitrate = 0.0;                 // bits per second, > 0
    std::optional<double> energy;         // joules, > 0 when present
    double quality = 0.0;                 // orientation is configured per metric
    int crf = 0;                          // pass-through identifier for CSV round trips
};

struct RdCurve {
    std::string label;
    std::vector<RdPoint> points;
};

enum class CostMetric { kRate, kEnergy };

// GREED scores improve downwards, PSNR-like metrics upwards.
enum class QualityOrientation { kLowerBetter, kHigherBetter };

struct BdResult {
    double bd_percent = 0.0;   // negative = savings of `test` over `ref`
    double quality_low = 0.0;  // overlap bounds in the original quality units
    double quality_high = 0.0;
    CostMetric metric = CostMetric::kRate;
};

// C1 piecewise-cubic Akima interpolant through strictly increasing abscissae.
// Needs at least 4 points; slopes at the boundary come from the standard
// two-slope linear extrapolation. Evaluation outside [x_front, x_back]
// extrapolates with the boundary cubic.
class AkimaInterpolant {
public:
    AkimaInterpolant(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> t_;  // node tangents
};

// Average relative cost difference of `test` against `ref` at equal quality:
// log10(cost) is Akima-interpolated over quality (canonicalized so that
// better is larger), the difference is integrated with composite Simpson over
// the overlapping quality range, and the mean log offset maps to a percent
// via 10^d - 1.
BdResult bd_delta(const RdCurve& test, const RdCurve& ref, CostMetric metric,
                  QualityOrientation orientation);

struct BdSummary {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    size_t count = 0;
};

BdSummary aggregate_bd(const std::vector<BdResult>& results);

// CSV exchange format: header `label,crf,bitrate_bps,energy_j,quality`, one
// row per point, rows grouped into curves by label (first-seen order). An
// empty energy field means "not measured". No quoting; labels must not
// contain commas.
std::vector<RdCurve> load_curves_csv(const std::filesystem::path& path);
void write_curves_csv(const std::filesystem::path& path, const std::vector<RdCurve>& curves);

struct BdReportRow {
    std::string test_label;
    std::string ref_label;
    CostMetric metric = CostMetric::kRate;
    BdResult result;
};

// Header: `test_label,ref_label,metric,bd_percent,q_low,q_high`.
void write_bd_report_csv(const std::filesystem::path& path, const std::vector<BdReportRow>& rows);

}  // namespace stf
