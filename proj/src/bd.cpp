#include "stfilter/bd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stf {

AkimaInterpolant::AkimaInterpolant(std::vector<double> xs, std::vector<double> ys)
    : x_(std::move(xs)), y_(std::move(ys)) {
    const size_t n = x_.size();
    if (n < 4)
        throw DataError("Akima interpolation needs at least 4 points, got " + std::to_string(n));
    if (y_.size() != n)
        throw DataError("Akima: x and y counts differ");
    for (size_t i = 1; i < n; ++i) {
        if (x_[i] == x_[i - 1])
            throw DataError("Akima: duplicate x value " + std::to_string(x_[i]));
        if (x_[i] < x_[i - 1])
            throw DataError("Akima: x values must be strictly increasing");
    }

    // d[i+2] is the chord slope of segment i; two extrapolated slopes extend
    // each end.
    std::vector<double> d(n + 3);
    for (size_t i = 0; i + 1 < n; ++i)
        d[i + 2] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    d[1] = 2.0 * d[2] - d[3];
    d[0] = 2.0 * d[1] - d[2];
    d[n + 1] = 2.0 * d[n] - d[n - 1];
    d[n + 2] = 2.0 * d[n + 1] - d[n];

    t_.resize(n);
    for (size_t i = 0; i < n; ++i) {
        // Node i sits between chord slopes d[i+1] (left) and d[i+2] (right).
        double w_left = std::abs(d[i + 3] - d[i + 2]);
        double w_right = std::abs(d[i + 1] - d[i]);
        double denom = w_left + w_right;
        t_[i] = denom > 0.0 ? (w_left * d[i + 1] + w_right * d[i + 2]) / denom
                            : 0.5 * (d[i + 1] + d[i + 2]);
    }
}

double AkimaInterpolant::operator()(double x) const {
    // Segment lookup; values past the ends use the boundary cubic.
    size_t hi = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    size_t i = hi == 0 ? 0 : std::min(hi - 1, x_.size() - 2);

    double h = x_[i + 1] - x_[i];
    double s = (x - x_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * t_[i] + h01 * y_[i + 1] + h11 * h * t_[i + 1];
}

namespace {

struct CanonicalCurve {
    std::vector<double> quality;   // canonical: larger = better
    std::vector<double> log_cost;  // log10 of bitrate or energy
};

const char* metric_name(CostMetric m) {
    return m == CostMetric::kRate ? "rate" : "energy";
}

CanonicalCurve canonicalize(const RdCurve& curve, CostMetric metric,
                            QualityOrientation orientation) {
    if (curve.points.size() < 4)
        throw DataError("curve '" + curve.label + "' has " +
                        std::to_string(curve.points.size()) + " points; BD needs at least 4");

    std::vector<std::pair<double, double>> qc;
    qc.reserve(curve.points.size());
    for (const RdPoint& p : curve.points) {
        double cost;
        if (metric == CostMetric::kRate) {
            if (!(p.bitrate > 0))
                throw DataError("curve '" + curve.label + "' has a non-positive bitrate");
            cost = p.bitrate;
        } else {
            if (!p.energy)
                throw DataError("curve '" + curve.label +
                                "' has no decoding-energy values; BD-energy impossible");
            if (!(*p.energy > 0))
                throw DataError("curve '" + curve.label + "' has a non-positive energy");
            cost = *p.energy;
        }
        double q = orientation == QualityOrientation::kLowerBetter ? -p.quality : p.quality;
        qc.emplace_back(q, std::log10(cost));
    }
    std::sort(qc.begin(), qc.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < qc.size(); ++i)
        if (qc[i].first == qc[i - 1].first)
            throw DataError("curve '" + curve.label + "' has duplicate quality values");

    CanonicalCurve c;
    for (const auto& [q, lc] : qc) {
        c.quality.push_back(q);
        c.log_cost.push_back(lc);
    }
    return c;
}

// Composite Simpson on [a, b] with n (even) subintervals.
double simpson(const AkimaInterpolant& test, const AkimaInterpolant& ref, double a, double b,
               int n) {
    auto f = [&](double q) { return test(q) - ref(q); };
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

BdResult bd_delta(const RdCurve& test, const RdCurve& ref, CostMetric metric,
                  QualityOrientation orientation) {
    CanonicalCurve ct = canonicalize(test, metric, orientation);
    CanonicalCurve cr = canonicalize(ref, metric, orientation);

    double lo = std::max(ct.quality.front(), cr.quality.front());
    double hi = std::min(ct.quality.back(), cr.quality.back());
    if (!(lo < hi))
        throw DataError("no overlap between the quality ranges of '" + test.label + "' and '" +
                        ref.label + "' (" + metric_name(metric) + ")");

    AkimaInterpolant it(std::move(ct.quality), std::move(ct.log_cost));
    AkimaInterpolant ir(std::move(cr.quality), std::move(cr.log_cost));

    double avg_diff = simpson(it, ir, lo, hi, 1000) / (hi - lo);

    BdResult r;
    r.bd_percent = (std::pow(10.0, avg_diff) - 1.0) * 100.0;
    r.metric = metric;
    if (orientation == QualityOrientation::kLowerBetter) {
        r.quality_low = -hi;
        r.quality_high = -lo;
    } else {
        r.quality_low = lo;
        r.quality_high = hi;
    }
    return r;
}

BdSummary aggregate_bd(const std::vector<BdResult>& results) {
    if (results.empty())
        throw DataError("cannot aggregate an empty BD result list");
    BdSummary s;
    s.min = results.front().bd_percent;
    s.max = s.min;
    double sum = 0.0;
    for (const BdResult& r : results) {
        s.min = std::min(s.min, r.bd_percent);
        s.max = std::max(s.max, r.bd_percent);
        sum += r.bd_percent;
    }
    s.mean = sum / static_cast<double>(results.size());
    s.count = results.size();
    return s;
}

namespace {

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

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what, int line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("bad " + what + " '" + s + "' on CSV line " + std::to_string(line_no));
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::vector<RdCurve> load_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw FormatError("empty curve CSV: " + path.string());

    std::vector<std::string> header = split(trim(line), ',');
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i)
        col[trim(header[i])] = static_cast<int>(i);
    for (const char* required : {"label", "crf", "bitrate_bps", "quality"})
        if (!col.count(required))
            throw FormatError("curve CSV misses the '" + std::string(required) +
                              "' column: " + path.string());
    bool has_energy = col.count("energy_j") != 0;

    std::vector<RdCurve> curves;
    std::map<std::string, size_t> by_label;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty())
            continue;
        std::vector<std::string> f = split(t, ',');
        if (f.size() < header.size())
            throw FormatError("CSV line " + std::to_string(line_no) + " has " +
                              std::to_string(f.size()) + " fields, expected " +
                              std::to_string(header.size()));
        RdPoint p;
        std::string label = trim(f[col["label"]]);
        p.crf = static_cast<int>(parse_double(trim(f[col["crf"]]), "crf", line_no));
        p.bitrate = parse_double(trim(f[col["bitrate_bps"]]), "bitrate", line_no);
        p.quality = parse_double(trim(f[col["quality"]]), "quality", line_no);
        if (has_energy) {
            std::string e = trim(f[col["energy_j"]]);
            if (!e.empty())
                p.energy = parse_double(e, "energy", line_no);
        }
        auto [it, inserted] = by_label.try_emplace(label, curves.size());
        if (inserted)
            curves.push_back(RdCurve{label, {}});
        curves[it->second].points.push_back(p);
    }
    if (curves.empty())
        throw FormatError("curve CSV has no data rows: " + path.string());
    return curves;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<RdCurve>& curves) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "label,crf,bitrate_bps,energy_j,quality\n";
    for (const RdCurve& c : curves) {
        if (c.label.find(',') != std::string::npos)
            throw DataError("curve label '" + c.label + "' contains a comma");
        for (const RdPoint& p : c.points) {
            out << c.label << ',' << p.crf << ',' << fmt(p.bitrate) << ','
                << (p.energy ? fmt(*p.energy) : std::string()) << ',' << fmt(p.quality) << '\n';
        }
    }
    if (!out.flush())
        throw IoError("write failed: " + path.string());
}

void write_bd_report_csv(const std::filesystem::path& path, const std::vector<BdReportRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "test_label,ref_label,metric,bd_percent,q_low,q_high\n";
    char buf[160];
    for (const BdReportRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%.4f,%.6g,%.6g\n", r.test_label.c_str(),
                      r.ref_label.c_str(), metric_name(r.metric), r.result.bd_percent,
                      r.result.quality_low, r.result.quality_high);
        out << buf;
    }
    if (!out.flush())
        throw IoError("write failed: " + path.string());
}

}  // namespace stf
