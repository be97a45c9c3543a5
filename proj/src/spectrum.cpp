#include "stfilter/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace stf {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex g_planner_mutex;

class Plan {
public:
    Plan(int n_temp, int n_ver, int n_hor, std::complex<double>* data, int sign) {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        // FFTW_ESTIMATE keeps planning deterministic and never touches the data.
        plan_ = fftw_plan_dft_3d(n_temp, n_ver, n_hor, reinterpret_cast<fftw_complex*>(data),
                                 reinterpret_cast<fftw_complex*>(data), sign, FFTW_ESTIMATE);
        if (!plan_)
            throw ResourceError("fftw plan creation failed");
    }
    ~Plan() {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        fftw_destroy_plan(plan_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

}  // namespace

int next_pow2(int n) {
    if (n <= 0)
        throw DataError("next_pow2 requires n >= 1");
    int p = 1;
    while (p < n) {
        if (p > (1 << 30))
            throw ResourceError("dimension too large for power-of-two padding");
        p <<= 1;
    }
    return p;
}

Spectrum3D forward_fft(const VideoVolume& v, const FftLimits& limits) {
    v.validate();

    Spectrum3D sp;
    sp.n_temp = next_pow2(v.frames);
    sp.n_ver = next_pow2(v.height);
    sp.n_hor = next_pow2(v.width);
    sp.orig_frames = v.frames;
    sp.orig_height = v.height;
    sp.orig_width = v.width;
    sp.fps = v.fps;

    size_t total = static_cast<size_t>(sp.n_temp) * sp.n_ver * sp.n_hor;
    if (total > limits.max_coefficients)
        throw ResourceError("padded FFT size " + std::to_string(sp.n_temp) + "x" +
                            std::to_string(sp.n_ver) + "x" + std::to_string(sp.n_hor) +
                            " exceeds the budget of " + std::to_string(limits.max_coefficients) +
                            " coefficients");

    sp.coeff.assign(total, {0.0, 0.0});
    for (int t = 0; t < v.frames; ++t)
        for (int y = 0; y < v.height; ++y) {
            const uint8_t* row = v.luma.data() + (static_cast<size_t>(t) * v.height + y) * v.width;
            std::complex<double>* dst = sp.coeff.data() + sp.index(t, y, 0);
            for (int x = 0; x < v.width; ++x)
                dst[x] = {static_cast<double>(row[x]), 0.0};
        }

    Plan plan(sp.n_temp, sp.n_ver, sp.n_hor, sp.coeff.data(), FFTW_FORWARD);
    plan.execute();
    return sp;
}

std::vector<uint8_t> inverse_fft(const Spectrum3D& sp) {
    if (sp.coeff.size() != static_cast<size_t>(sp.n_temp) * sp.n_ver * sp.n_hor)
        throw DataError("spectrum coefficient count does not match its dimensions");
    if (sp.orig_frames <= 0 || sp.orig_height <= 0 || sp.orig_width <= 0)
        throw DataError("spectrum carries no original dimensions");

    std::vector<std::complex<double>> work = sp.coeff;
    Plan plan(sp.n_temp, sp.n_ver, sp.n_hor, work.data(), FFTW_BACKWARD);
    plan.execute();

    const double scale = 1.0 / static_cast<double>(work.size());
    // 1e-6 of the 8-bit dynamic range.
    const double imag_tol = 1e-6 * 255.0;
    double max_imag = 0.0;
    for (auto& c : work) {
        c *= scale;
        max_imag = std::max(max_imag, std::abs(c.imag()));
    }
    if (max_imag > imag_tol)
        throw SymmetryError("inverse transform is not real (max imaginary residual " +
                            std::to_string(max_imag) + "); the mask broke Hermitian symmetry");

    std::vector<uint8_t> luma(static_cast<size_t>(sp.orig_frames) * sp.orig_height *
                              sp.orig_width);
    size_t o = 0;
    for (int t = 0; t < sp.orig_frames; ++t)
        for (int y = 0; y < sp.orig_height; ++y) {
            const std::complex<double>* src = work.data() + sp.index(t, y, 0);
            for (int x = 0; x < sp.orig_width; ++x) {
                long r = std::lround(src[x].real());
                luma[o++] = static_cast<uint8_t>(std::clamp(r, 0L, 255L));
            }
        }
    return luma;
}

double spectral_energy(const Spectrum3D& sp) {
    double e = 0.0;
    for (const auto& c : sp.coeff)
        e += std::norm(c);
    return e;
}

double hermitian_residual_rel(const Spectrum3D& sp) {
    double peak = 0.0;
    for (const auto& c : sp.coeff)
        peak = std::max(peak, std::abs(c));
    if (peak == 0.0)
        return 0.0;

    double worst = 0.0;
    for (int w = 0; w < sp.n_temp; ++w) {
        int wm = (sp.n_temp - w) % sp.n_temp;
        for (int v = 0; v < sp.n_ver; ++v) {
            int vm = (sp.n_ver - v) % sp.n_ver;
            for (int u = 0; u < sp.n_hor; ++u) {
                int um = (sp.n_hor - u) % sp.n_hor;
                std::complex<double> diff = sp.at(wm, vm, um) - std::conj(sp.at(w, v, u));
                worst = std::max(worst, std::abs(diff));
            }
        }
    }
    return worst / peak;
}

}  // namespace stf
