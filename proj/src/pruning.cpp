#include "stfilter/pruning.hpp"

#include <cmath>
#include <string>

namespace stf {

VisibilityMask build_mask(const Spectrum3D& sp, const CsfModel& model, double beta,
                          bool normalize) {
    model.validate();
    if (!(beta >= 0))
        throw DataError("beta must be >= 0");

    VisibilityMask m;
    m.n_temp = sp.n_temp;
    m.n_ver = sp.n_ver;
    m.n_hor = sp.n_hor;
    m.beta = beta;
    m.total_count = sp.coeff.size();
    m.bits.assign(sp.coeff.size(), 0);

    double mag_scale = 1.0;
    if (normalize) {
        double orig_samples = static_cast<double>(sp.orig_frames) * sp.orig_height * sp.orig_width;
        double s_mean = sp.coeff.empty() ? 0.0 : sp.coeff[0].real() / orig_samples;
        if (!(s_mean > 0))
            throw DataError("normalized mask needs a video with positive mean luma");
        mag_scale = 1.0 / (s_mean * static_cast<double>(sp.coeff.size()));
    }

    const double f_frame = sp.fps.hz();

    // Per-axis squared physical frequencies; the norm is even, so the signed
    // alias only matters through its magnitude.
    std::vector<double> ft2(sp.n_temp), fv2(sp.n_ver), fh2(sp.n_hor);
    for (int w = 0; w < sp.n_temp; ++w) {
        double f = grid_to_physical(0, 0, w, sp.n_hor, sp.n_ver, sp.n_temp, f_frame,
                                    model.gamma_dvd)
                       .f_temp;
        ft2[w] = f * f;
    }
    for (int v = 0; v < sp.n_ver; ++v) {
        double f = grid_to_physical(0, v, 0, sp.n_hor, sp.n_ver, sp.n_temp, f_frame,
                                    model.gamma_dvd)
                       .f_ver;
        fv2[v] = f * f;
    }
    for (int u = 0; u < sp.n_hor; ++u) {
        double f = grid_to_physical(u, 0, 0, sp.n_hor, sp.n_ver, sp.n_temp, f_frame,
                                    model.gamma_dvd)
                       .f_hor;
        fh2[u] = f * f;
    }

    std::vector<uint8_t> raw(sp.coeff.size(), 0);
    size_t idx = 0;
    for (int w = 0; w < sp.n_temp; ++w)
        for (int v = 0; v < sp.n_ver; ++v) {
            double ftv2 = ft2[w] + fv2[v];
            for (int u = 0; u < sp.n_hor; ++u, ++idx) {
                double f_st = std::sqrt(ftv2 + fh2[u]);
                double threshold = beta * sensitivity(model, f_st);
                double mag = std::abs(sp.coeff[idx]) * mag_scale;
                raw[idx] = mag > threshold ? 1 : 0;
            }
        }
    raw[0] = 1;  // DC is always kept

    // Keep a coefficient if either Hermitian partner passed.
    uint64_t kept = 0;
    for (int w = 0; w < sp.n_temp; ++w) {
        int wm = (sp.n_temp - w) % sp.n_temp;
        for (int v = 0; v < sp.n_ver; ++v) {
            int vm = (sp.n_ver - v) % sp.n_ver;
            for (int u = 0; u < sp.n_hor; ++u) {
                int um = (sp.n_hor - u) % sp.n_hor;
                uint8_t bit = raw[m.index(w, v, u)] | raw[m.index(wm, vm, um)];
                m.bits[m.index(w, v, u)] = bit;
                kept += bit;
            }
        }
    }
    m.kept_count = kept;
    return m;
}

Spectrum3D apply_mask(const Spectrum3D& sp, const VisibilityMask& m) {
    if (m.n_temp != sp.n_temp || m.n_ver != sp.n_ver || m.n_hor != sp.n_hor)
        throw DataError("mask dimensions do not match the spectrum");
    if (m.bits.size() != sp.coeff.size())
        throw DataError("mask bit count does not match the spectrum");

    Spectrum3D out = sp;
    for (size_t i = 0; i < out.coeff.size(); ++i)
        if (!m.bits[i])
            out.coeff[i] = {0.0, 0.0};
    return out;
}

MaskStats mask_stats(const Spectrum3D& sp, const VisibilityMask& m) {
    if (m.bits.size() != sp.coeff.size())
        throw DataError("mask bit count does not match the spectrum");
    double total = 0.0, kept = 0.0;
    for (size_t i = 0; i < sp.coeff.size(); ++i) {
        double e = std::norm(sp.coeff[i]);
        total += e;
        if (m.bits[i])
            kept += e;
    }
    MaskStats st;
    st.beta = m.beta;
    st.kept_count = m.kept_count;
    st.total_count = m.total_count;
    st.kept_energy_fraction = total > 0.0 ? kept / total : 1.0;
    return st;
}

VideoVolume filter_video(const VideoVolume& v, const CsfModel& model, double beta, bool normalize,
                         const FftLimits& limits, MaskStats* stats) {
    Spectrum3D sp = forward_fft(v, limits);
    VisibilityMask mask = build_mask(sp, model, beta, normalize);
    Spectrum3D masked = apply_mask(sp, mask);
    if (stats)
        *stats = mask_stats(sp, mask);

    VideoVolume out = v;  // chroma, dims and frame rate pass through
    out.luma = inverse_fft(masked);
    out.validate();
    return out;
}

}  // namespace stf
