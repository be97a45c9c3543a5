#pragma once

#include <cstdint>
#include <vector>

#include "stfilter/csf.hpp"
#include "stfilter/spectrum.hpp"
#include "stfilter/video.hpp"

namespace stf {

// Binary keep/remove decision per spectral coefficient. Masks built by
// build_mask are Hermitian-symmetric and always keep the DC bin, so applying
// one never breaks the realness of the inverse transform.
struct VisibilityMask {
    int n_temp = 0;
    int n_ver = 0;
    int n_hor = 0;
    double beta = 0.0;
    std::vector<uint8_t> bits;  // 1 = keep
    uint64_t kept_count = 0;
    uint64_t total_count = 0;

    size_t index(int w, int v, int u) const {
        return (static_cast<size_t>(w) * n_ver + v) * n_hor + u;
    }
    bool keep(int w, int v, int u) const { return bits[index(w, v, u)] != 0; }
};

// Thresholds each coefficient magnitude against beta * gamma(f_st).
//
// Default mode compares the raw magnitude |S|. With `normalize` the
// magnitude is first converted to a contrast, |S| / (s_mean * N_pad), where
// s_mean is the mean luma of the unpadded input (recovered from the DC bin)
// and N_pad the padded sample count of the unnormalized transform.
//
// The DC bit is always forced to 1 and the mask is symmetrized by keeping a
// coefficient whenever either Hermitian partner passes.
VisibilityMask build_mask(const Spectrum3D& sp, const CsfModel& model, double beta,
                          bool normalize = false);

// Entry-wise product M * S. Dimensions must match.
Spectrum3D apply_mask(const Spectrum3D& sp, const VisibilityMask& m);

struct MaskStats {
    double beta = 0.0;
    uint64_t kept_count = 0;
    uint64_t total_count = 0;
    double kept_energy_fraction = 1.0;
};

MaskStats mask_stats(const Spectrum3D& sp, const VisibilityMask& m);

// FFT -> mask -> multiply -> IFFT on the luma; chroma passes through
// untouched. beta = 0 keeps the luma bit-exact.
VideoVolume filter_video(const VideoVolume& v, const CsfModel& model, double beta,
                         bool normalize = false, const FftLimits& limits = {},
                         MaskStats* stats = nullptr);

}  // namespace stf
