#pragma once

#include <complex>
#include <vector>

#include "stfilter/video.hpp"

namespace stf {

// Caps the padded FFT cube so oversized inputs fail loudly instead of
// exhausting memory. The default of 2^30 complex coefficients (16 GiB)
// comfortably admits a 1024x512x512 transform.
struct FftLimits {
    size_t max_coefficients = static_cast<size_t>(1) << 30;
};

// Full complex 3D spectrum of a zero-padded luma volume.
//
// Conventions (fixed, tests depend on them):
//   - every axis is zero-padded to the next power of two;
//   - the forward transform is unnormalized, so S[0,0,0] is the sum of all
//     padded samples; the inverse carries the full 1/(Nt*Nv*Nh) factor;
//   - layout coeff[(w * n_ver + v) * n_hor + u], axes (temporal, vertical,
//     horizontal).
struct Spectrum3D {
    int n_temp = 0;
    int n_ver = 0;
    int n_hor = 0;
    int orig_frames = 0;
    int orig_height = 0;
    int orig_width = 0;
    FrameRate fps;
    std::vector<std::complex<double>> coeff;

    size_t size() const { return coeff.size(); }
    size_t index(int w, int v, int u) const {
        return (static_cast<size_t>(w) * n_ver + v) * n_hor + u;
    }
    std::complex<double> at(int w, int v, int u) const { return coeff[index(w, v, u)]; }
    std::complex<double>& at(int w, int v, int u) { return coeff[index(w, v, u)]; }
};

// Smallest power of two >= n (n >= 1).
int next_pow2(int n);

Spectrum3D forward_fft(const VideoVolume& v, const FftLimits& limits = {});

// Inverse transform of the luma cube: normalizes, verifies that the residual
// imaginary magnitude stays within 1e-6 of the 8-bit dynamic range (throws
// SymmetryError otherwise, the signature of a mask that broke Hermitian
// symmetry), crops the padding, rounds to nearest and clamps to [0, 255].
// Output dims are (orig_frames, orig_height, orig_width), frame-major.
std::vector<uint8_t> inverse_fft(const Spectrum3D& sp);

// Sum of |S|^2 over all coefficients.
double spectral_energy(const Spectrum3D& sp);

// Largest |S[-k] - conj(S[k])| over the grid, relative to the peak magnitude.
// Zero for the spectrum of any real signal up to rounding noise.
double hermitian_residual_rel(const Spectrum3D& sp);

}  // namespace stf
