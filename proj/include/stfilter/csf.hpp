#pragma once

#include "stfilter/error.hpp"

namespace stf {

// Spatiotemporal contrast sensitivity model: a sech-based fit over the
// combined spatiotemporal frequency, plus the angular conversion constant for
// the designed viewing distance (one pixel per arcminute of visual angle,
// i.e. 60 cpd per cycle-per-pixel).
struct CsfModel {
    double f0 = 4.1726;       // high-frequency scale
    double f1 = 1.3625;       // low-frequency scale
    double alpha = 0.8493;    // low-frequency attenuation
    double p = 0.7786;        // high-frequency exponent
    double gain = 373.08;     // overall gain
    double gamma_dvd = 60.0;  // cpd per cycle-per-pixel

    // All parameters must be > 0 and alpha < 1 (otherwise the DC component
    // itself would be classified invisible).
    void validate() const;
};

// Euclidean norm of (f_hor, f_ver, f_temp); even in every argument.
double st_frequency(double f_hor, double f_ver, double f_temp);

// Contrast sensitivity gamma(f_st) =
//   gain * (sech((f_st/f0)^p) - alpha * sech(f_st/f1)),
// clamped below at zero. With the default parameters the clamp never fires.
double sensitivity(const CsfModel& m, double f_st);

struct PhysicalFreq {
    double f_hor = 0.0;   // cpd
    double f_ver = 0.0;   // cpd
    double f_temp = 0.0;  // Hz
};

// Maps FFT grid indices to physical frequencies. Indices in the upper half of
// an axis alias to negative frequencies (k -> k - N for k >= N/2), so a
// Hermitian pair lands on +/- the same frequency.
PhysicalFreq grid_to_physical(int u_hor, int u_ver, int w, int n_hor, int n_ver, int n_temp,
                              double f_frame, double gamma_dvd);

}  // namespace stf
