#include "stfilter/csf.hpp"

#include <cmath>
#include <string>

namespace stf {

namespace {

double sech(double x) {
    return 1.0 / std::cosh(x);
}

int signed_alias(int k, int n) {
    return k < n / 2 ? k : k - n;
}

void check_index(int k, int n, const char* axis) {
    if (n <= 0)
        throw DataError(std::string("FFT length on the ") + axis + " axis must be positive");
    if (k < 0 || k >= n)
        throw DataError(std::string("frequency index ") + std::to_string(k) +
                        " out of range on the " + axis + " axis (length " + std::to_string(n) +
                        ")");
}

}  // namespace

void CsfModel::validate() const {
    if (!(f0 > 0) || !(f1 > 0) || !(alpha > 0) || !(p > 0) || !(gain > 0) || !(gamma_dvd > 0))
        throw DataError("all CSF parameters must be strictly positive");
    if (!(alpha < 1))
        throw DataError("CSF alpha must be < 1, otherwise the DC component is invisible");
}

double st_frequency(double f_hor, double f_ver, double f_temp) {
    return std::sqrt(f_hor * f_hor + f_ver * f_ver + f_temp * f_temp);
}

double sensitivity(const CsfModel& m, double f_st) {
    double g = m.gain * (sech(std::pow(f_st / m.f0, m.p)) - m.alpha * sech(f_st / m.f1));
    return g < 0.0 ? 0.0 : g;
}

PhysicalFreq grid_to_physical(int u_hor, int u_ver, int w, int n_hor, int n_ver, int n_temp,
                              double f_frame, double gamma_dvd) {
    check_index(u_hor, n_hor, "horizontal");
    check_index(u_ver, n_ver, "vertical");
    check_index(w, n_temp, "temporal");

    PhysicalFreq f;
    f.f_hor = static_cast<double>(signed_alias(u_hor, n_hor)) * gamma_dvd / n_hor;
    f.f_ver = static_cast<double>(signed_alias(u_ver, n_ver)) * gamma_dvd / n_ver;
    f.f_temp = static_cast<double>(signed_alias(w, n_temp)) * f_frame / n_temp;
    return f;
}

}  // namespace stf
