#include "qkdcoex/stats.hpp"

#include <cmath>

#include "qkdcoex/errors.hpp"

namespace qkdcoex {

std::pair<double, double> wilson_interval(uint64_t k, uint64_t n, double z) {
    if (n == 0)
        throw DomainError("wilson interval of an empty sample");
    double nn = static_cast<double>(n);
    double p = static_cast<double>(k) / nn;
    double z2 = z * z;
    double denom = 1.0 + z2 / nn;
    double center = (p + z2 / (2.0 * nn)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = center - half;
    double hi = center + half;
    if (lo < 0.0) lo = 0.0;
    if (hi > 1.0) hi = 1.0;
    return {lo, hi};
}

double erfc_inv(double y) {
    if (!(y > 0.0) || !(y < 2.0))
        throw DomainError("erfc_inv argument must lie in (0, 2)");
    // Symmetric about y=1: erfc_inv(2-y) = -erfc_inv(y).
    bool flip = y > 1.0;
    if (flip) y = 2.0 - y;
    // Initial guess from the asymptotic expansion of the tail, then Newton.
    double x;
    if (y > 0.5) {
        // Near the center erfc(x) ~ 1 - 2x/sqrt(pi).
        x = (1.0 - y) * 0.8862269254527580;
    } else {
        double t = std::sqrt(-2.0 * std::log(y / 2.0));
        x = t - (std::log(t) + std::log(3.141592653589793) / 2.0) / t;
        x /= 1.4142135623730951;
    }
    for (int i = 0; i < 60; ++i) {
        double err = std::erfc(x) - y;
        double deriv = -2.0 / std::sqrt(3.141592653589793) * std::exp(-x * x);
        double step = err / deriv;
        x -= step;
        if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
    }
    return flip ? -x : x;
}

double normal_upper_quantile(double p) {
    return 1.4142135623730951 * erfc_inv(2.0 * p);
}

} // namespace qkdcoex
