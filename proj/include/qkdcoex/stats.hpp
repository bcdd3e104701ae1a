#pragma once

#include <cstdint>
#include <utility>

namespace qkdcoex {

// Wilson score interval for a binomial proportion at z standard scores.
// Returns {lo, hi}; well-behaved at k=0 and k=n, never leaves [0,1].
std::pair<double, double> wilson_interval(uint64_t k, uint64_t n, double z);

// Inverse of erfc on (0, 2): erfc(erfc_inv(y)) == y. Newton-refined.
double erfc_inv(double y);

// Quantile of the standard normal upper tail: q such that
// P(N(0,1) > q) = p, i.e. q = sqrt(2) * erfc_inv(2p).
double normal_upper_quantile(double p);

} // namespace qkdcoex
