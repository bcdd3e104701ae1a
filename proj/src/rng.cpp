#include "qkdcoex/rng.hpp"

#include <cmath>

namespace qkdcoex {

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t root, uint64_t stream, uint64_t substream) {
    uint64_t h = mix64(root);
    h = mix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
    h = mix64(h ^ (substream * 0x8cb92ba72f3d8dd7ULL));
    return h;
}

double Rng::exponential(double mean) {
    return -mean * std::log(uniform_pos());
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

uint64_t Rng::below(uint64_t bound) {
    if (bound == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 1e6) {
        double v = mean + std::sqrt(mean) * normal();
        if (v < 0.0) v = 0.0;
        return static_cast<uint64_t>(v + 0.5);
    }
    // Inversion by sequential search in chunks to avoid underflow for
    // means up to ~1e6: sample as a sum over mean slices of <= 500.
    uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        double m = remaining > 500.0 ? 500.0 : remaining;
        remaining -= m;
        double l = std::exp(-m);
        double p = 1.0;
        uint64_t k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        total += k - 1;
    }
    return total;
}

} // namespace qkdcoex
