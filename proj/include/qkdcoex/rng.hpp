#pragma once

#include <cstdint>
#include <random>

namespace qkdcoex {

// splitmix64 step; used to whiten/derive seeds.
uint64_t mix64(uint64_t x);

// Derives a child seed from (root, stream, substream). Distinct inputs give
// independent-looking child streams, so parallel components can share a root.
uint64_t derive_seed(uint64_t root, uint64_t stream, uint64_t substream = 0);

// Deterministic random source. Wraps mt19937_64 but does all real->variate
// mapping itself: std::uniform_real_distribution and friends are not
// bit-reproducible across standard libraries, and reproducibility from a
// seed is part of this library's contract.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0,1]; safe as log() argument.
    double uniform_pos() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Exponential with given mean (Box-Muller partner below shares no state).
    double exponential(double mean);

    // Standard normal via Box-Muller; one value per call, cached partner.
    double normal();

    // Uniform integer in [0, bound) without modulo bias.
    uint64_t below(uint64_t bound);

    // Poisson-distributed count with the given mean (inversion for small
    // means, normal approximation above 1e6 where the relative error of the
    // approximation is far below sampling noise).
    uint64_t poisson(double mean);

private:
    std::mt19937_64 eng_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace qkdcoex
