#pragma once

#include <cstdint>
#include <vector>

#include "qkdcoex/bitvec.hpp"
#include "qkdcoex/cow_sim.hpp"

namespace qkdcoex::distill {

// Transmitter/receiver bit pairs surviving the sift, with the side tallies
// the later estimates need. alice_bits come from the emission schedule,
// bob_bits from the receiver's click positions; index i of both refers to
// the same kept detection.
struct SiftedKey {
    BitVec alice_bits;
    BitVec bob_bits;
    std::uint64_t decoy_clicks = 0;        // data clicks inside decoy pairs
    std::uint64_t double_clicks = 0;       // pairs discarded for two clicks
    std::uint64_t out_of_gate_clicks = 0;  // data clicks in the idle band
    std::uint64_t monitor_interfering_clicks = 0;
    std::uint64_t monitor_noninterfering_clicks = 0;
    std::uint64_t interfering_opportunities = 0;     // schedule-side counts
    std::uint64_t noninterfering_opportunities = 0;  // over the whole run
    double duration_s = 0.0;
};

// Classifies a receiver tag stream against the transmitter schedule: data
// clicks in bit pairs become key bits (the within-pair slot index read at
// the receiver), decoy-pair and double-click detections are dropped and
// tallied, monitor clicks are tallied by their slot's interference class.
// Streams carrying an uncorrected frame-phase offset beyond half a slot
// raise AlignmentError (checked only when enough tags lock the phase).
SiftedKey sift(const sim::EmissionSchedule& schedule,
               const sim::TagStream& tags);

// k distinct positions out of [0, n), sorted, drawn from the given seed.
std::vector<std::uint64_t> sample_indices(std::uint64_t n, std::uint64_t k,
                                          std::uint64_t seed);

struct Estimates {
    double qber = 0.0;        // disclosed-sample point estimate
    double qber_upper = 0.0;  // one-sided Wilson bound at the working z
    double visibility = 0.0;  // fringe estimate from the monitor tallies
    std::uint64_t sample_size = 0;
    std::uint64_t sample_errors = 0;
};

// Compares the two key halves on the disclosed sample and reads the fringe
// visibility off the monitor tallies. Throws InsufficientSampleError when
// the sample is smaller than 100 bits, ValidationError on out-of-range
// indices or mismatched key halves.
Estimates estimate_parameters(const SiftedKey& key,
                              const std::vector<std::uint64_t>& sample);

// Shannon entropy of a bit with bias p; DomainError outside [0,1].
double binary_entropy(double p);

// Asymptotic secret fraction of the protocol: one minus the reconciliation
// leakage f_ec*h(qber) minus the phase-information bound h(visibility),
// clamped at zero. DomainError on arguments outside their ranges.
double secret_fraction(double qber, double visibility, double f_ec);

// Finite-size headroom subtracted from the extractable bits: ceil(2*log2(1/
// failure_prob)); 67 bits at the default 1e-10.
std::uint64_t pa_margin_bits(double failure_prob);

// Universal hash: out[i] = XOR_j seed[i - j + n - 1] * input[j], the
// Toeplitz matrix packed diagonally into a seed of n + out_bits - 1 bits.
BitVec toeplitz_hash(const BitVec& seed, const BitVec& input,
                     std::uint64_t out_bits);

struct DistillParams {
    double disclose_fraction = 0.1;
    double error_correction_efficiency = 1.1;  // f_ec multiplying h(qber)
    double pa_failure_prob = 1e-10;
    double qber_abort_threshold = 0.11;       // session-level guard rails
    double visibility_abort_threshold = 0.5;
};

void validate(const DistillParams& p);

struct DistillResult {
    BitVec alice_key;
    BitVec bob_key;
    Estimates estimates;
    std::uint64_t n_sifted = 0;
    std::uint64_t n_disclosed = 0;
    std::uint64_t n_remaining = 0;
    std::uint64_t secret_bits = 0;  // key length after the margin
    double fraction = 0.0;          // secret fraction the length came from
};

// Full post-processing pass over one sifted key: disclose a deterministic
// sample, estimate, model reconciliation as an exact transfer of the
// transmitter's remaining bits (its cost stays charged at f_ec*h(qber)),
// and compress both sides with the same Toeplitz hash. A fraction of zero
// yields empty keys and no error.
DistillResult distill_keys(const SiftedKey& key, const DistillParams& params,
                           std::uint64_t seed);

} // namespace qkdcoex::distill
