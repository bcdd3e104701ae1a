#pragma once

#include <cstdint>
#include <string>

#include "qkdcoex/distill.hpp"
#include "qkdcoex/netlink.hpp"
#include "qkdcoex/pipeline.hpp"

namespace qkdcoex::net {

// One endpoint of a live distillation session. Both endpoints are
// configured from the same operating point: the transmitter evaluates the
// shared emission schedule directly, the receiver detects what the channel
// model makes of that same schedule. Everything else they learn about each
// other crosses the wire.
struct SessionConfig {
    pipeline::SystemConfig system;
    double duration_s = 2.0;
    std::uint32_t frames_per_batch = 1000;
};

void validate(const SessionConfig& c);

struct SessionReport {
    // A session either runs to completion (confirmed, possibly with an
    // empty key when the channel yields nothing) or aborts on both ends.
    bool confirmed = false;
    bool aborted = false;
    AbortReason abort_code = AbortReason::protocol;  // valid when aborted
    std::string abort_text;

    BitVec key;               // confirmation tag already stripped
    double duration_s = 0.0;  // span of the frame schedule covered
    double skr_bit_s = 0.0;

    distill::Estimates estimates;  // as agreed over the wire
    std::uint64_t n_sifted = 0;
    std::uint64_t n_disclosed = 0;
    std::uint64_t n_remaining = 0;

    std::uint64_t decoy_clicks = 0;   // transmitter-side verdict tallies
    std::uint64_t double_clicks = 0;
    std::uint64_t ec_flips = 0;       // receiver bits fixed by reconciliation
};

// Runs the transmitter endpoint ("alice": owns the schedule, issues the
// sift verdicts and the hashing seed) over the given transport. Blocks
// until the session completes or aborts; never throws for wire-level
// failures, which land in the report instead.
SessionReport run_alice(Transport& link, const SessionConfig& cfg);

// Runs the receiver endpoint ("bob": announces detections, discloses the
// estimation sample, confirms the key).
SessionReport run_bob(Transport& link, const SessionConfig& cfg);

} // namespace qkdcoex::net
