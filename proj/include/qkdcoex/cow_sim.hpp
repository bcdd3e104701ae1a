#pragma once

#include <cstdint>

#include "qkdcoex/tagstream.hpp"

namespace qkdcoex::sim {

// Pulse-train timing and emission statistics. Each frame starts with
// slots_per_frame gated slots of slot_ns width grouped into bit pairs,
// followed by an idle band up to frame_period_ns. A pair either encodes a
// bit (one slot occupied) or is a decoy (both slots occupied).
struct FrameConfig {
    double slot_ns = 1.0;
    int slots_per_frame = 64;
    double frame_period_ns = 1024.0;
    double mu = 0.1;              // mean photon number per occupied slot
    double decoy_fraction = 0.1;  // pairs emitted with both slots lit
    std::uint64_t seed = 1;       // root seed of the emission schedule

    int pairs_per_frame() const { return slots_per_frame / 2; }
    double frame_rate_hz() const { return 1e9 / frame_period_ns; }
    double slot_rate_hz() const { return slots_per_frame * frame_rate_hz(); }
};

// Throws ValidationError on inconsistent timing or statistics.
void validate(const FrameConfig& c);

// Receiver model: a splitter routes data_branch of the light to the data
// detector and monitor_branch through the pulse-pair interferometer to the
// monitor detector. Both detectors share efficiency/dark rate/hold-off.
struct DetectorModel {
    double efficiency = 0.10;          // click probability per photon
    double dark_counts_per_s = 620.0;  // per detector line
    double dead_time_ns = 10000.0;     // nonparalyzable hold-off per line
    double data_branch = 0.75;
    double monitor_branch = 0.25;
    // Fringe visibility of the interferometer: an occupied slot whose
    // predecessor slot is also occupied exits mostly through the unused
    // port, clicking with probability suppressed by (1 - visibility) / 2.
    double interferometer_visibility = 0.98;
    // Probability a data-line signal click is registered in the wrong slot
    // of its pair (detector timing / discrimination errors).
    double intrinsic_error_rate = 0.0067;
};

void validate(const DetectorModel& d);

// End-to-end optical conditions seen by the receiver.
struct ReceiverConditions {
    double transmittance = 1.0;    // quantum-channel transmission, linear
    double background_ph_s = 0.0;  // broadband photons/s entering the splitter
};

// What the transmitter put in one pair: a decoy (both slots) or a bit
// (slot = 2*pair + bit).
struct PairEmission {
    bool decoy = false;
    int bit = 0;
};

// Deterministic emission schedule. Pair contents are pure functions of
// (seed, frame, pair), so both endpoints can evaluate the same schedule
// without storing or exchanging it.
class EmissionSchedule {
  public:
    EmissionSchedule(const FrameConfig& config, std::uint64_t n_frames);

    const FrameConfig& config() const { return config_; }
    std::uint64_t n_frames() const { return n_frames_; }
    double duration_ns() const { return n_frames_ * config_.frame_period_ns; }

    PairEmission pair(std::uint64_t frame, int pair) const;
    bool occupied(std::uint64_t frame, int slot) const;
    // Occupied and immediately preceded by an occupied slot (slot 0 of a
    // frame has an empty predecessor: the idle band of the previous frame).
    bool interfering(std::uint64_t frame, int slot) const;

  private:
    FrameConfig config_;
    std::uint64_t n_frames_ = 0;
};

// Monte Carlo of the receiver: per-slot click draws for both lines,
// background and dark counts as Poisson arrivals over the full period,
// then a nonparalyzable hold-off filter per line. Timestamps land at slot
// centers; background lands anywhere. Deterministic in (schedule, model,
// conditions, sim_seed).
TagStream simulate_detection(const EmissionSchedule& schedule,
                             const DetectorModel& det,
                             const ReceiverConditions& rx,
                             std::uint64_t sim_seed);

// Closed-form twin of the Monte Carlo. Rates are accepted clicks per
// second after hold-off losses, computed from the periodic steady state of
// the per-line alive probability.
struct AnalyticRates {
    double data_click_rate = 0.0;     // all accepted data-line clicks
    double monitor_click_rate = 0.0;  // all accepted monitor-line clicks
    double sifted_rate = 0.0;         // data clicks in non-decoy gate slots
    double error_rate = 0.0;          // expected wrong-bit part of sifted_rate
    double decoy_click_rate = 0.0;    // data clicks in decoy pairs
    double out_of_gate_rate = 0.0;    // data clicks in the idle band
    double monitor_interfering_rate = 0.0;     // clicks in interfering slots
    double monitor_noninterfering_rate = 0.0;  // clicks in lone-pulse slots
    double interfering_slots_per_frame = 0.0;     // schedule-side opportunities
    double noninterfering_slots_per_frame = 0.0;  // (not hold-off corrected)
    double alive_fraction_data = 1.0;
    double alive_fraction_monitor = 1.0;
    double expected_qber = 0.0;        // error_rate / sifted_rate
    double expected_visibility = 0.0;  // pulse-pair fringe estimate
};

AnalyticRates cow_analytic(const FrameConfig& config, const DetectorModel& det,
                           const ReceiverConditions& rx);

// Periodic steady-state alive probability of a nonparalyzable detector:
// q[i] is the click probability of bin i within one period (bin width =
// one slot), dead_bins the hold-off in bins. Returns a[i] = P(alive at
// bin i). Exposed separately because it has sharp closed-form limits.
std::vector<double> alive_profile(const std::vector<double>& q,
                                  std::int64_t dead_bins);

// Recovers the frame-phase offset (ns, in [0, frame_period_ns)) of a tag
// stream by folding all tags modulo the period and locating the gated
// window. Throws SyncFailedError when tags are too few (< 100) or no
// significant gate structure is present.
double sync_recover(const TagStream& tags, const FrameConfig& config);

} // namespace qkdcoex::sim
