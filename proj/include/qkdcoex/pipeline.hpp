#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdcoex/cow_sim.hpp"
#include "qkdcoex/distill.hpp"
#include "qkdcoex/linkplan.hpp"
#include "qkdcoex/spectral.hpp"

namespace qkdcoex::pipeline {

// Amplifier background reaching the fiber output in the quantum band,
// photons/s. Idle boosters run at full inversion and leak more broadband
// noise past the notch than loaded ones, so an empty channel plan defaults
// to the higher rate.
inline constexpr double kLoadedAseRate_ph_s = 1.5e3;
inline constexpr double kNoLoadAseRate_ph_s = 1.7e4;

// Receive-side crosstalk of the counter-propagating distillation channel
// (circulator leakage and near-end backscatter), referred to the fiber
// output. Applies to the bidirectional preset only.
inline constexpr double kUplinkCrosstalk_ph_s = 3.5e4;

// One end-to-end operating point: optical link, transmitter framing,
// receiver, and post-processing parameters.
struct SystemConfig {
    spectral::FiberProfile fiber;
    spectral::FiberProfile pigtail;  // medium of the filter pigtails
    plan::ChannelPlan channel_plan;
    sim::FrameConfig frame;
    sim::DetectorModel detector;
    distill::DistillParams distill;
    double amplifier_ase_ph_s = -1.0;    // <0: resolve from load presence
    double extra_background_ph_s = 0.0;  // fiber-out referred crosstalk
    std::uint64_t seed = 1;
};

// Default operating point on the named builtin medium ("smf"/"hcf"):
// full 25-channel grid at 9 dBm aggregate.
SystemConfig default_system(const std::string& fiber_name);

// Bidirectional variant: two grid slots swapped for the distillation
// downlink/uplink, 9 dBm aggregate load, uplink crosstalk term active.
SystemConfig bidir_system();

double resolved_ase_rate(const SystemConfig& sys);

struct LinkBudget {
    double path_loss_db = 0.0;     // mux + fiber + demux at the quantum line
    double transmittance = 1.0;
    double background_ph_s = 0.0;  // photons/s entering the receiver module
    spectral::NoiseBreakdown noise;  // fiber-out components
};

// Folds the channel plan and medium into what the receiver sees: the
// quantum-path transmittance and the in-band background after the demux.
LinkBudget link_budget(const SystemConfig& sys);

sim::ReceiverConditions receiver_conditions(const SystemConfig& sys);

// Stream ids separating the independent random inputs derived from the
// system seed. Both endpoints of a link derive the same streams, which is
// what lets them agree on the emission schedule without exchanging it.
enum : std::uint64_t {
    kScheduleStream = 1,   // transmitter pair contents
    kDetectionStream = 2,  // receiver click draws
    kDistillStream = 3,    // offline sampling + hashing seeds
    kSampleStream = 4,     // sample positions disclosed over the wire
    kPaSeedStream = 5,     // hashing seed announced over the wire
};

// Frame count covering the given wall-clock span at the configured period.
std::uint64_t frames_for_duration(const SystemConfig& sys, double duration_s);

// The emission schedule and the simulated receiver run for this operating
// point, seeded from the shared system seed.
sim::EmissionSchedule make_schedule(const SystemConfig& sys,
                                    std::uint64_t n_frames);
sim::TagStream simulate_tags(const SystemConfig& sys,
                             const sim::EmissionSchedule& schedule);

struct PointResult {
    double skr_bit_s = 0.0;
    double qber = 0.0;
    double visibility = 0.0;
    double sifted_rate_s = 0.0;
    double secret_fraction = 0.0;
    double noise_total_ph_s = 0.0;  // fiber-out total
    sim::AnalyticRates rates;
};

// Closed-form steady-state rates for the operating point. The key rate is
// sifted_rate * (1 - disclose_fraction) * secret_fraction by construction.
PointResult analytic_point(const SystemConfig& sys);

struct RunReport {
    double duration_s = 0.0;
    std::uint64_t n_frames = 0;
    distill::DistillResult distill;
    double skr_bit_s = 0.0;      // secret bits over simulated time
    double sifted_rate_s = 0.0;
    double qber = 0.0;           // disclosed-sample estimate
    double visibility = 0.0;
    double noise_total_ph_s = 0.0;
    LinkBudget budget;
};

// Event-level counterpart: simulate, sift, estimate, distill. A zero-frame
// duration returns an empty report. Streams derive from the system seed,
// so a rerun of the same config reproduces the report bit for bit.
RunReport montecarlo_run(const SystemConfig& sys, double duration_s);

struct SweepRow {
    int channel_count = 0;
    double aggregate_dbm = 0.0;
    double skr_bit_s = 0.0;
    double qber = 0.0;
    double visibility = 0.0;
    double noise_total_ph_s = 0.0;
};

// Analytic evaluation over the grid of channel counts x launch powers;
// rows come back sorted by (channel_count, aggregate_dbm).
std::vector<SweepRow> sweep_grid(const SystemConfig& base,
                                 const std::vector<int>& channel_counts,
                                 const std::vector<double>& powers_dbm);

struct PlanReport {
    double skr_target_bit_s = 0.0;
    bool feasible = false;            // target reachable at the lower bound
    double max_aggregate_dbm = 0.0;   // largest load power holding the target
    bool reached_upper_bound = false;
    bool comparison_feasible = false;
    double comparison_max_dbm = 0.0;  // same search on the comparison medium
    double budget_gap_db = 0.0;       // this medium minus comparison
    double required_key_rate_bit_s = 0.0;  // AES consumption of the load
    bool target_covers_consumption = false;
};

// Power-budget planning: how hard can the link be loaded before the key
// rate drops below target, on this medium and on a comparison medium, plus
// the key-consumption arithmetic for encrypting the classical load.
PlanReport plan_point(const SystemConfig& sys,
                      const spectral::FiberProfile& comparison,
                      double skr_target);

struct Calibration {
    double raman_scale = 1.0;         // shared scattering normalization
    double intrinsic_visibility = 0.98;
    double anchor_skr_bit_s = 0.0;    // achieved at the anchor after the fit
    double anchor_qber = 0.0;
};

// Two-scalar fit against a reference operating point: the scattering scale
// pins the error rate (noise level), then the interferometer visibility
// pins the key rate. Both one-dimensional problems are monotone, so the
// least-squares optimum is found by bisection. Throws InfeasibleError if a
// target is outside the reachable range.
Calibration calibrate(const SystemConfig& anchor, double target_skr,
                      double target_qber);

// Installs the fitted scalars into a system (any medium: the scale is a
// property of the shared reference-condition normalization).
void apply(const Calibration& cal, SystemConfig& sys);

} // namespace qkdcoex::pipeline
