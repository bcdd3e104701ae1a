#include "qkdcoex/cow_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "qkdcoex/checksum.hpp"
#include "qkdcoex/errors.hpp"
#include "qkdcoex/rng.hpp"
#include "click_model.hpp"

namespace qkdcoex::sim {

namespace {

constexpr std::uint64_t kFramesPerBatch = 1000;

// Substream ids of the simulation seed; the schedule itself derives from
// the frame config seed with (frame, pair) coordinates, so it never
// collides with these.
enum Stream : std::uint64_t {
    kDataSignal = 0,
    kMonitorSignal = 1,
    kDataBackground = 2,
    kMonitorBackground = 3,
};

void append_bytes(std::vector<unsigned char>& buf, const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), b, b + n);
}

void append_f64(std::vector<unsigned char>& buf, double v) {
    append_bytes(buf, &v, sizeof v);
}

void append_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    append_bytes(buf, &v, sizeof v);
}

std::uint64_t hash_run_config(const FrameConfig& c, const DetectorModel& d,
                              const ReceiverConditions& rx,
                              std::uint64_t n_frames) {
    std::vector<unsigned char> buf;
    append_f64(buf, c.slot_ns);
    append_u64(buf, static_cast<std::uint64_t>(c.slots_per_frame));
    append_f64(buf, c.frame_period_ns);
    append_f64(buf, c.mu);
    append_f64(buf, c.decoy_fraction);
    append_u64(buf, c.seed);
    append_u64(buf, n_frames);
    append_f64(buf, d.efficiency);
    append_f64(buf, d.dark_counts_per_s);
    append_f64(buf, d.dead_time_ns);
    append_f64(buf, d.data_branch);
    append_f64(buf, d.monitor_branch);
    append_f64(buf, d.interferometer_visibility);
    append_f64(buf, d.intrinsic_error_rate);
    append_f64(buf, rx.transmittance);
    append_f64(buf, rx.background_ph_s);
    return fnv1a64(buf.data(), buf.size());
}

// Homogeneous Poisson arrivals over [start_ps, end_ps), appended in order.
void draw_background(std::vector<std::uint64_t>& out, double rate_cps,
                     double start_ps, double end_ps, Rng& rng) {
    if (rate_cps <= 0.0) return;
    const double mean_gap_ps = 1e12 / rate_cps;
    double t = start_ps;
    for (;;) {
        t += rng.exponential(mean_gap_ps);
        if (t >= end_ps) break;
        out.push_back(static_cast<std::uint64_t>(std::llround(t)));
    }
}

// Nonparalyzable hold-off: keep a click when at least dead_ps elapsed since
// the previously kept one.
std::vector<std::uint64_t> hold_off_filter(
    const std::vector<std::uint64_t>& ts, std::int64_t dead_ps) {
    std::vector<std::uint64_t> kept;
    kept.reserve(ts.size());
    std::int64_t last = std::numeric_limits<std::int64_t>::min() / 2;
    for (std::uint64_t t : ts) {
        const auto st = static_cast<std::int64_t>(t);
        if (st - last >= dead_ps) {
            kept.push_back(t);
            last = st;
        }
    }
    return kept;
}

} // namespace

void validate(const FrameConfig& c) {
    if (c.slot_ns <= 0.0)
        throw ValidationError("frame config: slot width must be positive");
    if (c.slots_per_frame < 2 || c.slots_per_frame % 2 != 0)
        throw ValidationError(
            "frame config: slots_per_frame must be an even count >= 2");
    if (c.frame_period_ns < c.slots_per_frame * c.slot_ns)
        throw ValidationError(
            "frame config: period shorter than the gated slots");
    if (!(c.mu > 0.0))
        throw ValidationError("frame config: mu must be positive");
    if (c.decoy_fraction < 0.0 || c.decoy_fraction > 1.0)
        throw ValidationError("frame config: decoy_fraction outside [0,1]");
}

void validate(const DetectorModel& d) {
    if (d.efficiency <= 0.0 || d.efficiency > 1.0)
        throw ValidationError("detector: efficiency outside (0,1]");
    if (d.dark_counts_per_s < 0.0)
        throw ValidationError("detector: negative dark rate");
    if (d.dead_time_ns < 0.0)
        throw ValidationError("detector: negative hold-off");
    if (d.data_branch < 0.0 || d.monitor_branch < 0.0 ||
        d.data_branch + d.monitor_branch > 1.0 + 1e-12)
        throw ValidationError("detector: splitter fractions must be >= 0 and "
                              "sum to at most 1");
    if (d.interferometer_visibility < 0.0 || d.interferometer_visibility > 1.0)
        throw ValidationError("detector: visibility outside [0,1]");
    if (d.intrinsic_error_rate < 0.0 || d.intrinsic_error_rate > 0.5)
        throw ValidationError("detector: intrinsic error rate outside [0,0.5]");
}

EmissionSchedule::EmissionSchedule(const FrameConfig& config,
                                   std::uint64_t n_frames)
    : config_(config), n_frames_(n_frames) {
    validate(config_);
}

PairEmission EmissionSchedule::pair(std::uint64_t frame, int pair) const {
    const std::uint64_t u =
        derive_seed(config_.seed, frame, static_cast<std::uint64_t>(pair));
    PairEmission e;
    e.bit = static_cast<int>(u & 1u);
    // Decoy decision from the high bits so it is independent of the bit.
    e.decoy = static_cast<double>(u >> 11) * 0x1.0p-53 < config_.decoy_fraction;
    return e;
}

bool EmissionSchedule::occupied(std::uint64_t frame, int slot) const {
    const PairEmission e = pair(frame, slot / 2);
    return e.decoy || e.bit == (slot & 1);
}

bool EmissionSchedule::interfering(std::uint64_t frame, int slot) const {
    if (slot == 0) return false;
    return occupied(frame, slot) && occupied(frame, slot - 1);
}

TagStream simulate_detection(const EmissionSchedule& schedule,
                             const DetectorModel& det,
                             const ReceiverConditions& rx,
                             std::uint64_t sim_seed) {
    const FrameConfig& cfg = schedule.config();
    validate(cfg);
    validate(det);
    if (rx.transmittance < 0.0 || rx.transmittance > 1.0)
        throw ValidationError("receiver: transmittance outside [0,1]");
    if (rx.background_ph_s < 0.0)
        throw ValidationError("receiver: negative background rate");

    const ClickModel cm = make_click_model(cfg, det, rx);
    const double period_ps = cfg.frame_period_ns * 1000.0;
    const double slot_ps = cfg.slot_ns * 1000.0;
    const std::uint64_t n_frames = schedule.n_frames();

    std::vector<std::uint64_t> data_sig, mon_sig, data_bg, mon_bg;
    for (std::uint64_t batch = 0; batch * kFramesPerBatch < n_frames;
         ++batch) {
        const std::uint64_t f0 = batch * kFramesPerBatch;
        const std::uint64_t f1 = std::min(f0 + kFramesPerBatch, n_frames);
        Rng data_rng(derive_seed(sim_seed, kDataSignal, batch));
        Rng mon_rng(derive_seed(sim_seed, kMonitorSignal, batch));
        for (std::uint64_t f = f0; f < f1; ++f) {
            const double frame_ps = static_cast<double>(f) * period_ps;
            auto slot_center = [&](int s) {
                return static_cast<std::uint64_t>(
                    std::llround(frame_ps + (s + 0.5) * slot_ps));
            };
            bool prev_occupied = false;
            for (int p = 0; p < cfg.pairs_per_frame(); ++p) {
                const PairEmission e = schedule.pair(f, p);
                const bool occ0 = e.decoy || e.bit == 0;
                const bool occ1 = e.decoy || e.bit == 1;
                // Data line: decoys click per slot; bit pairs click once,
                // sometimes registered in the wrong slot of the pair.
                if (e.decoy) {
                    if (data_rng.bernoulli(cm.p_data))
                        data_sig.push_back(slot_center(2 * p));
                    if (data_rng.bernoulli(cm.p_data))
                        data_sig.push_back(slot_center(2 * p + 1));
                } else if (data_rng.bernoulli(cm.p_data)) {
                    int slot_bit = e.bit;
                    if (data_rng.bernoulli(det.intrinsic_error_rate))
                        slot_bit = 1 - slot_bit;
                    data_sig.push_back(slot_center(2 * p + slot_bit));
                }
                // Monitor line: click probability depends on whether the
                // preceding slot carried a pulse.
                if (occ0 && mon_rng.bernoulli(prev_occupied ? cm.p_mon_interf
                                                            : cm.p_mon_lone))
                    mon_sig.push_back(slot_center(2 * p));
                if (occ1 && mon_rng.bernoulli(occ0 ? cm.p_mon_interf
                                                   : cm.p_mon_lone))
                    mon_sig.push_back(slot_center(2 * p + 1));
                prev_occupied = occ1;
            }
        }
        const double start_ps = static_cast<double>(f0) * period_ps;
        const double end_ps = static_cast<double>(f1) * period_ps;
        Rng data_bg_rng(derive_seed(sim_seed, kDataBackground, batch));
        Rng mon_bg_rng(derive_seed(sim_seed, kMonitorBackground, batch));
        draw_background(data_bg, cm.bg_data_cps, start_ps, end_ps,
                        data_bg_rng);
        draw_background(mon_bg, cm.bg_monitor_cps, start_ps, end_ps,
                        mon_bg_rng);
    }

    const auto dead_ps =
        static_cast<std::int64_t>(std::llround(det.dead_time_ns * 1000.0));
    TagStream out;
    out.seed = sim_seed;
    out.config_hash = hash_run_config(cfg, det, rx, n_frames);
    out.duration_ns = schedule.duration_ns();

    std::vector<std::uint64_t> merged;
    merged.resize(data_sig.size() + data_bg.size());
    std::merge(data_sig.begin(), data_sig.end(), data_bg.begin(),
               data_bg.end(), merged.begin());
    out.data_ts_ps = hold_off_filter(merged, dead_ps);

    merged.resize(mon_sig.size() + mon_bg.size());
    std::merge(mon_sig.begin(), mon_sig.end(), mon_bg.begin(), mon_bg.end(),
               merged.begin());
    out.monitor_ts_ps = hold_off_filter(merged, dead_ps);
    return out;
}

} // namespace qkdcoex::sim
