#include "qkdcoex/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/rng.hpp"

namespace qkdcoex::pipeline {

namespace {

constexpr double kBitsPerChannel_bps = 10e9;   // classical line rate
constexpr double kAesChunk_bytes = 64e9;       // re-key interval
constexpr double kAesKey_bits = 256.0;

} // namespace

SystemConfig default_system(const std::string& fiber_name) {
    SystemConfig sys;
    sys.fiber = spectral::builtin_profile(fiber_name);
    sys.pigtail = spectral::builtin_profile("tff");
    sys.channel_plan = plan::grid_plan(25, 9.0);
    return sys;
}

SystemConfig bidir_system() {
    SystemConfig sys = default_system("hcf");
    sys.channel_plan = plan::bidir_plan(9.0);
    sys.extra_background_ph_s = kUplinkCrosstalk_ph_s;
    return sys;
}

double resolved_ase_rate(const SystemConfig& sys) {
    if (sys.amplifier_ase_ph_s >= 0.0) return sys.amplifier_ase_ph_s;
    return sys.channel_plan.classical.empty() ? kNoLoadAseRate_ph_s
                                              : kLoadedAseRate_ph_s;
}

LinkBudget link_budget(const SystemConfig& sys) {
    LinkBudget lb;
    lb.path_loss_db = plan::quantum_path_loss(sys.channel_plan, sys.fiber);
    lb.transmittance = std::pow(10.0, -lb.path_loss_db / 10.0);
    lb.noise = spectral::aggregate_inband_noise(
        sys.channel_plan, sys.fiber, sys.channel_plan.quantum.wavelength_nm,
        sys.channel_plan.quantum.filter_bandwidth_nm, resolved_ase_rate(sys),
        &sys.pigtail);
    const double demux =
        std::pow(10.0, -sys.channel_plan.ce.quantum_demux_db / 10.0);
    lb.background_ph_s =
        (lb.noise.total + sys.extra_background_ph_s) * demux;
    return lb;
}

sim::ReceiverConditions receiver_conditions(const SystemConfig& sys) {
    const LinkBudget lb = link_budget(sys);
    sim::ReceiverConditions rx;
    rx.transmittance = lb.transmittance;
    rx.background_ph_s = lb.background_ph_s;
    return rx;
}

PointResult analytic_point(const SystemConfig& sys) {
    const LinkBudget lb = link_budget(sys);
    sim::ReceiverConditions rx;
    rx.transmittance = lb.transmittance;
    rx.background_ph_s = lb.background_ph_s;

    PointResult res;
    res.rates = sim::cow_analytic(sys.frame, sys.detector, rx);
    res.noise_total_ph_s = lb.noise.total;
    res.sifted_rate_s = res.rates.sifted_rate;
    res.qber = std::min(res.rates.expected_qber, 0.5);
    res.visibility = std::clamp(res.rates.expected_visibility, 0.0, 1.0);
    res.secret_fraction = distill::secret_fraction(
        res.qber, res.visibility, sys.distill.error_correction_efficiency);
    res.skr_bit_s = res.sifted_rate_s *
                    (1.0 - sys.distill.disclose_fraction) *
                    res.secret_fraction;
    return res;
}

std::uint64_t frames_for_duration(const SystemConfig& sys, double duration_s) {
    if (duration_s < 0.0)
        throw ValidationError("run: negative duration");
    return static_cast<std::uint64_t>(duration_s * 1e9 /
                                      sys.frame.frame_period_ns);
}

sim::EmissionSchedule make_schedule(const SystemConfig& sys,
                                    std::uint64_t n_frames) {
    sim::FrameConfig cfg = sys.frame;
    cfg.seed = derive_seed(sys.seed, kScheduleStream);
    return sim::EmissionSchedule(cfg, n_frames);
}

sim::TagStream simulate_tags(const SystemConfig& sys,
                             const sim::EmissionSchedule& schedule) {
    return sim::simulate_detection(schedule, sys.detector,
                                   receiver_conditions(sys),
                                   derive_seed(sys.seed, kDetectionStream));
}

RunReport montecarlo_run(const SystemConfig& sys, double duration_s) {
    RunReport rep;
    rep.budget = link_budget(sys);
    rep.noise_total_ph_s = rep.budget.noise.total;
    rep.n_frames = frames_for_duration(sys, duration_s);
    if (rep.n_frames == 0) return rep;

    const sim::EmissionSchedule schedule = make_schedule(sys, rep.n_frames);
    rep.duration_s = schedule.duration_ns() * 1e-9;
    const sim::TagStream tags = simulate_tags(sys, schedule);

    const distill::SiftedKey key = distill::sift(schedule, tags);
    rep.distill = distill::distill_keys(key, sys.distill,
                                        derive_seed(sys.seed, kDistillStream));
    rep.qber = rep.distill.estimates.qber;
    rep.visibility = rep.distill.estimates.visibility;
    rep.sifted_rate_s =
        static_cast<double>(rep.distill.n_sifted) / rep.duration_s;
    rep.skr_bit_s =
        static_cast<double>(rep.distill.secret_bits) / rep.duration_s;
    return rep;
}

std::vector<SweepRow> sweep_grid(const SystemConfig& base,
                                 const std::vector<int>& channel_counts,
                                 const std::vector<double>& powers_dbm) {
    if (channel_counts.empty() || powers_dbm.empty())
        throw ValidationError("sweep: empty grid axis");
    std::vector<int> counts = channel_counts;
    std::vector<double> powers = powers_dbm;
    std::sort(counts.begin(), counts.end());
    std::sort(powers.begin(), powers.end());

    std::vector<SweepRow> rows;
    rows.reserve(counts.size() * powers.size());
    for (int n : counts) {
        for (double p : powers) {
            SystemConfig sys = base;
            sys.channel_plan = plan::grid_plan(n, p);
            sys.channel_plan.quantum = base.channel_plan.quantum;
            sys.channel_plan.sync = base.channel_plan.sync;
            sys.channel_plan.ce = base.channel_plan.ce;
            const PointResult pr = analytic_point(sys);
            rows.push_back({n, p, pr.skr_bit_s, pr.qber, pr.visibility,
                            pr.noise_total_ph_s});
        }
    }
    return rows;
}

PlanReport plan_point(const SystemConfig& sys,
                      const spectral::FiberProfile& comparison,
                      double skr_target) {
    PlanReport rep;
    rep.skr_target_bit_s = skr_target;

    const auto search = [&](const spectral::FiberProfile& medium,
                            bool& feasible, double& dbm, bool& capped) {
        const auto skr_of_power = [&](double aggregate_dbm) {
            SystemConfig s = sys;
            s.fiber = medium;
            s.channel_plan =
                plan::with_aggregate_power(sys.channel_plan, aggregate_dbm);
            return analytic_point(s).skr_bit_s;
        };
        try {
            const plan::PowerSearchResult r =
                plan::max_coexistence_power(skr_of_power, skr_target);
            feasible = true;
            dbm = r.aggregate_dbm;
            capped = r.reached_upper_bound;
        } catch (const InfeasibleError&) {
            feasible = false;
        }
    };
    search(sys.fiber, rep.feasible, rep.max_aggregate_dbm,
           rep.reached_upper_bound);
    bool comparison_capped = false;
    search(comparison, rep.comparison_feasible, rep.comparison_max_dbm,
           comparison_capped);
    if (rep.feasible && rep.comparison_feasible)
        rep.budget_gap_db = rep.max_aggregate_dbm - rep.comparison_max_dbm;

    const auto downstream = static_cast<double>(std::count_if(
        sys.channel_plan.classical.begin(), sys.channel_plan.classical.end(),
        [](const plan::ClassicalChannel& c) {
            return c.direction == plan::Direction::downstream;
        }));
    rep.required_key_rate_bit_s = plan::required_key_rate(
        downstream * kBitsPerChannel_bps, kAesChunk_bytes, kAesKey_bits);
    rep.target_covers_consumption = skr_target >= rep.required_key_rate_bit_s;
    return rep;
}

Calibration calibrate(const SystemConfig& anchor, double target_skr,
                      double target_qber) {
    Calibration cal;

    const auto point = [&](double scale, double visibility) {
        SystemConfig sys = anchor;
        sys.fiber.calibration_scale = scale;
        sys.pigtail.calibration_scale = scale;
        sys.detector.interferometer_visibility = visibility;
        return analytic_point(sys);
    };

    // The error rate is set by the noise level alone (the interferometer
    // only feeds the visibility), so the scattering scale is fit first.
    double lo = 1e-3, hi = 1e4;
    if (point(lo, 1.0).qber > target_qber ||
        point(hi, 1.0).qber < target_qber)
        throw InfeasibleError(
            "calibrate: error-rate target outside the reachable range");
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = std::sqrt(lo * hi);
        (point(mid, 1.0).qber < target_qber ? lo : hi) = mid;
    }
    cal.raman_scale = std::sqrt(lo * hi);

    // Key rate rises with visibility; fit it at the fixed scale.
    double vlo = 0.5, vhi = 1.0;
    if (point(cal.raman_scale, vhi).skr_bit_s < target_skr ||
        point(cal.raman_scale, vlo).skr_bit_s > target_skr)
        throw InfeasibleError(
            "calibrate: key-rate target outside the reachable range");
    for (int i = 0; i < 200 && vhi - vlo > 1e-14; ++i) {
        const double mid = 0.5 * (vlo + vhi);
        (point(cal.raman_scale, mid).skr_bit_s < target_skr ? vlo : vhi) =
            mid;
    }
    cal.intrinsic_visibility = 0.5 * (vlo + vhi);

    const PointResult fitted = point(cal.raman_scale, cal.intrinsic_visibility);
    cal.anchor_skr_bit_s = fitted.skr_bit_s;
    cal.anchor_qber = fitted.qber;
    return cal;
}

void apply(const Calibration& cal, SystemConfig& sys) {
    sys.fiber.calibration_scale = cal.raman_scale;
    sys.pigtail.calibration_scale = cal.raman_scale;
    sys.detector.interferometer_visibility = cal.intrinsic_visibility;
}

} // namespace qkdcoex::pipeline
