#include "qkdcoex/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qkdcoex/errors.hpp"

namespace qkdcoex::app {

namespace {

// Fixed-precision float rendering keeps every emitted artifact
// byte-reproducible for a given scenario and seed.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string num6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

const char* to_string(RunMode m) {
    switch (m) {
    case RunMode::analytic: return "analytic";
    case RunMode::montecarlo: return "montecarlo";
    case RunMode::session: return "session";
    }
    return "?";
}

SweepAxes default_sweep_axes() {
    SweepAxes axes;
    for (int p = -20; p <= 14; ++p)
        axes.powers_dbm.push_back(static_cast<double>(p));
    axes.channel_counts = {1, 6, 13, 25};
    return axes;
}

pipeline::SystemConfig preset_system(const std::string& name) {
    if (name == "hcf25") return pipeline::default_system("hcf");
    if (name == "smf25") return pipeline::default_system("smf");
    if (name == "hcf_bidir") return pipeline::bidir_system();
    throw ValidationError("unknown preset \"" + name +
                          "\" (expected hcf25, smf25, or hcf_bidir)");
}

void validate(const Scenario& sc) {
    spectral::validate(sc.system.fiber);
    spectral::validate(sc.system.pigtail);
    plan::validate(sc.system.channel_plan);
    sim::validate(sc.system.frame);
    sim::validate(sc.system.detector);
    distill::validate(sc.system.distill);
    if (!(sc.duration_s >= 0.0) || !std::isfinite(sc.duration_s))
        throw ValidationError("scenario: duration_s must be >= 0");
    if (sc.system.frame.mu != sc.system.channel_plan.quantum.mu)
        throw ValidationError(
            "scenario: photons-per-pulse disagree between the channel plan "
            "and the frame generator; set it once under \"quantum\"");
    if (sc.sweep.powers_dbm.empty() || sc.sweep.channel_counts.empty())
        throw ValidationError("scenario: sweep axes must be non-empty");
    for (int n : sc.sweep.channel_counts)
        plan::grid_wavelengths(n);  // throws on unsupported counts
    if (sc.mode == RunMode::session) {
        net::SessionConfig session;
        session.system = sc.system;
        session.duration_s = sc.duration_s;
        session.frames_per_batch = sc.frames_per_batch;
        net::validate(session);
    }
}

SecureRatios secure_ratios(const pipeline::SystemConfig& sys,
                           double skr_bit_s) {
    const sim::FrameConfig& f = sys.frame;
    // Mean pulses per pair: one for a bit, two for a decoy.
    const double pulse_rate = f.frame_rate_hz() * f.pairs_per_frame() *
                              (1.0 + f.decoy_fraction);
    const double slot_rate = f.slot_rate_hz();
    // The detection denominator is the closed-form expected click rate on
    // both detector lines for this operating point, so the ratio is
    // deterministic in every mode.
    const sim::AnalyticRates rates = pipeline::analytic_point(sys).rates;
    const double detection_rate =
        rates.data_click_rate + rates.monitor_click_rate;
    SecureRatios r;
    if (pulse_rate > 0.0) r.per_pulse = skr_bit_s / pulse_rate;
    if (slot_rate > 0.0) r.per_slot = skr_bit_s / slot_rate;
    if (detection_rate > 0.0) r.per_detection = skr_bit_s / detection_rate;
    return r;
}

DistillationReport report_from_analytic(const Scenario& sc,
                                        const pipeline::PointResult& pr) {
    DistillationReport rep;
    rep.scenario_name = sc.name;
    rep.mode = RunMode::analytic;
    rep.skr_bit_s = pr.skr_bit_s;
    rep.qber = pr.qber;
    rep.visibility = pr.visibility;
    rep.sifted_rate_s = pr.sifted_rate_s;
    rep.noise_total_ph_s = pr.noise_total_ph_s;
    rep.ratios = secure_ratios(sc.system, pr.skr_bit_s);
    return rep;
}

DistillationReport report_from_run(const Scenario& sc,
                                   const pipeline::RunReport& rr) {
    DistillationReport rep;
    rep.scenario_name = sc.name;
    rep.mode = RunMode::montecarlo;
    rep.duration_s = rr.duration_s;
    rep.n_frames = rr.n_frames;
    rep.skr_bit_s = rr.skr_bit_s;
    rep.qber = rr.qber;
    rep.visibility = rr.visibility;
    rep.sifted_rate_s = rr.sifted_rate_s;
    rep.secret_bits = rr.distill.secret_bits;
    rep.noise_total_ph_s = rr.noise_total_ph_s;
    rep.ratios = secure_ratios(sc.system, rr.skr_bit_s);
    return rep;
}

DistillationReport report_from_session(const Scenario& sc,
                                       const net::SessionReport& sr) {
    DistillationReport rep;
    rep.scenario_name = sc.name;
    rep.mode = RunMode::session;
    rep.duration_s = sr.duration_s;
    rep.n_frames = pipeline::frames_for_duration(sc.system, sc.duration_s);
    rep.skr_bit_s = sr.skr_bit_s;
    rep.qber = sr.estimates.qber;
    rep.visibility = sr.estimates.visibility;
    if (sr.duration_s > 0.0)
        rep.sifted_rate_s =
            static_cast<double>(sr.n_sifted) / sr.duration_s;
    rep.secret_bits = sr.key.size();
    rep.noise_total_ph_s = pipeline::link_budget(sc.system).noise.total;
    rep.ratios = secure_ratios(sc.system, sr.skr_bit_s);
    rep.aborted = sr.aborted;
    if (sr.aborted)
        rep.abort_reason = std::string(net::to_string(sr.abort_code)) +
                           (sr.abort_text.empty() ? "" : ": " + sr.abort_text);
    return rep;
}

std::string sweep_csv_text(const std::vector<pipeline::SweepRow>& rows) {
    std::string out =
        "channel_count,aggregate_dbm,skr_bit_s,qber,visibility,"
        "noise_total_ph_s\r\n";
    for (const pipeline::SweepRow& r : rows) {
        out += std::to_string(r.channel_count);
        out += ',';
        out += num(r.aggregate_dbm);
        out += ',';
        out += num(r.skr_bit_s);
        out += ',';
        out += num(r.qber);
        out += ',';
        out += num(r.visibility);
        out += ',';
        out += num(r.noise_total_ph_s);
        out += "\r\n";
    }
    return out;
}

std::string report_summary_text(const DistillationReport& rep) {
    std::ostringstream os;
    os << "scenario:          " << rep.scenario_name << "\n";
    os << "mode:              " << to_string(rep.mode) << "\n";
    if (rep.mode != RunMode::analytic) {
        os << "duration_s:        " << num6(rep.duration_s) << "\n";
        os << "frames:            " << rep.n_frames << "\n";
    }
    if (rep.aborted) {
        os << "aborted:           " << rep.abort_reason << "\n";
        return os.str();
    }
    os << "skr_bit_s:         " << num6(rep.skr_bit_s) << "\n";
    os << "qber:              " << num6(rep.qber) << "\n";
    os << "visibility:        " << num6(rep.visibility) << "\n";
    os << "sifted_rate_s:     " << num6(rep.sifted_rate_s) << "\n";
    if (rep.mode != RunMode::analytic)
        os << "secret_bits:       " << rep.secret_bits << "\n";
    os << "noise_total_ph_s:  " << num6(rep.noise_total_ph_s) << "\n";
    os << "secure_ratio:      per_pulse=" << num6(rep.ratios.per_pulse)
       << " per_slot=" << num6(rep.ratios.per_slot)
       << " per_detection=" << num6(rep.ratios.per_detection) << "\n";
    return os.str();
}

std::string plan_summary_text(const pipeline::PlanReport& rep,
                              const std::string& comparison_name) {
    std::ostringstream os;
    os << "skr_target_bit_s:         " << num6(rep.skr_target_bit_s) << "\n";
    os << "feasible:                 " << (rep.feasible ? "yes" : "no")
       << "\n";
    if (rep.feasible) {
        os << "max_aggregate_dbm:        " << num6(rep.max_aggregate_dbm);
        if (rep.reached_upper_bound) os << " (search upper bound)";
        os << "\n";
    }
    os << "comparison (" << comparison_name << "):         ";
    if (rep.comparison_feasible)
        os << num6(rep.comparison_max_dbm) << " dBm max\n";
    else
        os << "infeasible\n";
    if (rep.feasible && rep.comparison_feasible)
        os << "budget_gap_db:            " << num6(rep.budget_gap_db) << "\n";
    os << "required_key_rate_bit_s:  " << num6(rep.required_key_rate_bit_s)
       << (rep.target_covers_consumption ? " (covered by target)"
                                         : " (NOT covered by target)")
       << "\n";
    return os.str();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(text.data(),
              static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

} // namespace qkdcoex::app
