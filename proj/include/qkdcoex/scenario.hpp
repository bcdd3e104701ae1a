#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdcoex/pipeline.hpp"
#include "qkdcoex/session.hpp"

namespace qkdcoex::app {

// What a scenario asks the runner to do: closed-form rates, an event-level
// simulation, or a two-endpoint protocol session.
enum class RunMode { analytic, montecarlo, session };

const char* to_string(RunMode m);

struct SweepAxes {
    std::vector<double> powers_dbm;
    std::vector<int> channel_counts;
};

// The default grid: aggregate launch powers -20..+14 dBm in 1 dB steps,
// channel counts {1, 6, 13, 25}.
SweepAxes default_sweep_axes();

// A fully resolved run description: operating point plus what to do with
// it. Scenario files (schema "scenario/1", documented in the README) start
// from a named preset and override individual parameter groups; loading
// resolves everything down to this struct.
struct Scenario {
    std::string name = "inline";
    RunMode mode = RunMode::analytic;
    pipeline::SystemConfig system;
    double duration_s = 2.0;
    std::uint32_t frames_per_batch = 1000;  // session mode framing
    SweepAxes sweep = default_sweep_axes();
};

// Delegates to the subsystem validators and checks the sweep axes.
void validate(const Scenario& sc);

// Builtin operating points: "hcf25" (hollow-core, full 25-channel grid at
// 9 dBm), "smf25" (same grid on standard fiber), "hcf_bidir" (hollow-core
// with the bidirectional distillation channel pair).
pipeline::SystemConfig preset_system(const std::string& name);

// Parses and resolves a scenario. base_dir anchors relative paths
// referenced by the scenario (calibration files, profile files). Throws
// ValidationError on malformed or unknown content, IoError on unreadable
// referenced files.
Scenario scenario_from_json(const std::string& json_text,
                            const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

// Calibration files, schema "calibration/1": the two fitted scalars plus
// the anchor outcome they achieved.
std::string calibration_json_text(const pipeline::Calibration& cal);
void save_calibration(const std::string& path,
                      const pipeline::Calibration& cal);
pipeline::Calibration load_calibration(const std::string& path);

// Sweep artifacts. The CSV is RFC-4180 (CRLF line endings, header row) and
// deterministic: a fixed scenario and seed reproduce it bit for bit.
std::string sweep_csv_text(const std::vector<pipeline::SweepRow>& rows);
std::string sweep_json_text(const Scenario& sc,
                            const std::vector<pipeline::SweepRow>& rows);

// Secret-key throughput expressed against the three candidate
// denominators, so no single convention has to be guessed.
struct SecureRatios {
    double per_pulse = 0.0;      // per emitted pulse
    double per_slot = 0.0;       // per gated slot
    double per_detection = 0.0;  // per expected detector click (both lines)
};

SecureRatios secure_ratios(const pipeline::SystemConfig& sys,
                           double skr_bit_s);

// One run's outcome, common to all three modes; schema "distill-report/1".
struct DistillationReport {
    std::string scenario_name;
    RunMode mode = RunMode::analytic;
    double duration_s = 0.0;  // simulated span (0 for closed-form rates)
    std::uint64_t n_frames = 0;
    double skr_bit_s = 0.0;
    double qber = 0.0;
    double visibility = 0.0;
    double sifted_rate_s = 0.0;
    std::uint64_t secret_bits = 0;
    double noise_total_ph_s = 0.0;
    SecureRatios ratios;
    bool aborted = false;  // session mode only
    std::string abort_reason;
};

DistillationReport report_from_analytic(const Scenario& sc,
                                        const pipeline::PointResult& pr);
DistillationReport report_from_run(const Scenario& sc,
                                   const pipeline::RunReport& rr);
DistillationReport report_from_session(const Scenario& sc,
                                       const net::SessionReport& sr);

std::string report_json_text(const DistillationReport& rep);
std::string report_summary_text(const DistillationReport& rep);

// Planner artifacts: JSON plus the human-readable lines.
std::string plan_json_text(const Scenario& sc,
                           const pipeline::PlanReport& rep,
                           const std::string& comparison_name);
std::string plan_summary_text(const pipeline::PlanReport& rep,
                              const std::string& comparison_name);

// Small file helpers shared by the commands: whole-file text I/O with
// IoError on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace qkdcoex::app
