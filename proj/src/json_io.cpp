// All JSON parsing and serialization for scenario files, profile anchor
// tables, calibration files, and report artifacts. The JSON library stays
// confined to this translation unit.

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/scenario.hpp"
#include "qkdcoex/spectral.hpp"

namespace qkdcoex::app {

namespace {

// Ordered maps keep output key order equal to insertion order, which makes
// every emitted artifact deterministic.
using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) {
    throw ValidationError(what);
}

// Any library exception that escapes a typed accessor (missing key, type
// mismatch) is a malformed document, reported uniformly.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        fail(std::string(what) + ": " + e.what());
    }
}

Json parse(const std::string& text, const char* what) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded())
        fail(std::string(what) + ": not valid JSON");
    if (!j.is_object()) fail(std::string(what) + ": top level must be an object");
    return j;
}

// Rejects keys outside the documented schema so a typo cannot silently
// leave a parameter at its default.
void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return item.key() == k; }) ==
            allowed.end())
            fail(where + ": unknown key \"" + item.key() + "\"");
    }
}

double as_double(const Json& v, const std::string& where) {
    if (!v.is_number()) fail(where + ": expected a number");
    return v.get<double>();
}

double get_double(const Json& obj, const char* key, double fallback,
                  const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return as_double(obj.at(key), where + "." + key);
}

std::uint64_t get_u64(const Json& obj, const char* key,
                      std::uint64_t fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.is_number_unsigned() == false && v.get<std::int64_t>() < 0))
        fail(where + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

int get_int(const Json& obj, const char* key, int fallback,
            const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number_integer())
        fail(where + "." + key + ": expected an integer");
    return v.get<int>();
}

std::string get_string(const Json& obj, const char* key,
                       const std::string& fallback,
                       const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_string()) fail(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::string join_path(const std::string& base_dir, const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    if (base_dir.empty() || base_dir == ".") return path;
    return base_dir + "/" + path;
}

// --- profile tables ---------------------------------------------------------

spectral::FiberProfile profile_from(const Json& j, const std::string& where) {
    check_keys(j,
               {"name", "length_km", "pigtail_equivalent_km",
                "calibration_scale", "attenuation", "raman"},
               where);
    spectral::FiberProfile p;
    p.name = get_string(j, "name", "", where);
    p.length_km = get_double(j, "length_km", p.length_km, where);
    p.pigtail_equivalent_km =
        get_double(j, "pigtail_equivalent_km", p.pigtail_equivalent_km, where);
    p.calibration_scale =
        get_double(j, "calibration_scale", p.calibration_scale, where);
    if (!j.contains("attenuation") || !j.at("attenuation").is_array())
        fail(where + ": \"attenuation\" array is required");
    for (const Json& a : j.at("attenuation")) {
        if (!a.is_object()) fail(where + ".attenuation: expected objects");
        check_keys(a, {"nm", "db_per_km"}, where + ".attenuation[]");
        p.attenuation_anchors.emplace_back(
            as_double(a.at("nm"), where + ".attenuation[].nm"),
            as_double(a.at("db_per_km"), where + ".attenuation[].db_per_km"));
    }
    if (!j.contains("raman") || !j.at("raman").is_array())
        fail(where + ": \"raman\" array is required");
    for (const Json& r : j.at("raman")) {
        if (!r.is_object()) fail(where + ".raman: expected objects");
        check_keys(r, {"pump_nm", "probe_nm", "coeff"}, where + ".raman[]");
        p.raman_anchors.push_back(
            {as_double(r.at("pump_nm"), where + ".raman[].pump_nm"),
             as_double(r.at("probe_nm"), where + ".raman[].probe_nm"),
             as_double(r.at("coeff"), where + ".raman[].coeff")});
    }
    // Anchor tables may be written in any order; the lookups expect them
    // sorted.
    std::sort(p.attenuation_anchors.begin(), p.attenuation_anchors.end());
    std::sort(p.raman_anchors.begin(), p.raman_anchors.end(),
              [](const spectral::RamanAnchor& a, const spectral::RamanAnchor& b) {
                  return std::tie(a.pump_nm, a.probe_nm) <
                         std::tie(b.pump_nm, b.probe_nm);
              });
    spectral::validate(p);
    return p;
}

// A medium reference: builtin name, {"file": path}, or a full inline table.
spectral::FiberProfile resolve_profile(const Json& v,
                                       const std::string& base_dir,
                                       const std::string& where) {
    if (v.is_string()) return spectral::builtin_profile(v.get<std::string>());
    if (v.is_object() && v.contains("file")) {
        check_keys(v, {"file"}, where);
        return spectral::load_profile(
            join_path(base_dir, get_string(v, "file", "", where)));
    }
    if (v.is_object()) return profile_from(v, where);
    fail(where + ": expected a builtin name, {\"file\": path}, or a table");
}

// --- scenario ----------------------------------------------------------------

plan::Direction direction_from(const std::string& s, const std::string& where) {
    if (s == "downstream") return plan::Direction::downstream;
    if (s == "upstream") return plan::Direction::upstream;
    fail(where + ": unknown direction \"" + s + "\"");
}

plan::Role role_from(const std::string& s, const std::string& where) {
    if (s == "load") return plan::Role::load;
    if (s == "distill_down") return plan::Role::distill_down;
    if (s == "distill_up") return plan::Role::distill_up;
    fail(where + ": unknown channel role \"" + s + "\"");
}

void apply_plan(const Json& j, pipeline::SystemConfig& sys,
                const std::string& where) {
    check_keys(j, {"channel_count", "aggregate_power_dbm", "channels"}, where);
    if (j.contains("channels")) {
        if (j.contains("channel_count") || j.contains("aggregate_power_dbm"))
            fail(where + ": \"channels\" excludes the grid shorthand keys");
        if (!j.at("channels").is_array())
            fail(where + ".channels: expected an array");
        sys.channel_plan.classical.clear();
        for (const Json& c : j.at("channels")) {
            check_keys(c,
                       {"wavelength_nm", "launch_power_dbm", "direction",
                        "role"},
                       where + ".channels[]");
            if (!c.contains("wavelength_nm"))
                fail(where + ".channels[]: \"wavelength_nm\" is required");
            plan::ClassicalChannel ch;
            ch.wavelength_nm = as_double(c.at("wavelength_nm"),
                                         where + ".channels[].wavelength_nm");
            ch.launch_power_dbm =
                get_double(c, "launch_power_dbm", 0.0, where + ".channels[]");
            ch.direction = direction_from(
                get_string(c, "direction", "downstream", where),
                where + ".channels[].direction");
            ch.role = role_from(get_string(c, "role", "load", where),
                                where + ".channels[].role");
            sys.channel_plan.classical.push_back(ch);
        }
        return;
    }
    // Grid shorthand: rebuild the classical set, keep everything else.
    const int n = get_int(j, "channel_count", 25, where);
    const double dbm = get_double(j, "aggregate_power_dbm", 9.0, where);
    plan::ChannelPlan grid = plan::grid_plan(n, dbm);
    grid.quantum = sys.channel_plan.quantum;
    grid.sync = sys.channel_plan.sync;
    grid.ce = sys.channel_plan.ce;
    sys.channel_plan = grid;
}

SweepAxes axes_from(const Json& j, const std::string& where) {
    check_keys(j, {"powers_dbm", "channel_counts"}, where);
    SweepAxes axes = default_sweep_axes();
    if (j.contains("powers_dbm")) {
        const Json& p = j.at("powers_dbm");
        if (p.is_array()) {
            axes.powers_dbm.clear();
            for (const Json& v : p)
                axes.powers_dbm.push_back(
                    as_double(v, where + ".powers_dbm[]"));
        } else if (p.is_object()) {
            check_keys(p, {"from", "to", "step"}, where + ".powers_dbm");
            const double from = as_double(p.at("from"), where + ".from");
            const double to = as_double(p.at("to"), where + ".to");
            const double step = get_double(p, "step", 1.0, where);
            if (!(step > 0.0) || to < from)
                fail(where + ".powers_dbm: need step > 0 and to >= from");
            axes.powers_dbm.clear();
            for (double v = from; v <= to + 1e-9; v += step)
                axes.powers_dbm.push_back(v);
        } else {
            fail(where + ".powers_dbm: expected an array or {from,to,step}");
        }
    }
    if (j.contains("channel_counts")) {
        if (!j.at("channel_counts").is_array())
            fail(where + ".channel_counts: expected an array");
        axes.channel_counts.clear();
        for (const Json& v : j.at("channel_counts")) {
            if (!v.is_number_integer())
                fail(where + ".channel_counts[]: expected integers");
            axes.channel_counts.push_back(v.get<int>());
        }
    }
    return axes;
}

RunMode mode_from(const std::string& s) {
    if (s == "analytic") return RunMode::analytic;
    if (s == "montecarlo") return RunMode::montecarlo;
    if (s == "session") return RunMode::session;
    fail("scenario.mode: unknown mode \"" + s + "\"");
}

} // namespace

namespace {

Scenario scenario_from_json_impl(const std::string& json_text,
                                 const std::string& base_dir) {
    const Json j = parse(json_text, "scenario");
    check_keys(j,
               {"schema", "name", "preset", "mode", "duration_s", "seed",
                "frames_per_batch", "calibration", "fiber", "pigtail", "plan",
                "quantum", "frame", "detector", "distill",
                "amplifier_ase_ph_s", "extra_background_ph_s", "sweep"},
               "scenario");
    const std::string schema = get_string(j, "schema", "scenario/1", "scenario");
    if (schema != "scenario/1")
        fail("scenario.schema: unsupported schema \"" + schema + "\"");

    Scenario sc;
    sc.name = get_string(j, "name", "inline", "scenario");
    sc.mode = mode_from(get_string(j, "mode", "analytic", "scenario"));
    sc.system = preset_system(get_string(j, "preset", "hcf25", "scenario"));

    if (j.contains("fiber"))
        sc.system.fiber = resolve_profile(j.at("fiber"), base_dir,
                                          "scenario.fiber");
    if (j.contains("pigtail"))
        sc.system.pigtail = resolve_profile(j.at("pigtail"), base_dir,
                                            "scenario.pigtail");
    if (j.contains("plan"))
        apply_plan(j.at("plan"), sc.system, "scenario.plan");

    if (j.contains("quantum")) {
        const Json& q = j.at("quantum");
        check_keys(q, {"wavelength_nm", "mu", "filter_bandwidth_nm"},
                   "scenario.quantum");
        plan::QuantumChannel& qc = sc.system.channel_plan.quantum;
        qc.wavelength_nm =
            get_double(q, "wavelength_nm", qc.wavelength_nm, "scenario.quantum");
        qc.filter_bandwidth_nm = get_double(q, "filter_bandwidth_nm",
                                            qc.filter_bandwidth_nm,
                                            "scenario.quantum");
        // Photons per pulse has one source of truth: the plan's quantum
        // channel. The frame generator inherits it here.
        qc.mu = get_double(q, "mu", qc.mu, "scenario.quantum");
    }
    sc.system.frame.mu = sc.system.channel_plan.quantum.mu;

    if (j.contains("frame")) {
        const Json& f = j.at("frame");
        check_keys(f,
                   {"slot_ns", "slots_per_frame", "frame_period_ns",
                    "decoy_fraction"},
                   "scenario.frame");
        sim::FrameConfig& fc = sc.system.frame;
        fc.slot_ns = get_double(f, "slot_ns", fc.slot_ns, "scenario.frame");
        fc.slots_per_frame = get_int(f, "slots_per_frame", fc.slots_per_frame,
                                     "scenario.frame");
        fc.frame_period_ns = get_double(f, "frame_period_ns",
                                        fc.frame_period_ns, "scenario.frame");
        fc.decoy_fraction = get_double(f, "decoy_fraction", fc.decoy_fraction,
                                       "scenario.frame");
    }

    if (j.contains("detector")) {
        const Json& d = j.at("detector");
        check_keys(d,
                   {"efficiency", "dark_counts_per_s", "dead_time_ns",
                    "data_branch", "monitor_branch",
                    "interferometer_visibility", "intrinsic_error_rate"},
                   "scenario.detector");
        sim::DetectorModel& dm = sc.system.detector;
        dm.efficiency = get_double(d, "efficiency", dm.efficiency,
                                   "scenario.detector");
        dm.dark_counts_per_s = get_double(d, "dark_counts_per_s",
                                          dm.dark_counts_per_s,
                                          "scenario.detector");
        dm.dead_time_ns = get_double(d, "dead_time_ns", dm.dead_time_ns,
                                     "scenario.detector");
        dm.data_branch = get_double(d, "data_branch", dm.data_branch,
                                    "scenario.detector");
        dm.monitor_branch = get_double(d, "monitor_branch", dm.monitor_branch,
                                       "scenario.detector");
        dm.interferometer_visibility =
            get_double(d, "interferometer_visibility",
                       dm.interferometer_visibility, "scenario.detector");
        dm.intrinsic_error_rate =
            get_double(d, "intrinsic_error_rate", dm.intrinsic_error_rate,
                       "scenario.detector");
    }

    if (j.contains("distill")) {
        const Json& d = j.at("distill");
        check_keys(d,
                   {"disclose_fraction", "error_correction_efficiency",
                    "pa_failure_prob", "qber_abort_threshold",
                    "visibility_abort_threshold"},
                   "scenario.distill");
        distill::DistillParams& dp = sc.system.distill;
        dp.disclose_fraction = get_double(d, "disclose_fraction",
                                          dp.disclose_fraction,
                                          "scenario.distill");
        dp.error_correction_efficiency =
            get_double(d, "error_correction_efficiency",
                       dp.error_correction_efficiency, "scenario.distill");
        dp.pa_failure_prob = get_double(d, "pa_failure_prob",
                                        dp.pa_failure_prob, "scenario.distill");
        dp.qber_abort_threshold =
            get_double(d, "qber_abort_threshold", dp.qber_abort_threshold,
                       "scenario.distill");
        dp.visibility_abort_threshold =
            get_double(d, "visibility_abort_threshold",
                       dp.visibility_abort_threshold, "scenario.distill");
    }

    sc.system.amplifier_ase_ph_s =
        get_double(j, "amplifier_ase_ph_s", sc.system.amplifier_ase_ph_s,
                   "scenario");
    sc.system.extra_background_ph_s =
        get_double(j, "extra_background_ph_s",
                   sc.system.extra_background_ph_s, "scenario");

    // Calibration comes last so it wins over profile-table scale values,
    // mirroring how a measured calibration overrides shipped defaults.
    if (j.contains("calibration")) {
        const Json& c = j.at("calibration");
        pipeline::Calibration cal;
        if (c.is_string()) {
            cal = load_calibration(
                join_path(base_dir, c.get<std::string>()));
        } else if (c.is_object()) {
            check_keys(c, {"raman_scale", "intrinsic_visibility"},
                       "scenario.calibration");
            cal.raman_scale = get_double(c, "raman_scale", 1.0,
                                         "scenario.calibration");
            cal.intrinsic_visibility =
                get_double(c, "intrinsic_visibility", 0.98,
                           "scenario.calibration");
        } else {
            fail("scenario.calibration: expected a path or an object");
        }
        pipeline::apply(cal, sc.system);
    }

    sc.duration_s = get_double(j, "duration_s", sc.duration_s, "scenario");
    sc.system.seed = get_u64(j, "seed", sc.system.seed, "scenario");
    sc.frames_per_batch = static_cast<std::uint32_t>(
        get_u64(j, "frames_per_batch", sc.frames_per_batch, "scenario"));
    if (j.contains("sweep")) sc.sweep = axes_from(j.at("sweep"), "scenario.sweep");

    validate(sc);
    return sc;
}

} // namespace

Scenario scenario_from_json(const std::string& json_text,
                            const std::string& base_dir) {
    return guarded("scenario", [&] {
        return scenario_from_json_impl(json_text, base_dir);
    });
}

Scenario load_scenario(const std::string& path) {
    std::string dir = ".";
    const std::size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    Scenario sc = scenario_from_json(read_text_file(path), dir);
    if (sc.name == "inline") {
        const std::string base =
            slash == std::string::npos ? path : path.substr(slash + 1);
        sc.name = base;
    }
    return sc;
}

// --- calibration files -------------------------------------------------------

std::string calibration_json_text(const pipeline::Calibration& cal) {
    Json j;
    j["schema"] = "calibration/1";
    j["raman_scale"] = cal.raman_scale;
    j["intrinsic_visibility"] = cal.intrinsic_visibility;
    j["anchor_skr_bit_s"] = cal.anchor_skr_bit_s;
    j["anchor_qber"] = cal.anchor_qber;
    return j.dump(2) + "\n";
}

void save_calibration(const std::string& path,
                      const pipeline::Calibration& cal) {
    write_text_file(path, calibration_json_text(cal));
}

namespace {

pipeline::Calibration load_calibration_impl(const std::string& path) {
    const Json j = parse(read_text_file(path), "calibration");
    check_keys(j,
               {"schema", "raman_scale", "intrinsic_visibility",
                "anchor_skr_bit_s", "anchor_qber"},
               "calibration");
    const std::string schema =
        get_string(j, "schema", "calibration/1", "calibration");
    if (schema != "calibration/1")
        fail("calibration.schema: unsupported schema \"" + schema + "\"");
    pipeline::Calibration cal;
    if (!j.contains("raman_scale") || !j.contains("intrinsic_visibility"))
        fail("calibration: raman_scale and intrinsic_visibility are required");
    cal.raman_scale = as_double(j.at("raman_scale"), "calibration.raman_scale");
    cal.intrinsic_visibility = as_double(j.at("intrinsic_visibility"),
                                         "calibration.intrinsic_visibility");
    cal.anchor_skr_bit_s =
        get_double(j, "anchor_skr_bit_s", 0.0, "calibration");
    cal.anchor_qber = get_double(j, "anchor_qber", 0.0, "calibration");
    if (!(cal.raman_scale > 0.0) || !std::isfinite(cal.raman_scale))
        fail("calibration.raman_scale: must be positive and finite");
    if (!(cal.intrinsic_visibility >= 0.0) || cal.intrinsic_visibility > 1.0)
        fail("calibration.intrinsic_visibility: must be in [0, 1]");
    return cal;
}

} // namespace

pipeline::Calibration load_calibration(const std::string& path) {
    return guarded("calibration", [&] { return load_calibration_impl(path); });
}

// --- fiber profiles ----------------------------------------------------------

} // namespace qkdcoex::app

namespace qkdcoex::spectral {

FiberProfile profile_from_json(const std::string& json_text) {
    const auto j = nlohmann::ordered_json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("profile: not a JSON object");
    try {
        return qkdcoex::app::profile_from(j, "profile");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("profile: ") + e.what());
    }
}

FiberProfile load_profile(const std::string& path) {
    return profile_from_json(qkdcoex::app::read_text_file(path));
}

} // namespace qkdcoex::spectral

namespace qkdcoex::app {

// --- artifacts ---------------------------------------------------------------

std::string sweep_json_text(const Scenario& sc,
                            const std::vector<pipeline::SweepRow>& rows) {
    Json j;
    j["schema"] = "sweep/1";
    j["scenario"] = sc.name;
    j["seed"] = sc.system.seed;
    Json arr = Json::array();
    for (const pipeline::SweepRow& r : rows) {
        Json row;
        row["channel_count"] = r.channel_count;
        row["aggregate_dbm"] = r.aggregate_dbm;
        row["skr_bit_s"] = r.skr_bit_s;
        row["qber"] = r.qber;
        row["visibility"] = r.visibility;
        row["noise_total_ph_s"] = r.noise_total_ph_s;
        arr.push_back(std::move(row));
    }
    j["rows"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::string report_json_text(const DistillationReport& rep) {
    Json j;
    j["schema"] = "distill-report/1";
    j["scenario"] = rep.scenario_name;
    j["mode"] = to_string(rep.mode);
    j["duration_s"] = rep.duration_s;
    j["n_frames"] = rep.n_frames;
    j["skr_bit_s"] = rep.skr_bit_s;
    j["qber"] = rep.qber;
    j["visibility"] = rep.visibility;
    j["sifted_rate_s"] = rep.sifted_rate_s;
    j["secret_bits"] = rep.secret_bits;
    j["noise_total_ph_s"] = rep.noise_total_ph_s;
    Json ratios;
    ratios["per_pulse"] = rep.ratios.per_pulse;
    ratios["per_slot"] = rep.ratios.per_slot;
    ratios["per_detection"] = rep.ratios.per_detection;
    j["secure_ratio"] = std::move(ratios);
    j["aborted"] = rep.aborted;
    if (rep.aborted) j["abort_reason"] = rep.abort_reason;
    return j.dump(2) + "\n";
}

std::string plan_json_text(const Scenario& sc, const pipeline::PlanReport& rep,
                           const std::string& comparison_name) {
    Json j;
    j["schema"] = "plan-report/1";
    j["scenario"] = sc.name;
    j["skr_target_bit_s"] = rep.skr_target_bit_s;
    j["feasible"] = rep.feasible;
    j["max_aggregate_dbm"] = rep.max_aggregate_dbm;
    j["reached_upper_bound"] = rep.reached_upper_bound;
    Json cmp;
    cmp["name"] = comparison_name;
    cmp["feasible"] = rep.comparison_feasible;
    cmp["max_aggregate_dbm"] = rep.comparison_max_dbm;
    j["comparison"] = std::move(cmp);
    j["budget_gap_db"] = rep.budget_gap_db;
    j["required_key_rate_bit_s"] = rep.required_key_rate_bit_s;
    j["target_covers_consumption"] = rep.target_covers_consumption;
    return j.dump(2) + "\n";
}

} // namespace qkdcoex::app
