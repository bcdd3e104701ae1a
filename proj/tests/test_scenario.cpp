#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qkdcoex/cli.hpp"
#include "qkdcoex/errors.hpp"
#include "qkdcoex/netlink.hpp"
#include "qkdcoex/pipeline.hpp"
#include "qkdcoex/scenario.hpp"
#include "qkdcoex/spectral.hpp"

using namespace qkdcoex;
using namespace qkdcoex::app;

namespace {

const std::string kData = QKDCOEX_DATA_DIR;

// Fresh per-process scratch directory for artifacts written by the tests.
std::filesystem::path scratch_dir() {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() /
                 ("scenario_test_" + std::to_string(::getpid()));
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_scratch(const std::string& name, const std::string& text) {
    const std::string path = (scratch_dir() / name).string();
    write_text_file(path, text);
    return path;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qkdcoex");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find("\r\n", pos);
        REQUIRE(nl != std::string::npos);  // every line must end in CRLF
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 2;
    }
    return out;
}

const char* kInlineCalibration =
    "\"calibration\": {\"raman_scale\": 8.947512, "
    "\"intrinsic_visibility\": 0.72656728}";

} // namespace

TEST_CASE("builtin presets resolve to distinct operating points") {
    const pipeline::SystemConfig hcf = preset_system("hcf25");
    CHECK(hcf.fiber.name == "hcf");
    CHECK(hcf.channel_plan.classical.size() == 25);
    CHECK(plan::aggregate_launch_power(hcf.channel_plan) ==
          doctest::Approx(9.0).epsilon(1e-9));

    const pipeline::SystemConfig smf = preset_system("smf25");
    CHECK(smf.fiber.name == "smf");
    CHECK(smf.channel_plan.classical.size() == 25);

    const pipeline::SystemConfig bid = preset_system("hcf_bidir");
    CHECK(bid.fiber.name == "hcf");
    CHECK(bid.extra_background_ph_s == pipeline::kUplinkCrosstalk_ph_s);
    int distill_channels = 0;
    for (const auto& ch : bid.channel_plan.classical)
        if (ch.role != plan::Role::load) ++distill_channels;
    CHECK(distill_channels == 2);

    CHECK_THROWS_AS((void)preset_system("hcf99"), ValidationError);

    for (const char* name : {"hcf25", "smf25", "hcf_bidir"}) {
        Scenario sc;
        sc.system = preset_system(name);
        CHECK_NOTHROW(validate(sc));
    }
}

TEST_CASE("an empty scenario document resolves to the default point") {
    const Scenario sc = scenario_from_json("{}");
    CHECK(sc.name == "inline");
    CHECK(sc.mode == RunMode::analytic);
    CHECK(sc.system.fiber.name == "hcf");
    CHECK(sc.system.channel_plan.classical.size() == 25);
    CHECK(sc.duration_s == 2.0);
    CHECK(sc.system.seed == 1);
    CHECK(sc.sweep.powers_dbm.size() == 35);
    CHECK(sc.sweep.channel_counts == std::vector<int>{1, 6, 13, 25});
    // The frame generator inherits the plan's photon number.
    CHECK(sc.system.frame.mu == sc.system.channel_plan.quantum.mu);
}

TEST_CASE("scenario overrides reach every parameter group") {
    const std::string text = R"({
      "schema": "scenario/1",
      "name": "override-everything",
      "preset": "smf25",
      "mode": "montecarlo",
      "seed": 99,
      "duration_s": 0.25,
      "frames_per_batch": 500,
      "quantum": {"wavelength_nm": 1536.0, "mu": 0.25,
                  "filter_bandwidth_nm": 0.6},
      "frame": {"decoy_fraction": 0.2},
      "detector": {"efficiency": 0.2, "dead_time_ns": 0.0},
      "distill": {"disclose_fraction": 0.2},
      "plan": {"channel_count": 6, "aggregate_power_dbm": 3.0},
      "amplifier_ase_ph_s": 1000.0,
      "extra_background_ph_s": 2000.0,
      "sweep": {"powers_dbm": [0.0, 3.0], "channel_counts": [1, 6]}
    })";
    const Scenario sc = scenario_from_json(text);
    CHECK(sc.name == "override-everything");
    CHECK(sc.mode == RunMode::montecarlo);
    CHECK(sc.system.seed == 99);
    CHECK(sc.duration_s == 0.25);
    CHECK(sc.frames_per_batch == 500);
    CHECK(sc.system.fiber.name == "smf");
    CHECK(sc.system.channel_plan.quantum.wavelength_nm == 1536.0);
    CHECK(sc.system.channel_plan.quantum.filter_bandwidth_nm == 0.6);
    CHECK(sc.system.channel_plan.quantum.mu == 0.25);
    // One source of truth for the photon number.
    CHECK(sc.system.frame.mu == 0.25);
    CHECK(sc.system.frame.decoy_fraction == 0.2);
    CHECK(sc.system.detector.efficiency == 0.2);
    CHECK(sc.system.detector.dead_time_ns == 0.0);
    CHECK(sc.system.distill.disclose_fraction == 0.2);
    CHECK(sc.system.channel_plan.classical.size() == 6);
    CHECK(plan::aggregate_launch_power(sc.system.channel_plan) ==
          doctest::Approx(3.0).epsilon(1e-9));
    CHECK(sc.system.amplifier_ase_ph_s == 1000.0);
    CHECK(sc.system.extra_background_ph_s == 2000.0);
    CHECK(sc.sweep.powers_dbm == std::vector<double>{0.0, 3.0});
    CHECK(sc.sweep.channel_counts == std::vector<int>{1, 6});
}

TEST_CASE("malformed scenario documents are rejected with the cause") {
    const char* bad[] = {
        "not json at all",
        "[1, 2, 3]",
        R"({"bogus": 1})",
        R"({"schema": "scenario/2"})",
        R"({"mode": "quantum-leap"})",
        R"({"preset": "hcf99"})",
        R"({"quantum": {"bogus": 1}})",
        R"({"frame": {"bogus": 1}})",
        R"({"detector": {"bogus": 1}})",
        R"({"distill": {"bogus": 1}})",
        R"({"plan": {"bogus": 1}})",
        R"({"sweep": {"bogus": 1}})",
        R"({"calibration": {"bogus": 1}})",
        R"({"calibration": 7})",
        R"({"plan": {"channels": [], "channel_count": 6}})",
        R"({"plan": {"channels": [{"launch_power_dbm": 0.0}]}})",
        R"({"sweep": {"powers_dbm": {"from": 3.0, "to": 0.0}}})",
        R"({"sweep": {"powers_dbm": {"from": 0.0, "to": 3.0, "step": 0.0}}})",
        R"({"sweep": {"channel_counts": [1.5]}})",
        R"({"sweep": {"channel_counts": []}})",
        R"({"duration_s": -1.0})",
        R"({"seed": -4})",
        R"({"quantum": {"mu": "high"}})",
    };
    for (const char* text : bad) {
        CAPTURE(text);
        CHECK_THROWS_AS((void)scenario_from_json(text), ValidationError);
    }
}

TEST_CASE("a power axis given as from/to/step expands inclusively") {
    const Scenario sc = scenario_from_json(
        R"({"sweep": {"powers_dbm": {"from": -2.0, "to": 2.0, "step": 1.0}}})");
    REQUIRE(sc.sweep.powers_dbm.size() == 5);
    CHECK(sc.sweep.powers_dbm.front() == doctest::Approx(-2.0));
    CHECK(sc.sweep.powers_dbm.back() == doctest::Approx(2.0));

    const Scenario one = scenario_from_json(
        R"({"sweep": {"powers_dbm": {"from": 4.0, "to": 4.0}}})");
    REQUIRE(one.sweep.powers_dbm.size() == 1);
    CHECK(one.sweep.powers_dbm[0] == doctest::Approx(4.0));
}

TEST_CASE("an explicit channel list replaces the grid") {
    const Scenario sc = scenario_from_json(R"({
      "plan": {"channels": [
        {"wavelength_nm": 1550.2, "launch_power_dbm": -3.0,
         "direction": "upstream", "role": "distill_up"},
        {"wavelength_nm": 1545.0}
      ]}
    })");
    REQUIRE(sc.system.channel_plan.classical.size() == 2);
    const auto& a = sc.system.channel_plan.classical[0];
    CHECK(a.wavelength_nm == 1550.2);
    CHECK(a.launch_power_dbm == -3.0);
    CHECK(a.direction == plan::Direction::upstream);
    CHECK(a.role == plan::Role::distill_up);
    const auto& b = sc.system.channel_plan.classical[1];
    CHECK(b.wavelength_nm == 1545.0);
    CHECK(b.launch_power_dbm == 0.0);
    CHECK(b.direction == plan::Direction::downstream);
    CHECK(b.role == plan::Role::load);
    // The quantum side of the plan is untouched by the channel list.
    CHECK(sc.system.channel_plan.quantum.wavelength_nm == 1538.0);
}

TEST_CASE("profile tables roundtrip through their JSON form") {
    // Anchors deliberately out of order: the loader must sort both tables.
    const std::string text = R"({
      "name": "toy",
      "length_km": 1.5,
      "attenuation": [
        {"nm": 1600.0, "db_per_km": 0.3},
        {"nm": 1300.0, "db_per_km": 0.5}
      ],
      "raman": [
        {"pump_nm": 1550.0, "probe_nm": 1560.0, "coeff": 20.0},
        {"pump_nm": 1550.0, "probe_nm": 1500.0, "coeff": 10.0}
      ]
    })";
    const spectral::FiberProfile p = spectral::profile_from_json(text);
    CHECK(p.name == "toy");
    CHECK(p.length_km == 1.5);
    CHECK(spectral::attenuation_db_per_km(p, 1300.0) ==
          doctest::Approx(0.5));
    CHECK(spectral::attenuation_db_per_km(p, 1600.0) ==
          doctest::Approx(0.3));
    CHECK(spectral::raman_coefficient(p, 1550.0, 1500.0) ==
          doctest::Approx(10.0));
    CHECK(spectral::raman_coefficient(p, 1550.0, 1560.0) ==
          doctest::Approx(20.0));

    CHECK_THROWS_AS((void)spectral::profile_from_json("若干 garbage"),
                    ValidationError);
    CHECK_THROWS_AS(
        (void)spectral::profile_from_json(R"({"name": "x", "length_km": 1})"),
        ValidationError);  // anchor tables are required
    CHECK_THROWS_AS((void)spectral::profile_from_json(R"({
        "name": "x", "length_km": 1,
        "attenuation": [{"nm": 1550, "db_per_km": -0.1}],
        "raman": [{"pump_nm": 1550, "probe_nm": 1538, "coeff": 1}]
      })"),
                    ValidationError);  // negative attenuation
    CHECK_THROWS_AS((void)spectral::profile_from_json(R"({
        "name": "x", "length_km": 1,
        "attenuation": [{"nm": 1550, "db_per_km": 0.2}],
        "raman": [{"pump_nm": 1550, "probe_nm": 1100, "coeff": 1}],
        "bogus": true
      })"),
                    ValidationError);  // unknown key
}

TEST_CASE("the shipped example profile loads and answers queries") {
    const spectral::FiberProfile p =
        spectral::load_profile(kData + "/profiles/lab_hollowcore.json");
    CHECK(p.name == "lab-hollowcore");
    CHECK(p.length_km == 2.2);
    CHECK(spectral::attenuation_db_per_km(p, 1538.0) == doctest::Approx(1.4));
    // Flat table: the quantum-band coefficient equals the anchored level.
    CHECK(spectral::raman_coefficient(p, 1550.2, 1538.0) ==
          doctest::Approx(150.0));
}

TEST_CASE("calibration files roundtrip and reject nonsense") {
    pipeline::Calibration cal;
    cal.raman_scale = 3.25;
    cal.intrinsic_visibility = 0.91;
    cal.anchor_skr_bit_s = 512.5;
    cal.anchor_qber = 0.0123;
    const std::string path = (scratch_dir() / "cal_roundtrip.json").string();
    save_calibration(path, cal);
    const pipeline::Calibration back = load_calibration(path);
    CHECK(back.raman_scale == cal.raman_scale);
    CHECK(back.intrinsic_visibility == cal.intrinsic_visibility);
    CHECK(back.anchor_skr_bit_s == cal.anchor_skr_bit_s);
    CHECK(back.anchor_qber == cal.anchor_qber);

    const char* bad[] = {
        R"({"schema": "calibration/2", "raman_scale": 1, "intrinsic_visibility": 0.9})",
        R"({"raman_scale": 1})",
        R"({"raman_scale": 0.0, "intrinsic_visibility": 0.9})",
        R"({"raman_scale": 1.0, "intrinsic_visibility": 1.5})",
        R"({"raman_scale": 1.0, "intrinsic_visibility": 0.9, "bogus": 1})",
    };
    for (const char* text : bad) {
        CAPTURE(text);
        const std::string p = write_scratch("cal_bad.json", text);
        CHECK_THROWS_AS((void)load_calibration(p), ValidationError);
    }
}

TEST_CASE("the shipped calibration file matches a fresh fit") {
    const pipeline::Calibration shipped =
        load_calibration(kData + "/calibration.json");
    const pipeline::Calibration fit =
        pipeline::calibrate(preset_system("hcf25"), 1000.0, 0.0131);
    CHECK(shipped.raman_scale ==
          doctest::Approx(fit.raman_scale).epsilon(1e-6));
    CHECK(shipped.intrinsic_visibility ==
          doctest::Approx(fit.intrinsic_visibility).epsilon(1e-6));
    CHECK(fit.anchor_skr_bit_s == doctest::Approx(1000.0).epsilon(1e-9));
    CHECK(fit.anchor_qber == doctest::Approx(0.0131).epsilon(1e-9));
}

TEST_CASE("sweep CSV is deterministic, sorted, and fully populated") {
    const pipeline::SystemConfig sys = preset_system("hcf25");
    const std::vector<pipeline::SweepRow> rows =
        pipeline::sweep_grid(sys, {6, 1}, {9.0, 0.0, 3.0});
    REQUIRE(rows.size() == 6);
    const std::string text = sweep_csv_text(rows);
    CHECK(text == sweep_csv_text(rows));  // same input, same bytes

    const std::vector<std::string> lines = split_lines(text);
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] ==
          "channel_count,aggregate_dbm,skr_bit_s,qber,visibility,"
          "noise_total_ph_s");
    // Rows come back sorted by (channel_count, power) regardless of the
    // axis order given.
    int prev_count = 0;
    double prev_power = -1e9;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        int count = 0;
        double power = 0.0, skr = 0.0, qber = 0.0, vis = 0.0, noise = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &count,
                            &power, &skr, &qber, &vis, &noise) == 6);
        if (count == prev_count)
            CHECK(power > prev_power);
        else
            CHECK(count > prev_count);
        prev_count = count;
        prev_power = power;
        CHECK(skr > 0.0);
        CHECK(qber > 0.0);
        CHECK(noise > 0.0);
        CHECK(vis > 0.0);
    }
}

TEST_CASE("report JSON carries the abort reason only when aborted") {
    DistillationReport rep;
    rep.scenario_name = "x";
    rep.mode = RunMode::session;
    rep.skr_bit_s = 123.0;
    const nlohmann::json ok = nlohmann::json::parse(report_json_text(rep));
    CHECK(ok.at("schema") == "distill-report/1");
    CHECK(ok.at("mode") == "session");
    CHECK(ok.at("skr_bit_s") == 123.0);
    CHECK(ok.at("secure_ratio").contains("per_pulse"));
    CHECK(ok.at("secure_ratio").contains("per_slot"));
    CHECK(ok.at("secure_ratio").contains("per_detection"));
    CHECK(ok.at("aborted") == false);
    CHECK(!ok.contains("abort_reason"));

    rep.aborted = true;
    rep.abort_reason = "qber_limit: sample error rate too high";
    const nlohmann::json ab = nlohmann::json::parse(report_json_text(rep));
    CHECK(ab.at("aborted") == true);
    CHECK(ab.at("abort_reason") == rep.abort_reason);
}

TEST_CASE("secure ratios divide by the documented denominators") {
    const pipeline::SystemConfig sys = preset_system("hcf25");
    const double skr = 500.0;
    const SecureRatios r = secure_ratios(sys, skr);

    // Default framing: 64 slots of 1 ns per 1024 ns frame.
    const double frame_rate = 1e9 / 1024.0;
    CHECK(r.per_slot == doctest::Approx(skr / (64.0 * frame_rate))
                            .epsilon(1e-12));
    // 32 pairs per frame; a pair carries one pulse, a decoy pair two.
    const double pulse_rate = frame_rate * 32.0 * 1.1;
    CHECK(r.per_pulse == doctest::Approx(skr / pulse_rate).epsilon(1e-12));

    const sim::AnalyticRates rates = pipeline::analytic_point(sys).rates;
    CHECK(r.per_detection ==
          doctest::Approx(skr / (rates.data_click_rate +
                                 rates.monitor_click_rate))
              .epsilon(1e-12));
    // Clicks are rarer than pulses, so the per-detection ratio is largest.
    CHECK(r.per_detection > r.per_pulse);
    CHECK(r.per_pulse > r.per_slot);

    const SecureRatios zero = secure_ratios(sys, 0.0);
    CHECK(zero.per_pulse == 0.0);
    CHECK(zero.per_slot == 0.0);
    CHECK(zero.per_detection == 0.0);
}

TEST_CASE("the shipped scenario files load and carry their calibration") {
    const Scenario sweep =
        load_scenario(kData + "/scenarios/hcf25_sweep.json");
    CHECK(sweep.name == "hcf25-sweep");
    CHECK(sweep.mode == RunMode::analytic);
    CHECK(sweep.system.fiber.calibration_scale ==
          doctest::Approx(8.947512).epsilon(1e-9));
    CHECK(sweep.system.pigtail.calibration_scale ==
          doctest::Approx(8.947512).epsilon(1e-9));
    CHECK(sweep.system.detector.interferometer_visibility ==
          doctest::Approx(0.72656728).epsilon(1e-9));

    const Scenario mc = load_scenario(kData + "/scenarios/hcf25_run.json");
    CHECK(mc.mode == RunMode::montecarlo);
    CHECK(mc.duration_s == 0.5);

    const Scenario lab = load_scenario(kData + "/scenarios/lab_patch_run.json");
    CHECK(lab.system.fiber.name == "lab-hollowcore");
    CHECK(lab.system.channel_plan.classical.size() == 1);

    const Scenario bidir =
        load_scenario(kData + "/scenarios/bidir_session.json");
    CHECK(bidir.mode == RunMode::session);
    CHECK(bidir.system.extra_background_ph_s ==
          pipeline::kUplinkCrosstalk_ph_s);
    CHECK(bidir.frames_per_batch == 2000);
}

TEST_CASE("the command line drives a sweep end to end") {
    const std::string scenario = write_scratch("tiny_sweep.json", R"({
      "schema": "scenario/1",
      "preset": "hcf25",
      "mode": "analytic",
      )" + std::string(kInlineCalibration) + R"(,
      "sweep": {"powers_dbm": [6.0, 9.0], "channel_counts": [1]}
    })");
    const std::string out1 = (scratch_dir() / "sweep1").string();
    const std::string out2 = (scratch_dir() / "sweep2").string();
    REQUIRE(cli({"sweep", "--scenario", scenario, "--out", out1}) == 0);
    REQUIRE(cli({"sweep", "--scenario", scenario, "--out", out2}) == 0);

    const std::string csv1 = read_text_file(out1 + "/sweep.csv");
    const std::string csv2 = read_text_file(out2 + "/sweep.csv");
    CHECK(csv1 == csv2);  // reruns are bit-identical
    CHECK(split_lines(csv1).size() == 3);

    const nlohmann::json j =
        nlohmann::json::parse(read_text_file(out1 + "/sweep.json"));
    CHECK(j.at("schema") == "sweep/1");
    CHECK(j.at("rows").size() == 2);
    CHECK(j.at("scenario") == "tiny_sweep.json");
}

TEST_CASE("the command line rejects bad input with the input exit code") {
    const std::string bad = write_scratch("bad.json", R"({"bogus": 1})");
    CHECK(cli({"run", "--scenario", bad}) == 2);
    CHECK(cli({"run", "--scenario",
               (scratch_dir() / "missing.json").string()}) == 2);

    // An analytic scenario has nothing to run event by event.
    const std::string analytic = write_scratch(
        "analytic.json", R"({"schema": "scenario/1", "mode": "analytic"})");
    CHECK(cli({"run", "--scenario", analytic}) == 2);
}

TEST_CASE("a zero-duration run completes with an empty report") {
    const std::string scenario = write_scratch("zero.json", R"({
      "schema": "scenario/1", "mode": "montecarlo", "duration_s": 0.0
    })");
    const std::string out = (scratch_dir() / "zero_out").string();
    REQUIRE(cli({"run", "--scenario", scenario, "--out", out}) == 0);
    const nlohmann::json j =
        nlohmann::json::parse(read_text_file(out + "/report.json"));
    CHECK(j.at("n_frames") == 0);
    CHECK(j.at("secret_bits") == 0);
    CHECK(j.at("skr_bit_s") == 0.0);
    CHECK(j.at("aborted") == false);
}

TEST_CASE("a CLI simulation run reproduces the library result") {
    const std::string path = kData + "/scenarios/lab_patch_run.json";
    const std::string out = (scratch_dir() / "lab_out").string();
    REQUIRE(cli({"run", "--scenario", path, "--out", out}) == 0);
    const nlohmann::json j =
        nlohmann::json::parse(read_text_file(out + "/report.json"));

    const Scenario sc = load_scenario(path);
    const pipeline::RunReport rr =
        pipeline::montecarlo_run(sc.system, sc.duration_s);
    CHECK(j.at("skr_bit_s").get<double>() ==
          doctest::Approx(rr.skr_bit_s).epsilon(1e-12));
    CHECK(j.at("qber").get<double>() ==
          doctest::Approx(rr.qber).epsilon(1e-12));
    CHECK(j.at("n_frames").get<std::uint64_t>() == rr.n_frames);
    CHECK(j.at("secret_bits").get<std::uint64_t>() ==
          rr.distill.alice_key.size());

    // The seed override changes the outcome.
    const std::string out2 = (scratch_dir() / "lab_out2").string();
    REQUIRE(cli({"run", "--scenario", path, "--out", out2, "--seed",
                 "12345"}) == 0);
    const nlohmann::json j2 =
        nlohmann::json::parse(read_text_file(out2 + "/report.json"));
    CHECK(j2.at("skr_bit_s").get<double>() != j.at("skr_bit_s").get<double>());
}

TEST_CASE("two CLI endpoints distill the same key over TCP") {
    // Find a free port, then release it for the listening endpoint. The
    // connect side retries refused connections, so start order is free.
    std::uint16_t port = 0;
    {
        net::TcpListener probe(0);
        port = probe.port();
    }
    const std::string scenario = write_scratch("session.json", R"({
      "schema": "scenario/1",
      "preset": "hcf_bidir",
      "mode": "session",
      "seed": 11,
      "duration_s": 0.2,
      )" + std::string(kInlineCalibration) + R"(
    })");
    const std::string out_a = (scratch_dir() / "ep_alice").string();
    const std::string out_b = (scratch_dir() / "ep_bob").string();

    int rc_bob = -1;
    std::thread bob([&] {
        rc_bob = cli({"distill", "--scenario", scenario, "--role", "bob",
                      "--listen", std::to_string(port), "--out", out_b});
    });
    const int rc_alice =
        cli({"distill", "--scenario", scenario, "--role", "alice",
             "--connect", "127.0.0.1:" + std::to_string(port), "--out",
             out_a});
    bob.join();
    REQUIRE(rc_alice == 0);
    REQUIRE(rc_bob == 0);

    const std::string key_a = read_text_file(out_a + "/key_alice.bin");
    const std::string key_b = read_text_file(out_b + "/key_bob.bin");
    CHECK(!key_a.empty());
    CHECK(key_a == key_b);

    const nlohmann::json ja =
        nlohmann::json::parse(read_text_file(out_a + "/session_alice.json"));
    CHECK(ja.at("aborted") == false);
    CHECK(ja.at("mode") == "session");
    CHECK(ja.at("secret_bits").get<std::uint64_t>() > 0);
    const nlohmann::json jb =
        nlohmann::json::parse(read_text_file(out_b + "/session_bob.json"));
    CHECK(jb.at("secret_bits") == ja.at("secret_bits"));
}

TEST_CASE("the plan command reports both media") {
    const std::string out = (scratch_dir() / "plan_out").string();
    REQUIRE(cli({"plan", "--scenario",
                 kData + "/scenarios/hcf25_sweep.json", "--target", "125",
                 "--out", out}) == 0);
    const nlohmann::json j =
        nlohmann::json::parse(read_text_file(out + "/plan.json"));
    CHECK(j.at("schema") == "plan-report/1");
    CHECK(j.at("skr_target_bit_s") == 125.0);
    CHECK(j.at("feasible") == true);
    CHECK(j.at("comparison").at("name") == "smf");
    // The hollow-core link tolerates far more launch power than the
    // solid-core comparison at the same key-rate target.
    CHECK(j.at("budget_gap_db").get<double>() > 10.0);
    CHECK(j.at("required_key_rate_bit_s") == 125.0);
}

TEST_CASE("the calibrate command reproduces the shipped fit") {
    const std::string out = (scratch_dir() / "cal_out").string();
    REQUIRE(cli({"calibrate", "--out", out}) == 0);
    const pipeline::Calibration cal =
        load_calibration(out + "/calibration.json");
    const pipeline::Calibration shipped =
        load_calibration(kData + "/calibration.json");
    CHECK(cal.raman_scale ==
          doctest::Approx(shipped.raman_scale).epsilon(1e-6));
    CHECK(cal.intrinsic_visibility ==
          doctest::Approx(shipped.intrinsic_visibility).epsilon(1e-6));
    CHECK(cal.anchor_skr_bit_s == doctest::Approx(1000.0).epsilon(1e-9));
    CHECK(cal.anchor_qber == doctest::Approx(0.0131).epsilon(1e-9));
}
