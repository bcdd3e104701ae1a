#include "qkdcoex/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/scenario.hpp"

namespace qkdcoex::app {

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kRuntimeFailure = 3;

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
};

Scenario load(const CommonOpts& opts) {
    Scenario sc = load_scenario(opts.scenario_path);
    if (opts.seed) sc.system.seed = *opts.seed;
    return sc;
}

std::string out_path(const CommonOpts& opts, const std::string& file) {
    std::filesystem::create_directories(opts.out_dir);
    return opts.out_dir + "/" + file;
}

// Accepts "port" or "host:port"; the host part matters only when
// connecting.
void split_endpoint(const std::string& endpoint, std::string& host,
                    std::uint16_t& port) {
    const std::size_t colon = endpoint.find_last_of(':');
    const std::string port_str =
        colon == std::string::npos ? endpoint : endpoint.substr(colon + 1);
    if (colon != std::string::npos && colon > 0)
        host = endpoint.substr(0, colon);
    int value = 0;
    try {
        value = std::stoi(port_str);
    } catch (const std::exception&) {
        throw ValidationError("endpoint \"" + endpoint +
                              "\": expected host:port or port");
    }
    if (value < 0 || value > 65535)
        throw ValidationError("endpoint \"" + endpoint +
                              "\": port out of range");
    port = static_cast<std::uint16_t>(value);
}

int cmd_sweep(const CommonOpts& opts) {
    const Scenario sc = load(opts);
    const std::vector<pipeline::SweepRow> rows = pipeline::sweep_grid(
        sc.system, sc.sweep.channel_counts, sc.sweep.powers_dbm);
    const std::string csv_path = out_path(opts, "sweep.csv");
    write_text_file(csv_path, sweep_csv_text(rows));
    const std::string json_path = out_path(opts, "sweep.json");
    write_text_file(json_path, sweep_json_text(sc, rows));
    std::cout << "swept " << sc.sweep.channel_counts.size() << " x "
              << sc.sweep.powers_dbm.size() << " grid (" << rows.size()
              << " rows) -> " << csv_path << ", " << json_path << "\n";
    return kOk;
}

int write_and_print(const CommonOpts& opts, const DistillationReport& rep,
                    const std::string& json_name) {
    write_text_file(out_path(opts, json_name), report_json_text(rep));
    std::cout << report_summary_text(rep);
    return rep.aborted ? kRuntimeFailure : kOk;
}

int cmd_run(const CommonOpts& opts) {
    const Scenario sc = load(opts);
    if (sc.mode == RunMode::analytic)
        throw ValidationError(
            "run needs a montecarlo or session scenario; use sweep for "
            "closed-form rates");

    if (pipeline::frames_for_duration(sc.system, sc.duration_s) == 0) {
        DistillationReport rep;  // nothing simulated, empty by construction
        rep.scenario_name = sc.name;
        rep.mode = sc.mode;
        return write_and_print(opts, rep, "report.json");
    }

    if (sc.mode == RunMode::montecarlo) {
        const pipeline::RunReport rr =
            pipeline::montecarlo_run(sc.system, sc.duration_s);
        return write_and_print(opts, report_from_run(sc, rr), "report.json");
    }

    // Session mode: both protocol endpoints in-process over a loopback
    // pipe, reported from the transmitter's side.
    net::SessionConfig session;
    session.system = sc.system;
    session.duration_s = sc.duration_s;
    session.frames_per_batch = sc.frames_per_batch;
    auto [alice_end, bob_end] = net::make_pipe();
    net::SessionReport alice_rep;
    std::thread alice(
        [&] { alice_rep = net::run_alice(*alice_end, session); });
    net::run_bob(*bob_end, session);
    alice.join();

    return write_and_print(opts, report_from_session(sc, alice_rep),
                           "report.json");
}

int cmd_distill(const CommonOpts& opts, const std::string& role,
                const std::string& connect, const std::string& listen) {
    const Scenario sc = load(opts);
    net::SessionConfig session;
    session.system = sc.system;
    session.duration_s = sc.duration_s;
    session.frames_per_batch = sc.frames_per_batch;

    std::unique_ptr<net::Transport> link;
    if (!listen.empty()) {
        std::string host;
        std::uint16_t port = 0;
        split_endpoint(listen, host, port);
        net::TcpListener listener(port);
        std::cout << "listening on port " << listener.port() << "\n";
        link = listener.accept();
    } else {
        std::string host = "127.0.0.1";
        std::uint16_t port = 0;
        split_endpoint(connect, host, port);
        link = net::tcp_connect(host, port);
    }

    const net::SessionReport rep = role == "alice"
                                       ? net::run_alice(*link, session)
                                       : net::run_bob(*link, session);

    write_text_file(out_path(opts, "session_" + role + ".json"),
                    report_json_text(report_from_session(sc, rep)));
    if (rep.aborted) {
        std::cerr << "session aborted: " << net::to_string(rep.abort_code)
                  << (rep.abort_text.empty() ? "" : ": " + rep.abort_text)
                  << "\n";
        return kRuntimeFailure;
    }
    const std::vector<std::uint8_t> key_bytes = rep.key.to_bytes();
    const std::string key_path = out_path(opts, "key_" + role + ".bin");
    write_text_file(key_path,
                    std::string(key_bytes.begin(), key_bytes.end()));
    std::cout << "confirmed " << rep.key.size() << " key bits ("
              << rep.skr_bit_s << " bit/s) -> " << key_path << "\n";
    return kOk;
}

int cmd_plan(const CommonOpts& opts, double target,
             std::string comparison_name) {
    const Scenario sc = load(opts);
    if (comparison_name.empty())
        comparison_name = sc.system.fiber.name == "hcf" ? "smf" : "hcf";
    spectral::FiberProfile comparison =
        spectral::builtin_profile(comparison_name);
    // The fitted scattering scale normalizes the shared reference
    // condition, so it applies to every medium in the comparison.
    comparison.calibration_scale = sc.system.fiber.calibration_scale;
    const pipeline::PlanReport rep =
        pipeline::plan_point(sc.system, comparison, target);
    write_text_file(out_path(opts, "plan.json"),
                    plan_json_text(sc, rep, comparison_name));
    std::cout << plan_summary_text(rep, comparison_name);
    return kOk;
}

int cmd_calibrate(const CommonOpts& opts, double target_skr,
                  double target_qber) {
    // The fit anchor defaults to the full-grid hollow-core operating point
    // unless a scenario says otherwise.
    Scenario sc;
    if (!opts.scenario_path.empty()) {
        sc = load(opts);
    } else {
        sc.system = preset_system("hcf25");
        if (opts.seed) sc.system.seed = *opts.seed;
    }
    const pipeline::Calibration cal =
        pipeline::calibrate(sc.system, target_skr, target_qber);
    const std::string path = out_path(opts, "calibration.json");
    save_calibration(path, cal);
    std::cout << "raman_scale:           " << cal.raman_scale << "\n"
              << "intrinsic_visibility:  " << cal.intrinsic_visibility << "\n"
              << "anchor skr_bit_s:      " << cal.anchor_skr_bit_s << "\n"
              << "anchor qber:           " << cal.anchor_qber << "\n"
              << "wrote " << path << "\n";
    return kOk;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{
        "Quantum/classical co-existence toolbox: link noise, key-rate "
        "sweeps, event-level simulation, and live key distillation."};
    app.require_subcommand(1);

    CommonOpts opts;
    double plan_target = 0.0;
    std::string plan_comparison;
    double cal_skr = 1000.0;
    double cal_qber = 0.0131;
    std::string role;
    std::string connect;
    std::string listen;

    const auto add_common = [&](CLI::App* cmd, bool scenario_required) {
        CLI::Option* s =
            cmd->add_option("--scenario", opts.scenario_path,
                            "Scenario file (JSON, schema scenario/1)");
        if (scenario_required) s->required();
        cmd->add_option("--out", opts.out_dir,
                        "Output directory (created if missing)");
        cmd->add_option("--seed", opts.seed,
                        "Override the scenario's random seed");
    };

    CLI::App* sweep = app.add_subcommand(
        "sweep", "Closed-form key-rate grid over launch power and channel "
                 "count (CSV + JSON)");
    add_common(sweep, true);

    CLI::App* run = app.add_subcommand(
        "run", "Event-level simulation or in-process session for the "
               "scenario's duration");
    add_common(run, true);

    CLI::App* distill = app.add_subcommand(
        "distill", "One live distillation endpoint over TCP");
    add_common(distill, true);
    distill->add_option("--role", role, "Protocol role")
        ->required()
        ->check(CLI::IsMember({"alice", "bob"}));
    CLI::Option* conn = distill->add_option(
        "--connect", connect, "Peer endpoint host:port to connect to");
    CLI::Option* lis = distill->add_option(
        "--listen", listen, "Local port (or host:port) to accept the peer "
                            "on");
    conn->excludes(lis);
    lis->excludes(conn);

    CLI::App* plan = app.add_subcommand(
        "plan", "Power-budget planning against a comparison medium");
    add_common(plan, true);
    plan->add_option("--target", plan_target,
                     "Secret-key-rate target in bit/s (0: report the "
                     "unclamped maximum)");
    plan->add_option("--comparison", plan_comparison,
                     "Comparison medium: smf, hcf, or tff");

    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "Fit the scattering scale and interferometer "
                     "visibility to an anchor operating point");
    add_common(calibrate, false);
    calibrate->add_option("--target-skr", cal_skr,
                          "Anchor secret key rate, bit/s");
    calibrate->add_option("--target-qber", cal_qber, "Anchor error rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(sweep)) return cmd_sweep(opts);
        if (app.got_subcommand(run)) return cmd_run(opts);
        if (app.got_subcommand(distill)) {
            if (connect.empty() && listen.empty())
                throw ValidationError(
                    "distill needs --connect or --listen");
            return cmd_distill(opts, role, connect, listen);
        }
        if (app.got_subcommand(plan))
            return cmd_plan(opts, plan_target, plan_comparison);
        if (app.got_subcommand(calibrate))
            return cmd_calibrate(opts, cal_skr, cal_qber);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return kBadInput;  // unreachable with require_subcommand(1)
}

} // namespace qkdcoex::app
