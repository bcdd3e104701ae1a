// Acceptance gate for the whole stack: one printed PASS/FAIL line per
// criterion, tolerance windows pinned in this file, nonzero exit when any
// gating line fails. The two fitted scalars are recovered first; the
// operating-point checks run on the fitted profiles, while the property
// suites run on the uncalibrated defaults.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "qkdcoex/bitvec.hpp"
#include "qkdcoex/cow_sim.hpp"
#include "qkdcoex/distill.hpp"
#include "qkdcoex/errors.hpp"
#include "qkdcoex/linkplan.hpp"
#include "qkdcoex/netlink.hpp"
#include "qkdcoex/pipeline.hpp"
#include "qkdcoex/rng.hpp"
#include "qkdcoex/session.hpp"
#include "qkdcoex/spectral.hpp"
#include "qkdcoex/tagstream.hpp"

using namespace qkdcoex;

namespace {

int g_gating_failures = 0;
int g_lines = 0;

std::string fmt(const char* f, ...) {
    char buf[768];
    va_list va;
    va_start(va, f);
    std::vsnprintf(buf, sizeof buf, f, va);
    va_end(va);
    return buf;
}

void line(const char* id, bool ok, const std::string& detail,
          bool gating = true) {
    std::printf("%-4s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    ++g_lines;
    if (!ok) {
        if (gating)
            ++g_gating_failures;
        else
            std::printf(
                "     note: non-gating, known model-level limitation; see "
                "the README\n");
    }
    std::fflush(stdout);
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

// ---------------------------------------------------------------------------
// Tally of accepted clicks classified straight against the schedule.
// ---------------------------------------------------------------------------

struct Tally {
    long long sifted = 0, errors = 0, decoy = 0, outside = 0;
    long long mon_interf = 0, mon_lone = 0;
};

Tally classify(const sim::TagStream& tags,
               const sim::EmissionSchedule& sched) {
    const auto& cfg = sched.config();
    const auto period_ps =
        static_cast<std::uint64_t>(std::llround(cfg.frame_period_ns * 1000.0));
    const auto slot_ps =
        static_cast<std::uint64_t>(std::llround(cfg.slot_ns * 1000.0));
    Tally t;
    for (std::uint64_t ts : tags.data_ts_ps) {
        const std::uint64_t frame = ts / period_ps;
        const int slot = static_cast<int>((ts % period_ps) / slot_ps);
        if (slot >= cfg.slots_per_frame) {
            ++t.outside;
            continue;
        }
        const sim::PairEmission e = sched.pair(frame, slot / 2);
        if (e.decoy) {
            ++t.decoy;
        } else {
            ++t.sifted;
            if ((slot & 1) != e.bit) ++t.errors;
        }
    }
    for (std::uint64_t ts : tags.monitor_ts_ps) {
        const std::uint64_t frame = ts / period_ps;
        const int slot = static_cast<int>((ts % period_ps) / slot_ps);
        if (slot >= cfg.slots_per_frame || !sched.occupied(frame, slot))
            continue;
        if (sched.interfering(frame, slot))
            ++t.mon_interf;
        else
            ++t.mon_lone;
    }
    return t;
}

// Largest |observed - expected| / sigma over a set of Poisson tallies.
struct Deviation {
    double worst = 0.0;
    const char* name = "";
    void add(const char* n, double obs, double exp) {
        const double z = std::fabs(obs - exp) / std::sqrt(std::max(exp, 1.0));
        if (z > worst) {
            worst = z;
            name = n;
        }
    }
};

// ---------------------------------------------------------------------------
// Dense GF(2) reference for the hashing check.
// ---------------------------------------------------------------------------

BitVec dense_toeplitz(const BitVec& seed, const BitVec& input,
                      std::size_t m) {
    const std::size_t n = input.size();
    BitVec out(m);
    for (std::size_t i = 0; i < m; ++i) {
        bool acc = false;
        for (std::size_t j = 0; j < n; ++j)
            acc ^= seed.get(i - j + n - 1) && input.get(j);
        out.set(i, acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Wire-fault machinery for the corruption sweep.
// ---------------------------------------------------------------------------

// Transport decorator that counts outgoing frames and can fault exactly one
// of them: flip one bit, or cut the stream partway through it (an abnormal
// termination, never the deliberate clean close).
class SendTap : public net::Transport {
  public:
    enum class Mode { count, flip_bit, truncate };

    SendTap(std::shared_ptr<net::Transport> inner, Mode mode = Mode::count,
            std::uint64_t target = 0, std::size_t offset = 0, int bit = 0)
        : inner_(std::move(inner)),
          mode_(mode),
          target_(target),
          offset_(offset),
          bit_(bit) {}

    void send(const std::uint8_t* data, std::size_t len) override {
        const std::uint64_t idx = frames_sent_++;
        if (mode_ == Mode::flip_bit && idx == target_) {
            std::vector<std::uint8_t> copy(data, data + len);
            copy[offset_ % len] ^= static_cast<std::uint8_t>(1u << bit_);
            inner_->send(copy.data(), copy.size());
            return;
        }
        if (mode_ == Mode::truncate && idx == target_) {
            inner_->send(data, offset_ % len);
            net::pipe_fail(*inner_);
            return;
        }
        inner_->send(data, len);
    }

    std::size_t recv_some(std::uint8_t* buf, std::size_t max_len) override {
        return inner_->recv_some(buf, max_len);
    }

    void close() override { inner_->close(); }

    std::uint64_t frames_sent() const { return frames_sent_; }

  private:
    std::shared_ptr<net::Transport> inner_;
    Mode mode_;
    std::uint64_t target_;
    std::size_t offset_;
    int bit_;
    std::uint64_t frames_sent_ = 0;
};

struct SessionPair {
    net::SessionReport alice;
    net::SessionReport bob;
};

SessionPair run_over(net::Transport& alice_link, net::Transport& bob_link,
                     const net::SessionConfig& cfg) {
    SessionPair out;
    std::thread alice([&] { out.alice = net::run_alice(alice_link, cfg); });
    out.bob = net::run_bob(bob_link, cfg);
    alice.join();
    return out;
}

// Bright-pulse, zero-hold-off operating point: a full session finishes in
// milliseconds, so the corruption sweep can afford thousands of them.
net::SessionConfig quick_session() {
    net::SessionConfig cfg;
    cfg.system = pipeline::default_system("hcf");
    cfg.system.seed = 77;
    cfg.system.frame.mu = 3.0;
    cfg.system.detector.dead_time_ns = 0.0;
    cfg.duration_s = 0.002;
    cfg.frames_per_batch = 1000;
    return cfg;
}

// Smallest gap between consecutive tags on one detector line, picoseconds.
std::uint64_t min_gap_ps(const std::vector<std::uint64_t>& ts) {
    std::uint64_t best = UINT64_MAX;
    for (std::size_t i = 1; i < ts.size(); ++i)
        best = std::min(best, ts[i] - ts[i - 1]);
    return best;
}

// ---------------------------------------------------------------------------
// Criteria.
// ---------------------------------------------------------------------------

void run_all() {
    // The two-scalar fit runs first; the operating-point criteria use it.
    const pipeline::SystemConfig anchor = pipeline::default_system("hcf");
    const pipeline::Calibration cal =
        pipeline::calibrate(anchor, 1000.0, 0.0131);
    std::printf(
        "calibration: scattering scale %.6f, intrinsic fringe %.6f\n\n",
        cal.raman_scale, cal.intrinsic_visibility);

    const auto calibrated = [&](pipeline::SystemConfig sys) {
        pipeline::apply(cal, sys);
        return sys;
    };

    // C1: the fit must reproduce its own anchor. Window: key rate
    // 1000 bit/s +-10%, error rate 1.31% +-0.1 pp.
    {
        const pipeline::PointResult pr =
            pipeline::analytic_point(calibrated(pipeline::default_system("hcf")));
        const bool ok = within(pr.skr_bit_s, 900.0, 1100.0) &&
                        within(pr.qber, 0.0121, 0.0141);
        line("C1", ok,
             fmt("fitted anchor: key rate %.2f bit/s (want 900..1100), "
                 "error rate %.4f%% (want 1.21..1.41)",
                 pr.skr_bit_s, 100.0 * pr.qber));
    }

    // C2: prediction away from the anchor - full grid pushed to 12 dBm.
    // Window: 330 bit/s +-50%.
    {
        pipeline::SystemConfig sys = calibrated(pipeline::default_system("hcf"));
        sys.channel_plan = plan::with_aggregate_power(sys.channel_plan, 12.0);
        const double skr = pipeline::analytic_point(sys).skr_bit_s;
        line("C2", within(skr, 165.0, 495.0),
             fmt("25 channels at 12 dBm: %.2f bit/s (want 165..495)", skr));
    }

    // C3: six channels near the quantum band at -1 dBm. Window: 3.1 kbit/s
    // +-50%.
    {
        pipeline::SystemConfig sys = calibrated(pipeline::default_system("hcf"));
        sys.channel_plan = plan::grid_plan(6, -1.0);
        const double skr = pipeline::analytic_point(sys).skr_bit_s;
        line("C3", within(skr, 1550.0, 4650.0),
             fmt("6 channels at -1 dBm: %.2f bit/s (want 1550..4650)", skr));
    }

    // C4: the solid-core medium under the same fit. Windows: 107 bit/s
    // +-50% at -13 dBm; the largest load holding 1 kbit/s at -15 +-1.5 dBm.
    {
        pipeline::SystemConfig sys = calibrated(pipeline::default_system("smf"));
        pipeline::SystemConfig at13 = sys;
        at13.channel_plan = plan::with_aggregate_power(sys.channel_plan, -13.0);
        const double skr = pipeline::analytic_point(at13).skr_bit_s;

        const auto skr_of_power = [&](double dbm) {
            pipeline::SystemConfig s = sys;
            s.channel_plan = plan::with_aggregate_power(sys.channel_plan, dbm);
            return pipeline::analytic_point(s).skr_bit_s;
        };
        double p_star = -1e9;
        bool searched = false;
        try {
            p_star = plan::max_coexistence_power(skr_of_power, 1000.0)
                         .aggregate_dbm;
            searched = true;
        } catch (const InfeasibleError&) {
        }
        const bool ok = within(skr, 53.5, 160.5) && searched &&
                        within(p_star, -16.5, -13.5);
        line("C4", ok,
             fmt("solid core at -13 dBm: %.2f bit/s (want 53.5..160.5); "
                 "1 kbit/s holds up to %.2f dBm (want -16.5..-13.5)",
                 skr, p_star));
    }

    // C5: power-budget gap between the two media at the 1 kbit/s target.
    // Window: 24 +-3 dB.
    {
        spectral::FiberProfile comparison = spectral::builtin_profile("smf");
        comparison.calibration_scale = cal.raman_scale;
        const pipeline::PlanReport rep = pipeline::plan_point(
            calibrated(pipeline::default_system("hcf")), comparison, 1000.0);
        const bool ok = rep.feasible && rep.comparison_feasible &&
                        within(rep.budget_gap_db, 21.0, 27.0);
        line("C5", ok,
             fmt("budget gap at 1 kbit/s: %.2f dB (want 21..27); hollow "
                 "core holds %.2f dBm, solid core %.2f dBm",
                 rep.budget_gap_db, rep.max_aggregate_dbm,
                 rep.comparison_max_dbm));
    }

    // C6: two seconds of the bidirectional point, event level, with the
    // full protocol session over an in-process loopback. Windows: key rate
    // 660 bit/s +-50%, error rate 1.91% +-0.5 pp; the fringe line below is
    // non-gating (see the README's known-limitations section).
    {
        net::SessionConfig scfg;
        scfg.system = calibrated(pipeline::bidir_system());
        scfg.duration_s = 2.0;
        auto [a, b] = net::make_pipe();
        SessionPair run = run_over(*a, *b, scfg);

        const bool clean = run.alice.confirmed && run.bob.confirmed &&
                           run.alice.key == run.bob.key;
        const double skr = run.alice.skr_bit_s;
        const double qber = run.alice.estimates.qber;
        const double vis = run.alice.estimates.visibility;
        const bool ok =
            clean && within(skr, 330.0, 990.0) && within(qber, 0.0141, 0.0241);
        line("C6", ok,
             fmt("2 s live session: confirmed=%d, key rate %.2f bit/s "
                 "(want 330..990), error rate %.4f%% (want 1.41..2.41)",
                 clean ? 1 : 0, skr, 100.0 * qber));
        line("C6v", within(vis, 0.903, 0.963),
             fmt("2 s live session fringe: %.4f (want 0.903..0.963)", vis),
             /*gating=*/false);
    }

    // C7: key-consumption arithmetic of the encrypted load: 250 Gbit/s
    // re-keyed per 64 GByte with 256-bit keys needs exactly 125 bit/s.
    {
        const double need = plan::required_key_rate(250e9, 64e9, 256.0);
        const bool ok = need == 125.0 && 1000.0 >= need;
        line("C7", ok,
             fmt("key consumption of the load: %.10g bit/s (want exactly "
                 "125), covered by the 1 kbit/s anchor",
                 need));
    }

    // C8a: event-level tallies against the closed-form twin, 3 sigma, on
    // more than 1e7 slots. Uncalibrated defaults.
    {
        pipeline::SystemConfig sys = pipeline::default_system("hcf");
        const double duration_s = 0.4;  // 2.5e7 slots
        const std::uint64_t n_frames =
            pipeline::frames_for_duration(sys, duration_s);
        const sim::EmissionSchedule sched =
            pipeline::make_schedule(sys, n_frames);
        const sim::TagStream tags = pipeline::simulate_tags(sys, sched);
        const Tally t = classify(tags, sched);
        const sim::AnalyticRates rates =
            pipeline::analytic_point(sys).rates;
        const double T = sched.duration_ns() * 1e-9;

        Deviation dev;
        dev.add("sifted", double(t.sifted), rates.sifted_rate * T);
        dev.add("errors", double(t.errors), rates.error_rate * T);
        dev.add("decoy", double(t.decoy), rates.decoy_click_rate * T);
        dev.add("fringe-suppressed", double(t.mon_interf),
                rates.monitor_interfering_rate * T);
        dev.add("fringe-open", double(t.mon_lone),
                rates.monitor_noninterfering_rate * T);
        const double slots = double(n_frames) * sys.frame.slots_per_frame;
        line("C8a", slots >= 1e7 && dev.worst <= 3.0,
             fmt("event-level vs closed form over %.2g slots: worst "
                 "deviation %.2f sigma (%s) (want <= 3)",
                 slots, dev.worst, dev.name));
    }

    // C8b: scattered-rate linearity in pump power (exact: power-of-two
    // scaling) and additivity of the per-channel noise terms.
    {
        const spectral::FiberProfile smf = spectral::builtin_profile("smf");
        bool linear = true;
        for (double p : {0.125, 1.0, 7.0}) {
            linear = linear &&
                     spectral::forward_spontaneous_raman_rate(
                         2.0 * p, smf, 1550.0, 1538.0, 0.8) ==
                         2.0 * spectral::forward_spontaneous_raman_rate(
                                   p, smf, 1550.0, 1538.0, 0.8);
            linear = linear &&
                     spectral::backward_spontaneous_raman_rate(
                         2.0 * p, smf, 1550.0, 1538.0, 0.8) ==
                         2.0 * spectral::backward_spontaneous_raman_rate(
                                   p, smf, 1550.0, 1538.0, 0.8);
        }

        plan::ChannelPlan two = plan::grid_plan(6, 3.0);
        two.classical.resize(2);
        plan::ChannelPlan first = two, second = two;
        first.classical.resize(1);
        second.classical.erase(second.classical.begin());
        const double bw = two.quantum.filter_bandwidth_nm;
        const double q_nm = two.quantum.wavelength_nm;
        const spectral::NoiseBreakdown nb_two =
            spectral::aggregate_inband_noise(two, smf, q_nm, bw);
        const spectral::NoiseBreakdown nb_a =
            spectral::aggregate_inband_noise(first, smf, q_nm, bw);
        const spectral::NoiseBreakdown nb_b =
            spectral::aggregate_inband_noise(second, smf, q_nm, bw);
        double parts = nb_two.pigtail_rate + nb_two.ase_rate;
        for (const auto& c : nb_two.per_channel)
            parts += c.forward_rate + c.backward_rate;
        const bool additive =
            nb_two.per_channel.size() == 2 &&
            nb_two.per_channel[0].forward_rate ==
                nb_a.per_channel[0].forward_rate &&
            nb_two.per_channel[1].forward_rate ==
                nb_b.per_channel[0].forward_rate &&
            std::fabs(nb_two.total - parts) <= 1e-12 * nb_two.total;
        line("C8b", linear && additive,
             fmt("scattered rate linear in pump power: %d; channel terms "
                 "add independently: %d",
                 linear ? 1 : 0, additive ? 1 : 0));
    }

    // C8c: the streaming hash equals the dense matrix oracle on 1000
    // random cases (n <= 64, m <= n) and collides at the universal rate.
    {
        Rng rng(2024);
        bool match = true;
        for (int trial = 0; trial < 1000 && match; ++trial) {
            const std::size_t n = 1 + rng.below(64);
            const std::size_t m = 1 + rng.below(n);
            const BitVec s =
                BitVec::random(n + m - 1, [&rng] { return rng.next_u64(); });
            const BitVec x =
                BitVec::random(n, [&rng] { return rng.next_u64(); });
            match = distill::toeplitz_hash(s, x, m) == dense_toeplitz(s, x, m);
        }

        // Two fixed distinct inputs, 10000 random seeds, 8 output bits:
        // expect 10000/256 = 39.1 collisions, sigma 6.2; allow 3 sigma.
        const BitVec x = BitVec::random(64, [&rng] { return rng.next_u64(); });
        BitVec y = x;
        y.set(3, !y.get(3));
        y.set(59, !y.get(59));
        int collisions = 0;
        for (int trial = 0; trial < 10000; ++trial) {
            const BitVec s =
                BitVec::random(64 + 8 - 1, [&rng] { return rng.next_u64(); });
            collisions +=
                distill::toeplitz_hash(s, x, 8) == distill::toeplitz_hash(s, y, 8);
        }
        const bool universal = collisions >= 20 && collisions <= 58;
        line("C8c", match && universal,
             fmt("hash equals the dense oracle on 1000 cases: %d; %d/10000 "
                 "collisions at 8 output bits (want 20..58)",
                 match ? 1 : 0, collisions));
    }

    // C8d: a noiseless channel sifts to identical keys on both ends.
    {
        sim::FrameConfig cfg;
        cfg.seed = 11;
        const sim::EmissionSchedule sched(cfg, 20000);
        sim::DetectorModel det;
        det.dark_counts_per_s = 0.0;
        det.intrinsic_error_rate = 0.0;
        det.dead_time_ns = 0.0;
        const sim::TagStream tags =
            sim::simulate_detection(sched, det, sim::ReceiverConditions{}, 501);
        const distill::SiftedKey key = distill::sift(sched, tags);
        const bool ok = key.alice_bits.size() > 3000 &&
                        key.alice_bits == key.bob_bits &&
                        key.double_clicks == 0 && key.out_of_gate_clicks == 0;
        line("C8d", ok,
             fmt("noiseless sift round-trip: %zu bits, transmitter and "
                 "receiver identical: %d",
                 key.alice_bits.size(),
                 key.alice_bits == key.bob_bits ? 1 : 0));
    }

    // C8e: 1e4 random single faults on the wire (bit flips and mid-frame
    // cuts) must never split the outcome: identical keys on both ends or
    // no key on either end.
    {
        const net::SessionConfig cfg = quick_session();
        std::uint64_t alice_frames = 0, bob_frames = 0;
        bool baseline_ok = false;
        {
            auto [a, b] = net::make_pipe();
            SendTap a_tap(a), b_tap(b);
            const SessionPair run = run_over(a_tap, b_tap, cfg);
            baseline_ok = run.alice.confirmed && run.bob.confirmed &&
                          run.alice.key.size() > 0 &&
                          run.alice.key == run.bob.key;
            alice_frames = a_tap.frames_sent();
            bob_frames = b_tap.frames_sent();
        }

        Rng rng(0xFADE);
        const int trials = 10000;
        int split = 0, aborted = 0;
        for (int trial = 0; trial < trials && split == 0; ++trial) {
            const bool flip = trial % 3 != 0;
            const bool on_alice = rng.next_u64() & 1;
            const std::uint64_t frames = on_alice ? alice_frames : bob_frames;
            const std::uint64_t target = rng.below(frames);
            const auto offset = static_cast<std::size_t>(rng.below(4096));
            const int bit = static_cast<int>(rng.below(8));
            const SendTap::Mode mode =
                flip ? SendTap::Mode::flip_bit : SendTap::Mode::truncate;

            // The read deadline bounds trials where a corrupted length
            // field leaves a reader waiting for bytes that never come; a
            // clean exchange finishes in a few milliseconds.
            auto [a, b] = net::make_pipe(0.1);
            SendTap a_tap(a, on_alice ? mode : SendTap::Mode::count, target,
                          offset, bit);
            SendTap b_tap(b, on_alice ? SendTap::Mode::count : mode, target,
                          offset, bit);
            const SessionPair run = run_over(a_tap, b_tap, cfg);

            const bool both_ok = run.alice.confirmed && run.bob.confirmed &&
                                 run.alice.key == run.bob.key;
            const bool both_aborted = run.alice.aborted && run.bob.aborted &&
                                      run.alice.key.empty() &&
                                      run.bob.key.empty();
            if (both_aborted) ++aborted;
            if (!(both_ok || both_aborted)) {
                ++split;
                std::printf(
                    "     split outcome: trial=%d flip=%d on_alice=%d "
                    "target=%llu offset=%zu bit=%d alice(conf=%d abort=%d "
                    "\"%s\") bob(conf=%d abort=%d \"%s\")\n",
                    trial, flip ? 1 : 0, on_alice ? 1 : 0,
                    static_cast<unsigned long long>(target), offset, bit,
                    run.alice.confirmed ? 1 : 0, run.alice.aborted ? 1 : 0,
                    run.alice.abort_text.c_str(), run.bob.confirmed ? 1 : 0,
                    run.bob.aborted ? 1 : 0, run.bob.abort_text.c_str());
            }
        }
        line("C8e", baseline_ok && split == 0,
             fmt("%d random wire faults: %d split outcomes (want 0), %d "
                 "aborted on both ends",
                 trials, split, aborted));
    }

    // C8f: the extractable fraction falls with the error rate and rises
    // with the fringe, over the whole working grid.
    {
        bool monotone = true;
        double prev_q = -1.0;
        for (double v = 0.5; v <= 1.0 + 1e-9; v += 0.02) {
            double prev = 2.0;
            for (double q = 0.0; q <= 0.12 + 1e-9; q += 0.005) {
                const double r = distill::secret_fraction(q, v, 1.1);
                monotone = monotone && r >= 0.0 && r <= 1.0 && r <= prev + 1e-12;
                prev = r;
            }
            (void)prev_q;
        }
        for (double q : {0.0, 0.02, 0.05, 0.11}) {
            double prev = -1.0;
            for (double v = 0.5; v <= 1.0 + 1e-9; v += 0.02) {
                const double r = distill::secret_fraction(q, v, 1.1);
                monotone = monotone && r >= prev - 1e-12;
                prev = r;
            }
        }
        line("C8f", monotone,
             "extractable fraction falls with error rate, rises with "
             "fringe, stays in [0, 1] over the working grid");
    }

    // C8g: no two accepted clicks on one detector line closer than the
    // hold-off, on every generated stream.
    {
        bool ok = true;
        std::uint64_t checked = 0;
        const auto check_stream = [&](const sim::TagStream& tags,
                                      double dead_ns) {
            const auto dead_ps =
                static_cast<std::uint64_t>(std::llround(dead_ns * 1000.0));
            ok = ok && min_gap_ps(tags.data_ts_ps) >= dead_ps &&
                 min_gap_ps(tags.monitor_ts_ps) >= dead_ps;
            checked += tags.data_ts_ps.size() + tags.monitor_ts_ps.size();
        };

        pipeline::SystemConfig sys = pipeline::default_system("hcf");
        check_stream(pipeline::simulate_tags(
                         sys, pipeline::make_schedule(sys, 200000)),
                     sys.detector.dead_time_ns);

        // A bright background with a short hold-off pushes both lines into
        // saturation, the hardest case for the invariant.
        sim::FrameConfig cfg;
        cfg.seed = 5;
        sim::DetectorModel det;
        det.dead_time_ns = 2500.0;
        sim::ReceiverConditions rx;
        rx.background_ph_s = 5e6;
        check_stream(
            sim::simulate_detection(sim::EmissionSchedule(cfg, 100000), det,
                                    rx, 99),
            det.dead_time_ns);
        line("C8g", ok,
             fmt("hold-off respected by all %llu accepted clicks across "
                 "both detector lines",
                 static_cast<unsigned long long>(checked)));
    }

    // C9: the classical receiver model hits its sensitivity anchor and
    // error rate falls monotonically with received power.
    {
        const double at_anchor = plan::classical_ber(-23.6);
        const double rel = std::fabs(at_anchor - 1e-10) / 1e-10;
        bool monotone = true;
        double prev = 2.0;
        for (int i = 0; i < 200; ++i) {
            const double dbm = -40.0 + 40.0 * i / 199.0;
            const double ber = plan::classical_ber(dbm);
            monotone = monotone && ber <= prev + 1e-300;
            prev = ber;
        }
        line("C9", rel < 1e-6 && monotone,
             fmt("receiver error rate at -23.6 dBm: %.6g (want 1e-10, "
                 "relative error %.2g); monotone over 200 points: %d",
                 at_anchor, rel, monotone ? 1 : 0));
    }
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        run_all();
    } catch (const std::exception& e) {
        std::printf("FATAL %s\n", e.what());
        return 1;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("\n%d checks, %d gating failures, %.1f s\n", g_lines,
                g_gating_failures, wall);
    return g_gating_failures == 0 ? 0 : 1;
}
