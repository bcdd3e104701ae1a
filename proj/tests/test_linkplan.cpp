#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/linkplan.hpp"
#include "qkdcoex/spectral.hpp"

using namespace qkdcoex;
using namespace qkdcoex::plan;

TEST_CASE("grid endpoints and spacing") {
    auto g25 = grid_wavelengths(25);
    REQUIRE(g25.size() == 25);
    CHECK(g25.front() == doctest::Approx(1540.56).epsilon(1e-5));
    CHECK(g25.back() == doctest::Approx(1598.90).epsilon(1e-5));

    auto g6 = grid_wavelengths(6);
    REQUIRE(g6.size() == 6);
    CHECK(g6.front() == doctest::Approx(1540.56).epsilon(1e-5));
    CHECK(g6.back() == doctest::Approx(1544.53).epsilon(1e-5));
    // exact 100 GHz spacing in frequency
    for (size_t i = 1; i < g6.size(); ++i) {
        double f0 = spectral::kSpeedOfLight_nm_thz / g6[i - 1];
        double f1 = spectral::kSpeedOfLight_nm_thz / g6[i];
        CHECK(f0 - f1 == doctest::Approx(0.1).epsilon(1e-9));
    }

    auto g13 = grid_wavelengths(13);
    REQUIRE(g13.size() == 13);
    CHECK(g13.front() == doctest::Approx(g25.front()));
    CHECK(g13.back() == doctest::Approx(g25.back()));

    CHECK(grid_wavelengths(1).size() == 1);
    CHECK_THROWS_AS(grid_wavelengths(7), ValidationError);
}

TEST_CASE("aggregate launch power arithmetic") {
    ChannelPlan p;
    for (int i = 0; i < 25; ++i)
        p.classical.push_back({1540.0 + i, -1.979, Direction::downstream, Role::load});
    CHECK(aggregate_launch_power(p) == doctest::Approx(12.0).epsilon(0.001));

    ChannelPlan single;
    single.classical.push_back({1550.12, 5.0, Direction::downstream, Role::load});
    CHECK(aggregate_launch_power(single) == doctest::Approx(5.0).epsilon(1e-12));

    ChannelPlan none;
    CHECK(std::isinf(aggregate_launch_power(none)));
    CHECK(aggregate_launch_power(none) < 0);

    // dB-sum of two disjoint sets equals the aggregate of the union
    ChannelPlan a, b, u;
    a.classical.push_back({1550.0, 3.0, Direction::downstream, Role::load});
    b.classical.push_back({1560.0, 7.0, Direction::downstream, Role::load});
    u.classical = a.classical;
    u.classical.push_back(b.classical[0]);
    double lin = dbm_to_mw(aggregate_launch_power(a)) + dbm_to_mw(aggregate_launch_power(b));
    CHECK(aggregate_launch_power(u) == doctest::Approx(mw_to_dbm(lin)).epsilon(1e-12));
}

TEST_CASE("grid plans equalize per-channel power") {
    ChannelPlan p = grid_plan(25, 9.0);
    CHECK(aggregate_launch_power(p) == doctest::Approx(9.0).epsilon(1e-9));
    for (const auto& ch : p.classical)
        CHECK(ch.launch_power_dbm == doctest::Approx(9.0 - 10.0 * std::log10(25.0)));

    ChannelPlan r = with_aggregate_power(p, -3.0);
    CHECK(aggregate_launch_power(r) == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("bidirectional plan structure") {
    ChannelPlan p = bidir_plan(9.0);
    int loads = 0, up = 0, down = 0;
    for (const auto& ch : p.classical) {
        if (ch.role == Role::load) ++loads;
        if (ch.role == Role::distill_up) {
            ++up;
            CHECK(ch.direction == Direction::upstream);
            CHECK(ch.wavelength_nm == doctest::Approx(1552.52).epsilon(1e-5));
            CHECK(ch.launch_power_dbm == doctest::Approx(-12.5));
        }
        if (ch.role == Role::distill_down) {
            ++down;
            CHECK(ch.direction == Direction::downstream);
            CHECK(ch.wavelength_nm == doctest::Approx(1554.94).epsilon(1e-5));
        }
    }
    CHECK(loads == 23);
    CHECK(up == 1);
    CHECK(down == 1);
    // distillation channels do not count toward the aggregate
    CHECK(aggregate_launch_power(p) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("plan validation") {
    ChannelPlan p;
    p.classical.push_back({1538.0, 0.0, Direction::downstream, Role::load});
    CHECK_THROWS_AS(validate(p), ValidationError);

    ChannelPlan dup;
    dup.classical.push_back({1550.0, 0.0, Direction::downstream, Role::load});
    dup.classical.push_back({1550.0, 3.0, Direction::downstream, Role::load});
    CHECK_THROWS_AS(validate(dup), ValidationError);

    ChannelPlan empty;
    CHECK_NOTHROW(validate(empty));
}

TEST_CASE("quantum path loss sums mux, fiber, demux") {
    ChannelPlan p;
    CHECK(quantum_path_loss(p, spectral::builtin_profile("hcf")) ==
          doctest::Approx(10.6).epsilon(1e-9));
    CHECK(quantum_path_loss(p, spectral::builtin_profile("smf")) ==
          doctest::Approx(3.22).epsilon(1e-9));

    // zero-length-ish fiber with zero element losses -> ~0
    spectral::FiberProfile f = spectral::builtin_profile("smf");
    f.length_km = 1e-9;
    ChannelPlan z;
    z.ce.quantum_mux_db = 0.0;
    z.ce.quantum_demux_db = 0.0;
    CHECK(quantum_path_loss(z, f) == doctest::Approx(0.0).epsilon(1e-9));

    // additive over concatenated segments
    spectral::FiberProfile half = spectral::builtin_profile("hcf");
    half.length_km = 7.7 / 2.0;
    ChannelPlan bare;
    bare.ce.quantum_mux_db = 0.0;
    bare.ce.quantum_demux_db = 0.0;
    CHECK(quantum_path_loss(bare, half) * 2.0 ==
          doctest::Approx(quantum_path_loss(bare, spectral::builtin_profile("hcf")))
              .epsilon(1e-9));
}

TEST_CASE("key renewal arithmetic") {
    CHECK(required_key_rate(250e9, 64e9, 256) == 125.0);  // exact in IEEE
    CHECK(required_key_rate(0.0, 64e9, 256) == 0.0);
    CHECK(required_key_rate(500e9, 64e9, 256) == 2.0 * required_key_rate(250e9, 64e9, 256));
    CHECK(1000.0 >= required_key_rate(250e9, 64e9, 256));
    CHECK_THROWS_AS(required_key_rate(1.0, 0.0, 256), ValidationError);
}

TEST_CASE("classical BER model anchors and monotonicity") {
    ClassicalReceiver rx;
    double at_sens = classical_ber(-23.6, rx);
    CHECK(std::fabs(at_sens - 1e-10) / 1e-10 < 1e-6);

    // 3 dB above sensitivity: far below the reference, clamped at the floor
    double high = classical_ber(-20.6, rx);
    CHECK(high < 1e-10);
    CHECK(high == rx.ber_floor);

    double prev = 1.0;
    for (int i = 0; i < 200; ++i) {
        double rop = -45.0 + i * 0.15;
        double b = classical_ber(rop, rx);
        CHECK(b <= prev + 1e-18);
        CHECK(b >= rx.ber_floor);
        CHECK(b <= 0.5 + 1e-12);
        prev = b;
    }
}

TEST_CASE("power bisection on synthetic monotone rate curves") {
    // skr falls 10x per 3 dB, crosses 1000 bit/s at exactly +5 dBm
    auto skr = [](double dbm) { return 1000.0 * std::pow(10.0, -(dbm - 5.0) / 3.0); };
    PowerSearchResult r = max_coexistence_power(skr, 1000.0);
    CHECK(!r.reached_upper_bound);
    CHECK(r.aggregate_dbm == doctest::Approx(5.0).epsilon(0.02));
    CHECK(skr(r.aggregate_dbm - 0.2) >= 1000.0);
    CHECK(skr(r.aggregate_dbm + 0.2) < 1000.0);

    PowerSearchResult top = max_coexistence_power(skr, 0.0);
    CHECK(top.reached_upper_bound);
    CHECK(top.aggregate_dbm == 30.0);

    CHECK_THROWS_AS(max_coexistence_power(skr, 1e20), InfeasibleError);
}
