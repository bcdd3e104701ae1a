#include "qkdcoex/linkplan.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/stats.hpp"

namespace qkdcoex::plan {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) {
    if (mw <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mw);
}

void validate(const ChannelPlan& p) {
    if (!(p.quantum.mu > 0.0) || p.quantum.mu > 1.0)
        throw ValidationError("quantum mu must lie in (0, 1]");
    if (!(p.quantum.filter_bandwidth_nm > 0.0))
        throw ValidationError("quantum filter bandwidth must be > 0");
    for (size_t i = 0; i < p.classical.size(); ++i) {
        const auto& ch = p.classical[i];
        double dq = std::fabs(ch.wavelength_nm - p.quantum.wavelength_nm);
        if (dq < p.quantum.filter_bandwidth_nm) {
            std::ostringstream oss;
            oss << "classical channel at " << ch.wavelength_nm
                << " nm collides with the quantum window at "
                << p.quantum.wavelength_nm << " nm";
            throw ValidationError(oss.str());
        }
        for (size_t j = i + 1; j < p.classical.size(); ++j) {
            if (std::fabs(ch.wavelength_nm - p.classical[j].wavelength_nm) < 1e-6) {
                std::ostringstream oss;
                oss << "duplicate classical wavelength " << ch.wavelength_nm << " nm";
                throw ValidationError(oss.str());
            }
        }
    }
}

double aggregate_launch_power(const ChannelPlan& p) {
    double mw = 0.0;
    for (const auto& ch : p.classical)
        if (ch.role == Role::load && ch.direction == Direction::downstream)
            mw += dbm_to_mw(ch.launch_power_dbm);
    return mw_to_dbm(mw);
}

namespace {

constexpr double kC = spectral::kSpeedOfLight_nm_thz;

// 25-channel grid: uniform in frequency from 194.6 THz down by 7.1 THz.
std::vector<double> grid25() {
    std::vector<double> v;
    for (int k = 0; k < 25; ++k)
        v.push_back(kC / (194.6 - k * (7.1 / 24.0)));
    return v;
}

} // namespace

std::vector<double> grid_wavelengths(int n_channels) {
    switch (n_channels) {
    case 25:
        return grid25();
    case 13: {
        std::vector<double> v, g = grid25();
        for (size_t k = 0; k < g.size(); k += 2) v.push_back(g[k]);
        return v;
    }
    case 6: {
        // 100 GHz spacing starting at the blue edge of the band.
        std::vector<double> v;
        for (int k = 0; k < 6; ++k) v.push_back(kC / (194.6 - k * 0.1));
        return v;
    }
    case 1:
        return {kC / 193.4};
    default:
        throw ValidationError("supported grid sizes are 1, 6, 13, 25");
    }
}

ChannelPlan grid_plan(int n_channels, double aggregate_dbm) {
    ChannelPlan p;
    double per_ch = aggregate_dbm - 10.0 * std::log10(double(n_channels));
    for (double nm : grid_wavelengths(n_channels))
        p.classical.push_back({nm, per_ch, Direction::downstream, Role::load});
    validate(p);
    return p;
}

ChannelPlan bidir_plan(double aggregate_dbm, double distill_power_dbm) {
    ChannelPlan p;
    std::vector<double> g = grid25();
    const double down_nm = kC / 192.8;  // distillation downlink
    const double up_nm = kC / 193.1;    // distillation uplink, counter-propagating
    size_t drop_down = 0, drop_up = 0;
    for (size_t k = 0; k < g.size(); ++k) {
        if (std::fabs(g[k] - down_nm) < std::fabs(g[drop_down] - down_nm)) drop_down = k;
        if (std::fabs(g[k] - up_nm) < std::fabs(g[drop_up] - up_nm)) drop_up = k;
    }
    double per_ch = aggregate_dbm - 10.0 * std::log10(double(g.size() - 2));
    for (size_t k = 0; k < g.size(); ++k) {
        if (k == drop_down || k == drop_up) continue;
        p.classical.push_back({g[k], per_ch, Direction::downstream, Role::load});
    }
    p.classical.push_back({down_nm, distill_power_dbm, Direction::downstream, Role::distill_down});
    p.classical.push_back({up_nm, distill_power_dbm, Direction::upstream, Role::distill_up});
    validate(p);
    return p;
}

ChannelPlan with_aggregate_power(const ChannelPlan& p, double aggregate_dbm) {
    ChannelPlan out = p;
    int n = 0;
    for (const auto& ch : out.classical)
        if (ch.role == Role::load && ch.direction == Direction::downstream) ++n;
    if (n == 0)
        throw ValidationError("plan has no load channels to re-equalize");
    double per_ch = aggregate_dbm - 10.0 * std::log10(double(n));
    for (auto& ch : out.classical)
        if (ch.role == Role::load && ch.direction == Direction::downstream)
            ch.launch_power_dbm = per_ch;
    return out;
}

double quantum_path_loss(const ChannelPlan& p, const spectral::FiberProfile& f) {
    return p.ce.quantum_mux_db +
           spectral::attenuation_db_per_km(f, p.quantum.wavelength_nm) * f.length_km +
           p.ce.quantum_demux_db;
}

double required_key_rate(double capacity_bps, double chunk_bytes,
                         double key_len_bits) {
    if (capacity_bps < 0.0 || !(chunk_bytes > 0.0) || !(key_len_bits > 0.0))
        throw ValidationError("required_key_rate needs capacity >= 0, chunk > 0, key_len > 0");
    return capacity_bps / (8.0 * chunk_bytes) * key_len_bits;
}

double classical_ber(double rop_dbm, const ClassicalReceiver& rx) {
    if (!(rx.reference_ber > 0.0) || rx.reference_ber >= 1.0)
        throw ValidationError("reference_ber must lie in (0, 1)");
    double q_ref = normal_upper_quantile(rx.reference_ber);
    double q = q_ref * std::pow(10.0, (rop_dbm - rx.sensitivity_dbm) / 10.0);
    double ber = 0.5 * std::erfc(q / std::sqrt(2.0));
    return ber < rx.ber_floor ? rx.ber_floor : ber;
}

PowerSearchResult max_coexistence_power(
    const std::function<double(double)>& skr_of_power, double skr_target) {
    constexpr double kLo = -40.0, kHi = 30.0, kTol = 0.1;
    if (skr_of_power(kHi) >= skr_target) return {kHi, true};
    if (skr_of_power(kLo) < skr_target) {
        std::ostringstream oss;
        oss << "key-rate target " << skr_target
            << " bit/s not reachable even at " << kLo << " dBm";
        throw InfeasibleError(oss.str());
    }
    double lo = kLo, hi = kHi;  // lo meets the target, hi misses it
    while (hi - lo > kTol) {
        double mid = 0.5 * (lo + hi);
        (skr_of_power(mid) >= skr_target ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), false};
}

} // namespace qkdcoex::plan
