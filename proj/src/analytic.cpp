#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "qkdcoex/cow_sim.hpp"
#include "qkdcoex/errors.hpp"
#include "click_model.hpp"

namespace qkdcoex::sim {

namespace {

// One period of per-bin click probabilities split into named parts. mass[k]
// sums (with the unsplit remainder) to the total click probability q of the
// bin; splits are additive, which overcounts coincidences by O(q^2).
struct BinMasses {
    std::vector<double> q;                    // exact total per bin
    std::vector<std::vector<double>> masses;  // one vector per category
};

// Periodic steady state of the free->click->hold-off renewal cycle.
// Returns the per-cycle click-phase distribution rho and the expected cycle
// length in bins; accepted rate at bin c is rho[c] / cycle_bins per bin.
struct RenewalState {
    std::vector<double> rho;
    double cycle_bins = 0.0;
};

// Distribution of the first click phase for chains released with phase
// distribution pi: a forward cyclic scan with survival factor (1 - q),
// closed over the period by summing the geometric number of empty laps.
// Also reports the mean number of bins searched (gap + 1).
struct ScanResult {
    std::vector<double> click;  // click[c] = P(first click at bin c)
    double searched_bins = 0.0;
};

ScanResult scan_first_click(const std::vector<double>& q,
                            const std::vector<double>& pi) {
    const auto P = q.size();
    // Survival across one full lap and a stable 1 - G.
    double logG = 0.0;
    for (double v : q) logG += std::log1p(-v);
    const double one_minus_G = -std::expm1(logG);

    // One pass with unknown inflow S0 at bin 0: S = u + S0 * h.
    std::vector<double> u(P), h(P);
    double uc = 0.0, hc = 1.0;
    for (size_t c = 0; c < P; ++c) {
        uc += pi[c];
        u[c] = uc;
        h[c] = hc;
        uc *= 1.0 - q[c];
        hc *= 1.0 - q[c];
    }
    // Periodicity: S0 = inflow surviving a full lap plus fresh injections.
    const double S0 = one_minus_G > 0.0 ? uc / one_minus_G : 0.0;

    ScanResult r;
    r.click.resize(P);
    double total = 0.0, searched = 0.0;
    for (size_t c = 0; c < P; ++c) {
        // Periodic searching mass: empty extra laps are already folded in
        // through the geometric closure above.
        const double S = u[c] + S0 * h[c];
        r.click[c] = S * q[c];
        total += r.click[c];
        searched += S;
    }
    if (total > 0.0)
        for (double& v : r.click) v /= total;
    r.searched_bins = total > 0.0 ? searched / total : 0.0;
    return r;
}

RenewalState renewal_steady_state(const std::vector<double>& q,
                                  std::int64_t dead_bins) {
    const auto P = static_cast<std::int64_t>(q.size());
    RenewalState st;
    const double qsum = std::accumulate(q.begin(), q.end(), 0.0);
    if (qsum <= 0.0) {
        st.rho.assign(q.size(), 0.0);
        st.cycle_bins = 0.0;
        return st;
    }
    std::vector<double> pi(q.size(), 1.0 / static_cast<double>(P));
    ScanResult sc;
    for (int iter = 0; iter < 20000; ++iter) {
        sc = scan_first_click(q, pi);
        // Next release phase: click phase shifted by the hold-off.
        std::vector<double> next(q.size());
        for (std::int64_t c = 0; c < P; ++c)
            next[(c + dead_bins) % P] = sc.click[c];
        double sup = 0.0;
        for (std::int64_t i = 0; i < P; ++i)
            sup = std::max(sup, std::abs(next[i] - pi[i]));
        pi.swap(next);
        if (sup < 1e-15) break;
    }
    sc = scan_first_click(q, pi);
    st.rho = sc.click;
    // gap = searched bins - 1 (release bin itself counts as searched).
    st.cycle_bins = (sc.searched_bins - 1.0) + static_cast<double>(dead_bins);
    return st;
}

// Accepted clicks/s for each category: the per-cycle click mass at bin c is
// apportioned by the category share of that bin's probability.
std::vector<double> accepted_rates(const BinMasses& bm, std::int64_t dead_bins,
                                   double bin_rate_hz) {
    const auto P = bm.q.size();
    std::vector<double> out(bm.masses.size(), 0.0);
    if (dead_bins < 1) {
        for (size_t c = 0; c < P; ++c)
            for (size_t k = 0; k < bm.masses.size(); ++k)
                out[k] += bm.masses[k][c] * bin_rate_hz / static_cast<double>(P);
        // bin_rate_hz is bins/s; per-bin probability times slots of that
        // phase per second = mass * (bin_rate / P).
        return out;
    }
    const RenewalState st = renewal_steady_state(bm.q, dead_bins);
    if (st.cycle_bins <= 0.0) return out;
    const double cycles_per_s = bin_rate_hz / st.cycle_bins;
    for (size_t c = 0; c < P; ++c) {
        if (bm.q[c] <= 0.0) continue;
        const double click_rate_c = st.rho[c] * cycles_per_s;
        for (size_t k = 0; k < bm.masses.size(); ++k)
            out[k] += click_rate_c * bm.masses[k][c] / bm.q[c];
    }
    return out;
}

double combine(double a, double b) { return 1.0 - (1.0 - a) * (1.0 - b); }

} // namespace

std::vector<double> alive_profile(const std::vector<double>& q,
                                  std::int64_t dead_bins) {
    if (q.empty()) throw ValidationError("alive profile: empty period");
    for (double v : q)
        if (v < 0.0 || v > 1.0)
            throw DomainError("alive profile: probability outside [0,1]");
    const auto P = static_cast<std::int64_t>(q.size());
    std::vector<double> a(q.size(), 1.0);
    if (dead_bins < 1) return a;
    const RenewalState st = renewal_steady_state(q, dead_bins);
    if (st.cycle_bins <= 0.0) return a;
    // z(b) = P(an accepted click occurs in a given bin of phase b): clicks
    // land at phase b rho(b) times per cycle and a phase recurs once per
    // lap, i.e. every P of the cycle's bins. A click at b blocks bins
    // b+1 .. b+dead-1, and accepted clicks are at least a hold-off apart,
    // so any blocking window holds at most one: P(dead at c) is the plain
    // window sum of z.
    std::vector<double> z(q.size());
    double zsum = 0.0;
    for (size_t b = 0; b < q.size(); ++b) {
        z[b] = st.rho[b] * static_cast<double>(P) / st.cycle_bins;
        zsum += z[b];
    }
    const std::int64_t window = dead_bins - 1;
    const std::int64_t laps = window / P;
    const std::int64_t rem = window % P;
    // Rolling partial sum of the rem bins preceding c.
    double part = 0.0;
    for (std::int64_t j = 1; j <= rem; ++j) part += z[(P - j) % P];
    for (std::int64_t c = 0; c < P; ++c) {
        const double dead = static_cast<double>(laps) * zsum + part;
        a[static_cast<size_t>(c)] = std::clamp(1.0 - dead, 0.0, 1.0);
        part += z[static_cast<size_t>(c)] - z[(c - rem + P) % P];
    }
    return a;
}

AnalyticRates cow_analytic(const FrameConfig& config, const DetectorModel& det,
                           const ReceiverConditions& rx) {
    validate(config);
    validate(det);
    if (rx.transmittance < 0.0 || rx.transmittance > 1.0)
        throw ValidationError("receiver: transmittance outside [0,1]");
    if (rx.background_ph_s < 0.0)
        throw ValidationError("receiver: negative background rate");

    const ClickModel cm = make_click_model(config, det, rx);
    const auto P = static_cast<size_t>(
        std::llround(config.frame_period_ns / config.slot_ns));
    const auto gate = static_cast<size_t>(config.slots_per_frame);
    const auto dead_bins =
        static_cast<std::int64_t>(std::llround(det.dead_time_ns / config.slot_ns));
    const double bin_s = config.slot_ns * 1e-9;
    const double df = config.decoy_fraction;
    const double qi = det.intrinsic_error_rate;
    const double occ = df + (1.0 - df) / 2.0;  // marginal slot occupancy

    const double qbg_d = -std::expm1(-cm.bg_data_cps * bin_s);
    const double qbg_m = -std::expm1(-cm.bg_monitor_cps * bin_s);

    // Data line: categories sift-correct, sift-error, decoy, out-of-gate.
    enum { kCorrect, kError, kDecoy, kOutside, kDataCats };
    BinMasses data;
    data.q.assign(P, qbg_d);
    data.masses.assign(kDataCats, std::vector<double>(P, 0.0));
    for (size_t s = 0; s < P; ++s) {
        if (s < gate) {
            data.q[s] = combine(occ * cm.p_data, qbg_d);
            data.masses[kCorrect][s] =
                (1.0 - df) * 0.5 * (1.0 - qi) * cm.p_data +
                (1.0 - df) * 0.5 * qbg_d;
            data.masses[kError][s] = (1.0 - df) * 0.5 * qi * cm.p_data +
                                     (1.0 - df) * 0.5 * qbg_d;
            data.masses[kDecoy][s] = df * (cm.p_data + qbg_d);
        } else {
            data.masses[kOutside][s] = qbg_d;
        }
    }

    // Monitor line: a slot contributes to the fringe estimate only when the
    // transmitter schedule marked it occupied; background clicks inherit the
    // slot's classification. P(occupied, interfering) per slot position:
    //   slot 0: 0 (empty predecessor), odd slots: df (decoy pairs),
    //   later even slots: occ^2 (independent neighbour pairs).
    enum { kInterf, kLone, kUnclassified, kMonCats };
    BinMasses mon;
    mon.q.assign(P, qbg_m);
    mon.masses.assign(kMonCats, std::vector<double>(P, 0.0));
    double interf_slots = 0.0, lone_slots = 0.0;
    for (size_t s = 0; s < P; ++s) {
        if (s >= gate) {
            mon.masses[kUnclassified][s] = qbg_m;
            continue;
        }
        double p_int_occ, p_lone_occ;
        if (s == 0) {
            p_int_occ = 0.0;
            p_lone_occ = occ;
        } else if (s % 2 == 1) {
            p_int_occ = df;
            p_lone_occ = (1.0 - df) / 2.0;
        } else {
            p_int_occ = occ * occ;
            p_lone_occ = occ * (1.0 - occ);
        }
        interf_slots += p_int_occ;
        lone_slots += p_lone_occ;
        const double q_sig =
            p_int_occ * cm.p_mon_interf + p_lone_occ * cm.p_mon_lone;
        mon.q[s] = combine(q_sig, qbg_m);
        mon.masses[kInterf][s] = p_int_occ * (cm.p_mon_interf + qbg_m);
        mon.masses[kLone][s] = p_lone_occ * (cm.p_mon_lone + qbg_m);
        mon.masses[kUnclassified][s] =
            (1.0 - p_int_occ - p_lone_occ) * qbg_m;
    }

    const double bin_rate_hz = 1.0 / bin_s;
    const std::vector<double> dr = accepted_rates(data, dead_bins, bin_rate_hz);
    const std::vector<double> mr = accepted_rates(mon, dead_bins, bin_rate_hz);

    AnalyticRates out;
    out.sifted_rate = dr[kCorrect] + dr[kError];
    out.error_rate = dr[kError];
    out.decoy_click_rate = dr[kDecoy];
    out.out_of_gate_rate = dr[kOutside];
    out.data_click_rate =
        dr[kCorrect] + dr[kError] + dr[kDecoy] + dr[kOutside];
    out.monitor_interfering_rate = mr[kInterf];
    out.monitor_noninterfering_rate = mr[kLone];
    out.monitor_click_rate = mr[kInterf] + mr[kLone] + mr[kUnclassified];
    out.interfering_slots_per_frame = interf_slots;
    out.noninterfering_slots_per_frame = lone_slots;
    const double dead_s = det.dead_time_ns * 1e-9;
    out.alive_fraction_data =
        std::max(0.0, 1.0 - out.data_click_rate * dead_s);
    out.alive_fraction_monitor =
        std::max(0.0, 1.0 - out.monitor_click_rate * dead_s);
    out.expected_qber =
        out.sifted_rate > 0.0 ? out.error_rate / out.sifted_rate : 0.0;
    const double fr = config.frame_rate_hz();
    const double n_lone =
        lone_slots > 0.0 ? mr[kLone] / (fr * lone_slots) : 0.0;
    const double n_interf =
        interf_slots > 0.0 ? mr[kInterf] / (fr * interf_slots) : 0.0;
    out.expected_visibility =
        n_lone + n_interf > 0.0
            ? (n_lone - n_interf) / (n_lone + n_interf)
            : 0.0;
    return out;
}

} // namespace qkdcoex::sim
