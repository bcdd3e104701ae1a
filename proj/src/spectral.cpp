#include "qkdcoex/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/linkplan.hpp"

namespace qkdcoex::spectral {

namespace {

constexpr double kLn10Over10 = 0.23025850929940457;
constexpr double kMaxPumpDistance_nm = 10.0;

} // namespace

double photon_energy_j(double wavelength_nm) {
    if (wavelength_nm <= 0.0)
        throw DomainError("photon energy needs a positive wavelength");
    // h*c with c in nm/s.
    return kPlanck_J_s * kSpeedOfLight_nm_thz * 1e12 / wavelength_nm;
}

void validate(const FiberProfile& p) {
    std::ostringstream oss;
    if (p.name.empty())
        throw ValidationError("fiber profile needs a name");
    if (!(p.length_km > 0.0))
        throw ValidationError(p.name + ": length_km must be > 0");
    if (!(p.calibration_scale > 0.0))
        throw ValidationError(p.name + ": calibration_scale must be > 0");
    if (p.pigtail_equivalent_km < 0.0)
        throw ValidationError(p.name + ": pigtail_equivalent_km must be >= 0");
    if (p.attenuation_anchors.empty())
        throw ValidationError(p.name + ": attenuation table is empty");
    for (size_t i = 0; i < p.attenuation_anchors.size(); ++i) {
        const auto& [nm, db] = p.attenuation_anchors[i];
        if (!(db >= 0.0) || !std::isfinite(db))
            throw ValidationError(p.name + ": attenuation must be >= 0");
        if (i && !(p.attenuation_anchors[i - 1].first < nm))
            throw ValidationError(p.name + ": attenuation anchors not sorted");
    }
    if (p.raman_anchors.empty())
        throw ValidationError(p.name + ": scattering table is empty");
    for (size_t i = 0; i < p.raman_anchors.size(); ++i) {
        const auto& a = p.raman_anchors[i];
        if (!(a.coeff >= 0.0) || !std::isfinite(a.coeff))
            throw ValidationError(p.name + ": coefficient must be >= 0 and finite");
        if (a.pump_nm < 1250.0 || a.pump_nm > 1650.0 || a.probe_nm < 1250.0 ||
            a.probe_nm > 1650.0)
            throw ValidationError(p.name + ": anchor wavelengths outside 1250-1650 nm");
        if (i) {
            const auto& prev = p.raman_anchors[i - 1];
            if (prev.pump_nm > a.pump_nm ||
                (prev.pump_nm == a.pump_nm && prev.probe_nm >= a.probe_nm))
                throw ValidationError(p.name + ": scattering anchors not sorted by (pump, probe)");
        }
    }
}

double attenuation_db_per_km(const FiberProfile& p, double wavelength_nm) {
    const auto& t = p.attenuation_anchors;
    if (t.empty())
        throw ValidationError(p.name + ": attenuation table is empty");
    if (wavelength_nm < t.front().first || wavelength_nm > t.back().first) {
        std::ostringstream oss;
        oss << p.name << ": attenuation query " << wavelength_nm
            << " nm outside anchored span [" << t.front().first << ", "
            << t.back().first << "]";
        throw OutOfRangeError(oss.str());
    }
    auto it = std::lower_bound(t.begin(), t.end(), wavelength_nm,
                               [](const auto& a, double w) { return a.first < w; });
    if (it->first == wavelength_nm) return it->second;
    auto hi = it;
    auto lo = it - 1;
    double f = (wavelength_nm - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

double raman_coefficient(const FiberProfile& p, double pump_nm, double probe_nm) {
    const auto& t = p.raman_anchors;
    if (t.empty())
        throw ValidationError(p.name + ": scattering table is empty");

    // Pick the anchor table whose pump is nearest to the query pump.
    double best_pump = t.front().pump_nm;
    for (const auto& a : t)
        if (std::fabs(a.pump_nm - pump_nm) < std::fabs(best_pump - pump_nm))
            best_pump = a.pump_nm;
    if (std::fabs(best_pump - pump_nm) > kMaxPumpDistance_nm) {
        std::ostringstream oss;
        oss << p.name << ": pump " << pump_nm
            << " nm is more than " << kMaxPumpDistance_nm
            << " nm from any anchored pump (nearest " << best_pump << ")";
        throw OutOfRangeError(oss.str());
    }

    auto lo_it = std::lower_bound(
        t.begin(), t.end(), best_pump,
        [](const RamanAnchor& a, double pump) { return a.pump_nm < pump; });
    auto hi_it = std::upper_bound(
        lo_it, t.end(), best_pump,
        [](double pump, const RamanAnchor& a) { return pump < a.pump_nm; });

    if (probe_nm < lo_it->probe_nm || probe_nm > (hi_it - 1)->probe_nm) {
        std::ostringstream oss;
        oss << p.name << ": probe " << probe_nm << " nm outside the "
            << best_pump << " nm pump table span [" << lo_it->probe_nm << ", "
            << (hi_it - 1)->probe_nm << "]";
        throw OutOfRangeError(oss.str());
    }
    auto it = std::lower_bound(
        lo_it, hi_it, probe_nm,
        [](const RamanAnchor& a, double w) { return a.probe_nm < w; });
    if (it->probe_nm == probe_nm)
        return it->coeff * p.calibration_scale;
    auto hi = it;
    auto lo = it - 1;
    double f = (probe_nm - lo->probe_nm) / (hi->probe_nm - lo->probe_nm);
    double c;
    if (lo->coeff > 0.0 && hi->coeff > 0.0) {
        // Spectra span decades: interpolate the log.
        c = std::exp((1.0 - f) * std::log(lo->coeff) + f * std::log(hi->coeff));
    } else {
        c = lo->coeff + f * (hi->coeff - lo->coeff);
    }
    return c * p.calibration_scale;
}

namespace {

void check_rate_args(double pump_power_mw, double bandwidth_nm) {
    if (pump_power_mw < 0.0)
        throw ValidationError("pump power must be >= 0");
    if (!(bandwidth_nm > 0.0))
        throw ValidationError("bandwidth must be > 0");
}

} // namespace

double forward_spontaneous_raman_rate(double pump_power_mw,
                                      const FiberProfile& p, double pump_nm,
                                      double probe_nm, double bandwidth_nm) {
    check_rate_args(pump_power_mw, bandwidth_nm);
    if (pump_power_mw == 0.0) return 0.0;
    double rho = raman_coefficient(p, pump_nm, probe_nm);
    double alpha = attenuation_db_per_km(p, probe_nm) * kLn10Over10;
    return rho * pump_power_mw * bandwidth_nm * p.length_km *
           std::exp(-alpha * p.length_km);
}

double backward_spontaneous_raman_rate(double pump_power_mw,
                                       const FiberProfile& p, double pump_nm,
                                       double probe_nm, double bandwidth_nm) {
    check_rate_args(pump_power_mw, bandwidth_nm);
    if (pump_power_mw == 0.0) return 0.0;
    double rho = raman_coefficient(p, pump_nm, probe_nm);
    double alpha = attenuation_db_per_km(p, probe_nm) * kLn10Over10;
    double l_eff = alpha > 0.0
                       ? -std::expm1(-2.0 * alpha * p.length_km) / (2.0 * alpha)
                       : p.length_km;
    return rho * pump_power_mw * bandwidth_nm * l_eff;
}

NoiseBreakdown aggregate_inband_noise(const plan::ChannelPlan& cp,
                                      const FiberProfile& p, double probe_nm,
                                      double bandwidth_nm, double ase_ph_s,
                                      const FiberProfile* pigtail_profile) {
    NoiseBreakdown out;
    FiberProfile tff_fallback;
    if (p.pigtail_equivalent_km > 0.0 && !pigtail_profile) {
        tff_fallback = builtin_profile("tff");
        pigtail_profile = &tff_fallback;
    }
    for (const auto& ch : cp.classical) {
        NoiseBreakdown::ChannelTerm term;
        term.wavelength_nm = ch.wavelength_nm;
        term.upstream = ch.direction == plan::Direction::upstream;
        double mw = plan::dbm_to_mw(ch.launch_power_dbm);
        if (term.upstream)
            term.backward_rate = backward_spontaneous_raman_rate(
                mw, p, ch.wavelength_nm, probe_nm, bandwidth_nm);
        else
            term.forward_rate = forward_spontaneous_raman_rate(
                mw, p, ch.wavelength_nm, probe_nm, bandwidth_nm);
        if (p.pigtail_equivalent_km > 0.0) {
            // Pigtails sit at the fiber ends; their scattering reaches the
            // output without appreciable fiber attenuation.
            out.pigtail_rate +=
                p.pigtail_equivalent_km *
                raman_coefficient(*pigtail_profile, ch.wavelength_nm, probe_nm) *
                mw * bandwidth_nm;
        }
        out.total += term.forward_rate + term.backward_rate;
        out.per_channel.push_back(term);
    }
    out.ase_rate = ase_ph_s;
    double agg_dbm = plan::aggregate_launch_power(cp);
    if (std::isfinite(agg_dbm)) {
        // Residual classical power leaking through the quantum-band notch
        // and the drop-port stopband, converted to photons/s.
        double leak_dbm = agg_dbm - cp.ce.notch_rejection_db - cp.ce.drop_stopband_db;
        double leak_w = plan::dbm_to_mw(leak_dbm) * 1e-3;
        out.ase_rate += leak_w / photon_energy_j(probe_nm);
    }
    out.total += out.pigtail_rate + out.ase_rate;
    return out;
}

} // namespace qkdcoex::spectral
