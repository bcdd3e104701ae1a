#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qkdcoex::plan {
struct ChannelPlan;
}

namespace qkdcoex::spectral {

// Physical constants used throughout (nm, THz, J).
inline constexpr double kSpeedOfLight_nm_thz = 299792.458;
inline constexpr double kPlanck_J_s = 6.62607015e-34;

// Photon energy at a vacuum wavelength in nm.
double photon_energy_j(double wavelength_nm);

// One measured point of a scattering spectrum.
// coeff units: photons / (s · mW pump · nm probe-bandwidth · km).
struct RamanAnchor {
    double pump_nm = 0.0;
    double probe_nm = 0.0;
    double coeff = 0.0;
};

struct FiberProfile {
    std::string name;
    double length_km = 1.0;
    // {wavelength nm, dB/km}, sorted by wavelength.
    std::vector<std::pair<double, double>> attenuation_anchors;
    // Sorted by (pump_nm, probe_nm); several pump tables may coexist.
    std::vector<RamanAnchor> raman_anchors;
    double calibration_scale = 1.0;
    // SMF-equivalent scattering length of filter pigtails/splices at the
    // fiber ends (applies the pigtail profile's coefficient, unattenuated).
    double pigtail_equivalent_km = 0.0;
};

// Throws ValidationError on malformed profiles.
void validate(const FiberProfile& p);

// Linear interpolation over the attenuation anchors; queries outside the
// anchored wavelength span throw OutOfRangeError.
double attenuation_db_per_km(const FiberProfile& p, double wavelength_nm);

// Scattering coefficient for (pump -> probe): selects the anchor table of
// the nearest pump wavelength (within 10 nm), interpolates log-linearly
// over probe wavelength, never extrapolates, applies calibration_scale.
double raman_coefficient(const FiberProfile& p, double pump_nm,
                         double probe_nm);

// In-band scattered photon rate collected at the fiber output for a pump
// co-propagating with the probe direction:
//   rate = rho * P * dLambda * L * exp(-alpha*L)
// with alpha the probe-wavelength attenuation in natural units / km.
double forward_spontaneous_raman_rate(double pump_power_mw,
                                      const FiberProfile& p, double pump_nm,
                                      double probe_nm, double bandwidth_nm);

// Same for a counter-propagating pump (backscatter geometry):
//   rate = rho * P * dLambda * (1 - exp(-2*alpha*L)) / (2*alpha)
double backward_spontaneous_raman_rate(double pump_power_mw,
                                       const FiberProfile& p, double pump_nm,
                                       double probe_nm, double bandwidth_nm);

struct NoiseBreakdown {
    struct ChannelTerm {
        double wavelength_nm = 0.0;
        bool upstream = false;
        double forward_rate = 0.0;   // photons/s at the fiber output
        double backward_rate = 0.0;  // photons/s at the fiber output
    };
    std::vector<ChannelTerm> per_channel;
    double pigtail_rate = 0.0;  // filter-pigtail scattering
    double ase_rate = 0.0;      // amplifier background + filter leakage
    double total = 0.0;         // sum of every component above
};

// Sums scattering from every classical channel of the plan (forward for
// co-propagating, backward for counter-propagating), the pigtail term
// (pigtail_equivalent_km with the pigtail profile's coefficient), the given
// amplifier background, and the notch-filter leakage of the aggregate
// classical power. All rates are referred to the fiber output, before the
// receive-side demux loss.
NoiseBreakdown aggregate_inband_noise(const plan::ChannelPlan& cp,
                                      const FiberProfile& p, double probe_nm,
                                      double bandwidth_nm,
                                      double ase_ph_s = 0.0,
                                      const FiberProfile* pigtail_profile = nullptr);

struct BuiltinProfiles {
    FiberProfile smf;
    FiberProfile hcf;
    FiberProfile tff;
};

// Checked-in default media. The anchor tables are approximate digitizations
// of measured spectra; their absolute level assumes a reference condition of
// a 100 mW pump measured in 0.1 nm bandwidth at the fiber output end, and
// any residual normalization error is meant to be absorbed by
// calibration_scale.
BuiltinProfiles builtin_profiles();

// Lookup by name ("smf", "hcf", "tff"); throws ValidationError otherwise.
FiberProfile builtin_profile(const std::string& name);

// Profile anchor tables as JSON files (schema documented in the README):
// {name, length_km, pigtail_equivalent_km, calibration_scale,
//  attenuation: [{nm, db_per_km}], raman: [{pump_nm, probe_nm, coeff}]}.
// Throws IoError on unreadable files, ValidationError on malformed content.
FiberProfile profile_from_json(const std::string& json_text);
FiberProfile load_profile(const std::string& path);

} // namespace qkdcoex::spectral
