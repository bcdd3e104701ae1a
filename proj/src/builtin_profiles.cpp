#include <algorithm>
#include <cmath>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/spectral.hpp"

namespace qkdcoex::spectral {

namespace {

// Relative scattering strength vs pump-probe detuning (THz, positive =
// probe on the high-frequency / anti-Stokes side). Digitized shape of a
// solid-silica-core spectrum, normalized to 1.0 at +1.5 THz. Features:
// the narrow notch carved around the pump (+-0.25 THz, i.e. pump +- 2 nm),
// the broad plateau, the 13.2 THz phonon peak (strongly asymmetric between
// Stokes and anti-Stokes sides), and the far anti-Stokes tail that reaches
// the O band.
struct ShapePoint {
    double detuning_thz;
    double rel;
};

constexpr ShapePoint kSilicaShape[] = {
    {-20.0, 0.45}, {-16.0, 2.5},  {-13.2, 9.0},  {-9.0, 3.4},
    {-5.0, 2.2},   {-1.5, 1.05},  {-1.0, 0.85},  {-0.7, 0.65},
    {-0.4, 0.46},  {-0.25, 0.28}, {-0.12, 0.45}, {-0.05, 0.80},
    {0.05, 0.80},  {0.12, 0.45},  {0.25, 0.28},  {0.4, 0.46},
    {0.7, 0.65},   {1.0, 0.83},   {1.5, 1.00},   {2.0, 1.06},
    {3.0, 1.08},   {4.0, 1.02},   {5.0, 0.98},   {6.0, 0.92},
    {7.5, 0.82},   {9.0, 0.79},   {11.0, 0.98},  {13.2, 1.14},
    {14.5, 0.80},  {16.0, 0.25},  {18.0, 0.12},  {20.0, 0.045},
    {23.0, 0.022}, {26.0, 0.012}, {30.0, 0.007}, {35.0, 0.0042},
    {40.0, 0.0025},
};

// Absolute level of the shape's 1.0 reference for a solid-core fiber,
// photons/(s mW nm km) under the documented reference condition.
constexpr double kSolidCoreBase = 4.7e5;

// Hollow-core scattering sits a flat 35 dB below the solid-core level.
const double kHollowCoreFlat = kSolidCoreBase * std::pow(10.0, -3.5);

// Filter-pigtail media scatter with the solid-core shape at a reduced
// level (short patches + splices vs a full span, per km).
constexpr double kPigtailLevel = 0.03825;

// Pump wavelengths anchored per profile; +-10 nm reach covers 1531-1606 nm.
constexpr double kPumps_nm[] = {1541.0, 1550.0, 1560.0, 1571.0, 1583.0, 1596.0};

std::vector<RamanAnchor> make_table(double level, bool flat) {
    std::vector<RamanAnchor> out;
    for (double pump : kPumps_nm) {
        double pump_thz = kSpeedOfLight_nm_thz / pump;
        for (const auto& s : kSilicaShape) {
            double probe_thz = pump_thz + s.detuning_thz;
            double probe_nm = kSpeedOfLight_nm_thz / probe_thz;
            if (probe_nm < 1250.0 || probe_nm > 1650.0) continue;
            out.push_back({pump, probe_nm, flat ? level : level * s.rel});
        }
    }
    std::sort(out.begin(), out.end(), [](const RamanAnchor& a, const RamanAnchor& b) {
        return a.pump_nm != b.pump_nm ? a.pump_nm < b.pump_nm
                                      : a.probe_nm < b.probe_nm;
    });
    return out;
}

std::vector<std::pair<double, double>> solid_core_attenuation() {
    // Typical solid-core loss curve: O-band slope, water peak, flat C band.
    return {{1250.0, 0.40}, {1310.0, 0.32}, {1383.0, 0.35}, {1450.0, 0.25},
            {1500.0, 0.22}, {1530.0, 0.20}, {1600.0, 0.20}, {1650.0, 0.21}};
}

} // namespace

BuiltinProfiles builtin_profiles() {
    BuiltinProfiles b;

    b.smf.name = "smf";
    b.smf.length_km = 8.6;
    b.smf.attenuation_anchors = solid_core_attenuation();
    b.smf.raman_anchors = make_table(kSolidCoreBase, false);

    b.hcf.name = "hcf";
    b.hcf.length_km = 7.7;
    double flat_db_per_km = 9.1 / 7.7;
    b.hcf.attenuation_anchors = {{1250.0, flat_db_per_km}, {1650.0, flat_db_per_km}};
    b.hcf.raman_anchors = make_table(kHollowCoreFlat, true);
    b.hcf.pigtail_equivalent_km = 0.05;

    b.tff.name = "tff";
    b.tff.length_km = 0.05;
    b.tff.attenuation_anchors = solid_core_attenuation();
    b.tff.raman_anchors = make_table(kSolidCoreBase * kPigtailLevel, false);

    validate(b.smf);
    validate(b.hcf);
    validate(b.tff);
    return b;
}

FiberProfile builtin_profile(const std::string& name) {
    BuiltinProfiles b = builtin_profiles();
    if (name == "smf") return b.smf;
    if (name == "hcf") return b.hcf;
    if (name == "tff") return b.tff;
    throw ValidationError("unknown builtin profile: " + name);
}

} // namespace qkdcoex::spectral
