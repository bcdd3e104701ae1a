#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qkdcoex/spectral.hpp"

namespace qkdcoex::plan {

enum class Direction : uint8_t { downstream, upstream };
enum class Role : uint8_t { load, distill_down, distill_up };

struct QuantumChannel {
    double wavelength_nm = 1538.0;
    double mu = 0.1;                   // photons/pulse
    double filter_bandwidth_nm = 0.8;  // in-band acceptance window
};

struct SyncChannel {
    double wavelength_nm = 1611.0;
};

struct ClassicalChannel {
    double wavelength_nm = 0.0;
    double launch_power_dbm = 0.0;
    Direction direction = Direction::downstream;
    Role role = Role::load;
};

struct CoexElementLosses {
    double quantum_mux_db = 0.76;
    double classical_tx_db = 6.3;
    double quantum_demux_db = 0.74;
    double classical_rx_db = 2.5;
    double notch_rejection_db = 95.0;
    // Isolation of the quantum drop port against the classical band,
    // stacked on top of the notch when estimating in-band leakage.
    double drop_stopband_db = 40.0;
};

struct ChannelPlan {
    QuantumChannel quantum;
    SyncChannel sync;
    std::vector<ClassicalChannel> classical;
    CoexElementLosses ce;
};

// Throws ValidationError on wavelength collisions with the quantum window
// or duplicate classical wavelengths.
void validate(const ChannelPlan& p);

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

// Downstream load channels summed in linear power; -inf when there are none.
double aggregate_launch_power(const ChannelPlan& p);

// DWDM grid helpers. n in {1, 6, 13, 25}:
//   25: 1540.56..1598.90 nm, uniform in frequency;
//   13: every other channel of the 25-grid;
//    6: the six channels nearest the quantum band, 100 GHz spaced;
//    1: a single mid-C-band channel.
std::vector<double> grid_wavelengths(int n_channels);

// Equal-power plan on the grid above with the given aggregate launch power.
ChannelPlan grid_plan(int n_channels, double aggregate_dbm);

// 25-grid variant for the bidirectional setup: the two grid slots nearest
// the distillation wavelengths are replaced by the downstream and upstream
// (counter-propagating) distillation channels at their own launch power;
// the remaining 23 equal-power load channels carry aggregate_dbm.
ChannelPlan bidir_plan(double aggregate_dbm, double distill_power_dbm = -12.5);

// Copy of the plan with load channels re-equalized to a new aggregate.
ChannelPlan with_aggregate_power(const ChannelPlan& p, double aggregate_dbm);

// quantum mux + fiber attenuation at the quantum wavelength + demux.
double quantum_path_loss(const ChannelPlan& p, const spectral::FiberProfile& f);

// Key consumption of encrypting a capacity stream with one key_len-bit key
// per chunk of `chunk_bytes`: capacity / (8 chunk) * key_len, in bit/s.
double required_key_rate(double capacity_bps, double chunk_bytes,
                         double key_len_bits);

struct ClassicalReceiver {
    double sensitivity_dbm = -23.6;
    double reference_ber = 1e-10;
    double ber_floor = 1e-15;
};

// Gaussian Q-factor model: Q scales with linear received power and is
// anchored so ber(sensitivity) == reference_ber; clamped below at ber_floor.
double classical_ber(double rop_dbm, const ClassicalReceiver& rx = {});

struct PowerSearchResult {
    double aggregate_dbm = 0.0;
    bool reached_upper_bound = false;  // target still met at +30 dBm
};

// Largest aggregate power with skr_of_power(dBm) >= skr_target, bisected to
// 0.1 dB over [-40, +30] dBm. skr_of_power must be monotone non-increasing.
// Throws InfeasibleError when even -40 dBm misses the target.
PowerSearchResult max_coexistence_power(
    const std::function<double(double)>& skr_of_power, double skr_target);

} // namespace qkdcoex::plan
