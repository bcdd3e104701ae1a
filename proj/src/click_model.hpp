#pragma once

#include <cmath>

#include "qkdcoex/cow_sim.hpp"

namespace qkdcoex::sim {

// Per-slot click probabilities and per-line background rates shared by the
// Monte Carlo and its closed-form twin. Signal photons follow Poisson
// statistics, so the two splitter branches click independently.
struct ClickModel {
    double p_data = 0.0;         // occupied slot, data detector
    double p_mon_lone = 0.0;     // occupied slot without an occupied predecessor
    double p_mon_interf = 0.0;   // occupied slot with an occupied predecessor
    double bg_data_cps = 0.0;    // background + dark clicks/s, data line
    double bg_monitor_cps = 0.0; // background + dark clicks/s, monitor line
};

inline ClickModel make_click_model(const FrameConfig& config,
                                   const DetectorModel& det,
                                   const ReceiverConditions& rx) {
    ClickModel m;
    const double mean = config.mu * rx.transmittance * det.efficiency;
    m.p_data = -std::expm1(-mean * det.data_branch);
    m.p_mon_lone = -std::expm1(-mean * det.monitor_branch);
    m.p_mon_interf =
        m.p_mon_lone * (1.0 - det.interferometer_visibility) / 2.0;
    m.bg_data_cps = rx.background_ph_s * det.data_branch * det.efficiency +
                    det.dark_counts_per_s;
    m.bg_monitor_cps =
        rx.background_ph_s * det.monitor_branch * det.efficiency +
        det.dark_counts_per_s;
    return m;
}

} // namespace qkdcoex::sim
