#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qkdcoex/cow_sim.hpp"
#include "qkdcoex/errors.hpp"

namespace qkdcoex::sim {

namespace {

constexpr int kSubBinsPerSlot = 4;  // 0.25 ns resolution at 1 ns slots
constexpr size_t kMinTags = 100;

} // namespace

double sync_recover(const TagStream& tags, const FrameConfig& config) {
    validate(config);
    const size_t n = tags.data_ts_ps.size() + tags.monitor_ts_ps.size();
    if (n < kMinTags)
        throw SyncFailedError("too few tags to lock onto the frame phase");

    const auto period_ps = static_cast<std::uint64_t>(
        std::llround(config.frame_period_ns * 1000.0));
    const auto bin_ps = static_cast<std::uint64_t>(
        std::llround(config.slot_ns * 1000.0 / kSubBinsPerSlot));
    const size_t nbins = static_cast<size_t>(period_ps / bin_ps);
    const size_t window = static_cast<size_t>(config.slots_per_frame) *
                          static_cast<size_t>(kSubBinsPerSlot);

    // Fold every tag into one period.
    std::vector<double> hist(nbins, 0.0);
    auto fold = [&](const std::vector<std::uint64_t>& ts) {
        for (std::uint64_t t : ts) hist[(t % period_ps) / bin_ps] += 1.0;
    };
    fold(tags.data_ts_ps);
    fold(tags.monitor_ts_ps);

    // Circular windowed counts via a doubled prefix sum.
    std::vector<double> prefix(2 * nbins + 1, 0.0);
    for (size_t i = 0; i < 2 * nbins; ++i)
        prefix[i + 1] = prefix[i] + hist[i % nbins];
    std::vector<double> score(nbins);
    for (size_t b = 0; b < nbins; ++b)
        score[b] = prefix[b + window] - prefix[b];

    // Light smoothing so the plateau peak refines cleanly.
    std::vector<double> smooth(nbins);
    for (size_t b = 0; b < nbins; ++b) {
        double s = 0.0;
        for (size_t d = 0; d < 5; ++d)
            s += score[(b + nbins - 2 + d) % nbins];
        smooth[b] = s / 5.0;
    }

    const size_t best =
        static_cast<size_t>(std::max_element(smooth.begin(), smooth.end()) -
                            smooth.begin());

    // A gate must stand out against the uniform-fold hypothesis.
    const double wf = static_cast<double>(window) / nbins;
    const double mean = static_cast<double>(n) * wf;
    const double sd = std::sqrt(static_cast<double>(n) * wf * (1.0 - wf));
    if (smooth[best] < mean + 5.0 * sd)
        throw SyncFailedError("no significant gate structure in the fold");

    // Parabolic refinement over the smoothed peak.
    const double y1 = smooth[(best + nbins - 1) % nbins];
    const double y2 = smooth[best];
    const double y3 = smooth[(best + 1) % nbins];
    const double denom = y1 - 2.0 * y2 + y3;
    double delta = 0.0;
    if (std::abs(denom) > 1e-12)
        delta = std::clamp(0.5 * (y1 - y3) / denom, -1.0, 1.0);

    const double bin_ns = config.slot_ns / kSubBinsPerSlot;
    double offset = (static_cast<double>(best) + delta) * bin_ns;
    offset = std::fmod(offset, config.frame_period_ns);
    if (offset < 0.0) offset += config.frame_period_ns;
    return offset;
}

} // namespace qkdcoex::sim
