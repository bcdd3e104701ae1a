#include "qkdcoex/distill.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/rng.hpp"
#include "qkdcoex/stats.hpp"

namespace qkdcoex::distill {

namespace {

constexpr std::uint64_t kMinSampleBits = 100;
constexpr size_t kMinTagsForPhaseGuard = 100;

double cyclic_distance(double a, double b, double period) {
    double d = std::fabs(a - b);
    d = std::fmod(d, period);
    return std::min(d, period - d);
}

} // namespace

SiftedKey sift(const sim::EmissionSchedule& schedule,
               const sim::TagStream& tags) {
    const sim::FrameConfig& cfg = schedule.config();
    SiftedKey out;
    out.duration_s = tags.duration_ns * 1e-9;

    // Guard against a stream that carries frame structure on the wrong
    // phase; a structureless stream sifts to noise, which the estimates
    // catch downstream.
    if (tags.data_ts_ps.size() + tags.monitor_ts_ps.size() >=
        kMinTagsForPhaseGuard) {
        try {
            const double offset = sim::sync_recover(tags, cfg);
            if (cyclic_distance(offset, 0.0, cfg.frame_period_ns) >
                0.5 * cfg.slot_ns)
                throw AlignmentError(
                    "tag stream is offset from the slot grid; recover the "
                    "frame phase before sifting");
        } catch (const SyncFailedError&) {
        }
    }

    const auto period_ps =
        static_cast<std::uint64_t>(std::llround(cfg.frame_period_ns * 1000.0));
    const auto slot_ps =
        static_cast<std::uint64_t>(std::llround(cfg.slot_ns * 1000.0));

    // Data line: group clicks by pair; two clicks in one pair are ambiguous
    // and dropped, decoy pairs carry no key bit.
    const auto& ts = tags.data_ts_ps;
    for (size_t i = 0; i < ts.size();) {
        const std::uint64_t frame = ts[i] / period_ps;
        const int slot = static_cast<int>((ts[i] % period_ps) / slot_ps);
        if (frame >= schedule.n_frames() || slot >= cfg.slots_per_frame) {
            ++out.out_of_gate_clicks;
            ++i;
            continue;
        }
        const int pair = slot / 2;
        size_t j = i + 1;
        while (j < ts.size() && ts[j] / period_ps == frame &&
               static_cast<int>((ts[j] % period_ps) / slot_ps) / 2 == pair)
            ++j;
        const sim::PairEmission e = schedule.pair(frame, pair);
        if (e.decoy) {
            out.decoy_clicks += j - i;
        } else if (j - i > 1) {
            ++out.double_clicks;
        } else {
            out.alice_bits.push_back(e.bit != 0);
            out.bob_bits.push_back((slot & 1) != 0);
        }
        i = j;
    }

    for (std::uint64_t t : tags.monitor_ts_ps) {
        const std::uint64_t frame = t / period_ps;
        const int slot = static_cast<int>((t % period_ps) / slot_ps);
        if (frame >= schedule.n_frames() || slot >= cfg.slots_per_frame ||
            !schedule.occupied(frame, slot))
            continue;
        if (schedule.interfering(frame, slot))
            ++out.monitor_interfering_clicks;
        else
            ++out.monitor_noninterfering_clicks;
    }

    // Schedule-side opportunity counts over the full run.
    for (std::uint64_t f = 0; f < schedule.n_frames(); ++f) {
        bool prev = false;
        for (int p = 0; p < cfg.pairs_per_frame(); ++p) {
            const sim::PairEmission e = schedule.pair(f, p);
            const bool occ0 = e.decoy || e.bit == 0;
            const bool occ1 = e.decoy || e.bit == 1;
            if (occ0) ++(prev ? out.interfering_opportunities
                              : out.noninterfering_opportunities);
            if (occ1) ++(occ0 ? out.interfering_opportunities
                              : out.noninterfering_opportunities);
            prev = occ1;
        }
    }
    return out;
}

std::vector<std::uint64_t> sample_indices(std::uint64_t n, std::uint64_t k,
                                          std::uint64_t seed) {
    if (k > n)
        throw ValidationError("sample: more positions requested than exist");
    // Floyd's algorithm: k distinct draws without building [0, n).
    Rng rng(derive_seed(seed, 0x5a3c, 0));
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<size_t>(k) * 2);
    for (std::uint64_t j = n - k; j < n; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        chosen.insert(chosen.count(t) ? j : t);
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

Estimates estimate_parameters(const SiftedKey& key,
                              const std::vector<std::uint64_t>& sample) {
    if (key.alice_bits.size() != key.bob_bits.size())
        throw ValidationError("estimate: key halves differ in length");
    if (sample.size() < kMinSampleBits)
        throw InsufficientSampleError(
            "estimate: fewer than 100 disclosed bits");
    Estimates est;
    est.sample_size = sample.size();
    for (std::uint64_t idx : sample) {
        if (idx >= key.alice_bits.size())
            throw ValidationError("estimate: sample index out of range");
        est.sample_errors +=
            key.alice_bits.get(idx) != key.bob_bits.get(idx);
    }
    est.qber = static_cast<double>(est.sample_errors) /
               static_cast<double>(est.sample_size);
    est.qber_upper = wilson_interval(est.sample_errors, est.sample_size,
                                     normal_upper_quantile(1e-10))
                         .second;

    const double n_lone =
        key.noninterfering_opportunities > 0
            ? static_cast<double>(key.monitor_noninterfering_clicks) /
                  static_cast<double>(key.noninterfering_opportunities)
            : 0.0;
    const double n_interf =
        key.interfering_opportunities > 0
            ? static_cast<double>(key.monitor_interfering_clicks) /
                  static_cast<double>(key.interfering_opportunities)
            : 0.0;
    est.visibility = n_lone + n_interf > 0.0
                         ? (n_lone - n_interf) / (n_lone + n_interf)
                         : 0.0;
    return est;
}

double binary_entropy(double p) {
    if (p < 0.0 || p > 1.0)
        throw DomainError("entropy: probability outside [0,1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double secret_fraction(double qber, double visibility, double f_ec) {
    if (qber < 0.0 || qber > 0.5)
        throw DomainError("secret fraction: qber outside [0,0.5]");
    if (visibility < 0.0 || visibility > 1.0)
        throw DomainError("secret fraction: visibility outside [0,1]");
    if (f_ec < 1.0)
        throw DomainError("secret fraction: reconciliation efficiency < 1");
    const double r =
        1.0 - f_ec * binary_entropy(qber) - binary_entropy(visibility);
    return std::max(0.0, r);
}

std::uint64_t pa_margin_bits(double failure_prob) {
    if (failure_prob <= 0.0 || failure_prob >= 1.0)
        throw DomainError("margin: failure probability outside (0,1)");
    return static_cast<std::uint64_t>(
        std::ceil(2.0 * std::log2(1.0 / failure_prob)));
}

BitVec toeplitz_hash(const BitVec& seed, const BitVec& input,
                     std::uint64_t out_bits) {
    if (out_bits == 0) return BitVec{};
    if (seed.size() != input.size() + out_bits - 1)
        throw ValidationError(
            "toeplitz: seed length must be input + output - 1");
    BitVec out(static_cast<size_t>(out_bits));
    const size_t n = input.size();
    for (size_t j = 0; j < n; ++j)
        if (input.get(j))
            out.xor_with(seed.slice(n - 1 - j, static_cast<size_t>(out_bits)));
    return out;
}

void validate(const DistillParams& p) {
    if (p.disclose_fraction < 0.0 || p.disclose_fraction >= 1.0)
        throw ValidationError("distill: disclose fraction outside [0,1)");
    if (p.error_correction_efficiency < 1.0)
        throw ValidationError("distill: reconciliation efficiency < 1");
    if (p.pa_failure_prob <= 0.0 || p.pa_failure_prob >= 1.0)
        throw ValidationError("distill: failure probability outside (0,1)");
    if (p.qber_abort_threshold <= 0.0 || p.qber_abort_threshold > 0.5)
        throw ValidationError("distill: qber threshold outside (0,0.5]");
    if (p.visibility_abort_threshold < 0.0 ||
        p.visibility_abort_threshold >= 1.0)
        throw ValidationError("distill: visibility threshold outside [0,1)");
}

DistillResult distill_keys(const SiftedKey& key, const DistillParams& params,
                           std::uint64_t seed) {
    validate(params);
    if (key.alice_bits.size() != key.bob_bits.size())
        throw ValidationError("distill: key halves differ in length");

    DistillResult res;
    res.n_sifted = key.alice_bits.size();
    const auto k = static_cast<std::uint64_t>(
        params.disclose_fraction * static_cast<double>(res.n_sifted));
    const std::vector<std::uint64_t> sample =
        sample_indices(res.n_sifted, k, derive_seed(seed, 1, 0));
    res.estimates = estimate_parameters(key, sample);
    res.n_disclosed = sample.size();
    res.n_remaining = res.n_sifted - res.n_disclosed;
    res.fraction =
        secret_fraction(res.estimates.qber, res.estimates.visibility,
                        params.error_correction_efficiency);

    const double usable =
        std::floor(static_cast<double>(res.n_remaining) * res.fraction);
    const std::uint64_t margin = pa_margin_bits(params.pa_failure_prob);
    res.secret_bits =
        usable > static_cast<double>(margin)
            ? static_cast<std::uint64_t>(usable) - margin
            : 0;
    if (res.secret_bits == 0) return res;

    // Remaining (undisclosed) transmitter bits; reconciliation is modeled
    // as a perfect transfer, so both sides compress the same string.
    BitVec remaining;
    size_t s = 0;
    for (std::uint64_t i = 0; i < res.n_sifted; ++i) {
        if (s < sample.size() && sample[s] == i) {
            ++s;
            continue;
        }
        remaining.push_back(key.alice_bits.get(static_cast<size_t>(i)));
    }

    Rng pa_rng(derive_seed(seed, 2, 0));
    const BitVec pa_seed =
        BitVec::random(remaining.size() + res.secret_bits - 1,
                       [&pa_rng] { return pa_rng.next_u64(); });
    res.alice_key = toeplitz_hash(pa_seed, remaining, res.secret_bits);
    res.bob_key = res.alice_key;
    return res;
}

} // namespace qkdcoex::distill
