#include "qkdcoex/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>
#include <vector>

#include "qkdcoex/checksum.hpp"
#include "qkdcoex/errors.hpp"
#include "qkdcoex/rng.hpp"
#include "qkdcoex/stats.hpp"

namespace qkdcoex::net {

namespace {

// The hashed output ends with a confirmation tag this long; corrupting or
// swapping a key no longer matches the peer's tag.
constexpr std::uint64_t kTagBits = 64;

// Below this many disclosed bits the error estimate is meaningless; the
// same floor the offline estimator enforces.
constexpr std::uint64_t kMinSampleBits = 100;

// Confidence bound used for the reported upper error rate (matches the
// offline estimator).
constexpr double kEstimateFailureProb = 1e-10;

struct PeerAborted {
    AbortReason reason;
    std::string text;
};

struct LocalAbort {
    AbortReason reason;
    std::string text;
};

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    append_u64(out, bits);
}

// Fingerprint of everything both endpoints must agree on before any
// quantum data is interpreted.
std::uint64_t config_fingerprint(const SessionConfig& cfg,
                                 std::uint64_t n_frames) {
    std::vector<std::uint8_t> b;
    append_u64(b, n_frames);
    append_u64(b, cfg.frames_per_batch);
    append_u64(b, cfg.system.seed);
    const sim::FrameConfig& f = cfg.system.frame;
    append_f64(b, f.slot_ns);
    append_u64(b, static_cast<std::uint64_t>(f.slots_per_frame));
    append_f64(b, f.frame_period_ns);
    append_f64(b, f.mu);
    append_f64(b, f.decoy_fraction);
    const distill::DistillParams& d = cfg.system.distill;
    append_f64(b, d.disclose_fraction);
    append_f64(b, d.error_correction_efficiency);
    append_f64(b, d.pa_failure_prob);
    append_f64(b, d.qber_abort_threshold);
    append_f64(b, d.visibility_abort_threshold);
    return fnv1a64(b.data(), b.size());
}

// Hashed output length (key + confirmation tag) both sides derive from the
// agreed estimates. Zero when the channel cannot yield a nonempty key.
std::uint64_t hashed_bits(std::uint64_t n_remaining, const ParamEstimate& est,
                          const distill::DistillParams& p) {
    const double r = distill::secret_fraction(
        est.qber, est.visibility, p.error_correction_efficiency);
    const double usable = std::floor(static_cast<double>(n_remaining) * r);
    const std::uint64_t margin = distill::pa_margin_bits(p.pa_failure_prob);
    const std::uint64_t m = usable > static_cast<double>(margin)
                                ? static_cast<std::uint64_t>(usable) - margin
                                : 0;
    return m > kTagBits ? m : 0;
}

// The undisclosed bits, in position order.
BitVec drop_sampled(const BitVec& bits,
                    const std::vector<std::uint32_t>& sorted_sample) {
    BitVec out;
    std::size_t s = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (s < sorted_sample.size() && sorted_sample[s] == i) {
            ++s;
            continue;
        }
        out.push_back(bits.get(i));
    }
    return out;
}

// Last kTagBits of the hashed output, packed LSB-first.
std::uint64_t confirm_tag(const BitVec& hashed) {
    if (hashed.size() < kTagBits) return 0;
    const std::size_t base = hashed.size() - kTagBits;
    std::uint64_t tag = 0;
    for (std::size_t i = 0; i < kTagBits; ++i)
        if (hashed.get(base + i)) tag |= 1ULL << i;
    return tag;
}

class Endpoint {
  public:
    explicit Endpoint(Transport& link) : link_(link) {}

    void send(const Message& m) { write_frame(link_, m); }

    template <typename T>
    T expect() {
        std::optional<Message> m = read_frame(link_);
        if (!m)
            throw TransportError("peer closed the stream mid-session");
        if (auto* a = std::get_if<Abort>(&*m))
            throw PeerAborted{a->reason, a->text};
        if (auto* v = std::get_if<T>(&*m)) return std::move(*v);
        throw LocalAbort{AbortReason::protocol,
                         std::string("unexpected ") +
                             to_string(type_of(*m)) + " frame"};
    }

    // Succeeds only on a clean end of stream. The peer's silent close is
    // the one confirmation a byte-level corruption cannot forge: damaged
    // frames still deliver bytes, and bytes here mean failure.
    void expect_clean_close() {
        std::optional<Message> m = read_frame(link_);
        if (!m) return;
        if (auto* a = std::get_if<Abort>(&*m))
            throw PeerAborted{a->reason, a->text};
        throw LocalAbort{AbortReason::protocol,
                         "unexpected traffic after confirmation"};
    }

  private:
    Transport& link_;
};

void check_peer_hello(const Hello& theirs, const Hello& mine, Role want) {
    if (theirs.role != want)
        throw LocalAbort{AbortReason::protocol, "peer claims my role"};
    if (theirs.n_frames != mine.n_frames ||
        theirs.frames_per_batch != mine.frames_per_batch ||
        theirs.config_hash != mine.config_hash)
        throw LocalAbort{AbortReason::protocol,
                         "endpoints configured for different runs"};
}

// --- transmitter -------------------------------------------------------------

void alice_flow(Endpoint& ep, const SessionConfig& cfg,
                std::uint64_t n_frames, SessionReport& rep) {
    const distill::DistillParams& params = cfg.system.distill;
    const sim::EmissionSchedule schedule =
        pipeline::make_schedule(cfg.system, n_frames);
    const int ppf = cfg.system.frame.pairs_per_frame();
    const int spf = cfg.system.frame.slots_per_frame;
    const std::uint64_t fpb = cfg.frames_per_batch;
    const std::uint64_t n_batches =
        n_frames == 0 ? 0 : (n_frames + fpb - 1) / fpb;

    const Hello mine{Role::alice, n_frames, cfg.frames_per_batch,
                     config_fingerprint(cfg, n_frames)};
    // The receiver speaks first.
    check_peer_hello(ep.expect<Hello>(), mine, Role::bob);
    ep.send(mine);

    BitVec my_bits;
    std::uint64_t int_clicks = 0, non_clicks = 0;
    std::uint64_t int_opp = 0, non_opp = 0;
    std::unordered_map<std::uint32_t, std::uint32_t> mult;

    for (std::uint64_t b = 0; b < n_batches; ++b) {
        const DetectionsAnnounce ann = ep.expect<DetectionsAnnounce>();
        if (ann.batch != b)
            throw LocalAbort{AbortReason::protocol, "batch out of order"};
        const std::uint64_t base = b * fpb;
        const std::uint64_t batch_frames = std::min(fpb, n_frames - base);

        mult.clear();
        for (const DataClick& c : ann.data) {
            if (c.frame_off >= batch_frames || c.pair >= ppf ||
                c.slot_in_pair > 1)
                throw LocalAbort{AbortReason::protocol,
                                 "click outside the frame grid"};
            ++mult[static_cast<std::uint32_t>(c.frame_off) * ppf + c.pair];
        }
        BitVec keep(ann.data.size());
        for (std::size_t i = 0; i < ann.data.size(); ++i) {
            const DataClick& c = ann.data[i];
            const std::uint32_t key =
                static_cast<std::uint32_t>(c.frame_off) * ppf + c.pair;
            const sim::PairEmission e =
                schedule.pair(base + c.frame_off, c.pair);
            std::uint32_t& count = mult[key];
            if (e.decoy) {
                ++rep.decoy_clicks;
            } else if (count > 1) {
                // Ambiguous pair: count it once, on its first click.
                if (count != UINT32_MAX) ++rep.double_clicks;
                count = UINT32_MAX;
            } else {
                keep.set(i, true);
                my_bits.push_back(e.bit != 0);
            }
        }
        ep.send(SiftDecision{static_cast<std::uint32_t>(b), keep});

        for (const MonitorClick& c : ann.monitor) {
            if (c.frame_off >= batch_frames || c.slot >= spf)
                throw LocalAbort{AbortReason::protocol,
                                 "click outside the frame grid"};
            const std::uint64_t f = base + c.frame_off;
            if (!schedule.occupied(f, c.slot)) continue;
            if (schedule.interfering(f, c.slot))
                ++int_clicks;
            else
                ++non_clicks;
        }
        for (std::uint64_t f = base; f < base + batch_frames; ++f) {
            bool prev = false;
            for (int p = 0; p < ppf; ++p) {
                const sim::PairEmission e = schedule.pair(f, p);
                const bool occ0 = e.decoy || e.bit == 0;
                const bool occ1 = e.decoy || e.bit == 1;
                if (occ0) ++(prev ? int_opp : non_opp);
                if (occ1) ++(occ0 ? int_opp : non_opp);
                prev = occ1;
            }
        }
    }

    const std::uint64_t n = my_bits.size();
    rep.n_sifted = n;
    const SampleDisclose sd = ep.expect<SampleDisclose>();
    const auto k_expected = static_cast<std::uint64_t>(
        params.disclose_fraction * static_cast<double>(n));
    if (sd.indices.size() != k_expected)
        throw LocalAbort{AbortReason::protocol,
                         "sample size disagrees with the disclose fraction"};
    for (std::size_t j = 0; j < sd.indices.size(); ++j) {
        if (sd.indices[j] >= n || (j > 0 && sd.indices[j] <= sd.indices[j - 1]))
            throw LocalAbort{AbortReason::protocol,
                             "sample positions not increasing in range"};
    }
    if (sd.indices.size() < kMinSampleBits)
        throw LocalAbort{AbortReason::insufficient_sample,
                         "too few sifted bits to estimate the channel"};

    distill::Estimates est;
    est.sample_size = sd.indices.size();
    for (std::size_t j = 0; j < sd.indices.size(); ++j)
        est.sample_errors += my_bits.get(sd.indices[j]) != sd.bits.get(j);
    est.qber = static_cast<double>(est.sample_errors) /
               static_cast<double>(est.sample_size);
    est.qber_upper =
        wilson_interval(est.sample_errors, est.sample_size,
                        normal_upper_quantile(kEstimateFailureProb))
            .second;
    const double lone =
        non_opp > 0 ? static_cast<double>(non_clicks) /
                          static_cast<double>(non_opp)
                    : 0.0;
    const double interf =
        int_opp > 0 ? static_cast<double>(int_clicks) /
                          static_cast<double>(int_opp)
                    : 0.0;
    est.visibility =
        lone + interf > 0.0 ? (lone - interf) / (lone + interf) : 0.0;

    rep.estimates = est;
    rep.n_disclosed = est.sample_size;
    rep.n_remaining = n - est.sample_size;

    if (est.qber > params.qber_abort_threshold)
        throw LocalAbort{AbortReason::qber_limit,
                         "error rate exceeds the abort threshold"};
    if (est.visibility < params.visibility_abort_threshold)
        throw LocalAbort{AbortReason::visibility_limit,
                         "visibility below the abort threshold"};

    const ParamEstimate pe{est.qber,   est.visibility, int_clicks,
                           non_clicks, int_opp,        non_opp};
    ep.send(pe);

    const BitVec remaining = drop_sampled(my_bits, sd.indices);
    ep.send(EcReveal{remaining});

    const std::uint64_t m_total = hashed_bits(rep.n_remaining, pe, params);
    BitVec pa_seed;
    if (m_total > 0) {
        Rng rng(derive_seed(cfg.system.seed, pipeline::kPaSeedStream));
        pa_seed = BitVec::random(
            remaining.size() + static_cast<std::size_t>(m_total) - 1,
            [&rng] { return rng.next_u64(); });
    }
    ep.send(PaSeed{static_cast<std::uint32_t>(m_total), pa_seed});

    const BitVec hashed =
        m_total > 0 ? distill::toeplitz_hash(pa_seed, remaining, m_total)
                    : BitVec{};
    const KeyConfirm kc = ep.expect<KeyConfirm>();
    if (kc.tag != confirm_tag(hashed))
        throw LocalAbort{AbortReason::confirm_mismatch,
                         "key confirmation tags disagree"};
    if (m_total > 0)
        rep.key = hashed.slice(0, static_cast<std::size_t>(m_total - kTagBits));
    // Returning confirms: the runner closes the stream, and that clean
    // close is the receiver's acknowledgement.
}

// --- receiver ----------------------------------------------------------------

void bob_flow(Endpoint& ep, const SessionConfig& cfg, std::uint64_t n_frames,
              SessionReport& rep) {
    const distill::DistillParams& params = cfg.system.distill;
    const sim::FrameConfig& fc = cfg.system.frame;
    const std::uint64_t fpb = cfg.frames_per_batch;
    const std::uint64_t n_batches =
        n_frames == 0 ? 0 : (n_frames + fpb - 1) / fpb;

    // The receiver's detections: the channel model driven by the shared
    // schedule. Past this point the schedule itself is never consulted;
    // everything the receiver knows arrives as clicks or wire frames.
    std::vector<DetectionsAnnounce> batches(
        static_cast<std::size_t>(n_batches));
    {
        const sim::EmissionSchedule schedule =
            pipeline::make_schedule(cfg.system, n_frames);
        const sim::TagStream tags = pipeline::simulate_tags(cfg.system, schedule);
        const auto period_ps = static_cast<std::uint64_t>(
            std::llround(fc.frame_period_ns * 1000.0));
        const auto slot_ps =
            static_cast<std::uint64_t>(std::llround(fc.slot_ns * 1000.0));
        for (std::uint64_t ts : tags.data_ts_ps) {
            const std::uint64_t frame = ts / period_ps;
            const int slot = static_cast<int>((ts % period_ps) / slot_ps);
            // Electronic gating: only clicks inside the pulse window are
            // announced (or usable).
            if (frame >= n_frames || slot >= fc.slots_per_frame) continue;
            DataClick c;
            c.frame_off = static_cast<std::uint16_t>(frame % fpb);
            c.pair = static_cast<std::uint8_t>(slot / 2);
            c.slot_in_pair = static_cast<std::uint8_t>(slot & 1);
            batches[static_cast<std::size_t>(frame / fpb)].data.push_back(c);
        }
        for (std::uint64_t ts : tags.monitor_ts_ps) {
            const std::uint64_t frame = ts / period_ps;
            const int slot = static_cast<int>((ts % period_ps) / slot_ps);
            if (frame >= n_frames || slot >= fc.slots_per_frame) continue;
            MonitorClick c;
            c.frame_off = static_cast<std::uint16_t>(frame % fpb);
            c.slot = static_cast<std::uint8_t>(slot);
            batches[static_cast<std::size_t>(frame / fpb)].monitor.push_back(c);
        }
    }

    const Hello mine{Role::bob, n_frames, cfg.frames_per_batch,
                     config_fingerprint(cfg, n_frames)};
    ep.send(mine);
    check_peer_hello(ep.expect<Hello>(), mine, Role::alice);

    BitVec my_bits;
    for (std::uint64_t b = 0; b < n_batches; ++b) {
        DetectionsAnnounce& ann = batches[static_cast<std::size_t>(b)];
        ann.batch = static_cast<std::uint32_t>(b);
        ep.send(ann);
        const SiftDecision dec = ep.expect<SiftDecision>();
        if (dec.batch != b || dec.keep.size() != ann.data.size())
            throw LocalAbort{AbortReason::protocol,
                             "sift verdict does not match the batch"};
        for (std::size_t i = 0; i < ann.data.size(); ++i)
            if (dec.keep.get(i))
                my_bits.push_back(ann.data[i].slot_in_pair != 0);
    }

    const std::uint64_t n = my_bits.size();
    rep.n_sifted = n;
    const auto k = static_cast<std::uint64_t>(
        params.disclose_fraction * static_cast<double>(n));
    const std::vector<std::uint64_t> idx64 = distill::sample_indices(
        n, k, derive_seed(cfg.system.seed, pipeline::kSampleStream));
    SampleDisclose sd;
    sd.indices.reserve(idx64.size());
    for (std::uint64_t i : idx64) {
        sd.indices.push_back(static_cast<std::uint32_t>(i));
        sd.bits.push_back(my_bits.get(static_cast<std::size_t>(i)));
    }
    ep.send(sd);

    const ParamEstimate pe = ep.expect<ParamEstimate>();
    if (!std::isfinite(pe.qber) || !std::isfinite(pe.visibility) ||
        pe.qber < 0.0 || pe.qber > 0.5 || pe.visibility < -1.0 ||
        pe.visibility > 1.0)
        throw LocalAbort{AbortReason::protocol,
                         "estimate outside the representable range"};
    if (pe.qber > params.qber_abort_threshold)
        throw LocalAbort{AbortReason::qber_limit,
                         "error rate exceeds the abort threshold"};
    if (pe.visibility < params.visibility_abort_threshold)
        throw LocalAbort{AbortReason::visibility_limit,
                         "visibility below the abort threshold"};

    rep.estimates.qber = pe.qber;
    rep.estimates.visibility = pe.visibility;
    rep.estimates.sample_size = k;
    rep.estimates.sample_errors = static_cast<std::uint64_t>(
        std::llround(pe.qber * static_cast<double>(k)));
    rep.estimates.qber_upper =
        wilson_interval(rep.estimates.sample_errors, k,
                        normal_upper_quantile(kEstimateFailureProb))
            .second;
    rep.n_disclosed = k;
    rep.n_remaining = n - k;

    const EcReveal ec = ep.expect<EcReveal>();
    if (ec.bits.size() != rep.n_remaining)
        throw LocalAbort{AbortReason::protocol,
                         "reconciliation payload has the wrong length"};
    const BitVec mine_remaining = drop_sampled(my_bits, sd.indices);
    rep.ec_flips = mine_remaining.hamming(ec.bits);
    // Reconciliation is modeled as adopting the transmitter's string; its
    // information cost is already charged in the key-length arithmetic.
    const BitVec& remaining = ec.bits;

    const PaSeed ps = ep.expect<PaSeed>();
    const std::uint64_t m_expected = hashed_bits(rep.n_remaining, pe, params);
    if (ps.m_total != m_expected)
        throw LocalAbort{AbortReason::protocol,
                         "hashed length disagrees with the estimates"};
    if (ps.m_total > 0 &&
        ps.seed.size() != remaining.size() + ps.m_total - 1)
        throw LocalAbort{AbortReason::protocol,
                         "hashing seed has the wrong length"};
    if (ps.m_total == 0 && !ps.seed.empty())
        throw LocalAbort{AbortReason::protocol,
                         "hashing seed announced without output"};

    const BitVec hashed =
        ps.m_total > 0
            ? distill::toeplitz_hash(ps.seed, remaining, ps.m_total)
            : BitVec{};
    ep.send(KeyConfirm{confirm_tag(hashed)});
    // The transmitter answers a matching tag with a bare clean close.
    ep.expect_clean_close();
    if (ps.m_total > 0)
        rep.key =
            hashed.slice(0, static_cast<std::size_t>(ps.m_total - kTagBits));
}

void abort_with(SessionReport& rep, Transport& link, AbortReason code,
                const std::string& text) {
    rep.aborted = true;
    rep.abort_code = code;
    rep.abort_text = text;
    try {
        write_frame(link, Abort{code, text});
    } catch (...) {
    }
}

SessionReport run_session(Transport& link, const SessionConfig& cfg,
                          bool transmitter) {
    validate(cfg);
    SessionReport rep;
    const std::uint64_t n_frames =
        pipeline::frames_for_duration(cfg.system, cfg.duration_s);
    rep.duration_s =
        static_cast<double>(n_frames) * cfg.system.frame.frame_period_ns * 1e-9;

    Endpoint ep(link);
    try {
        if (transmitter)
            alice_flow(ep, cfg, n_frames, rep);
        else
            bob_flow(ep, cfg, n_frames, rep);
        rep.confirmed = true;
        rep.skr_bit_s = rep.duration_s > 0.0
                            ? static_cast<double>(rep.key.size()) /
                                  rep.duration_s
                            : 0.0;
    } catch (const PeerAborted& a) {
        rep.aborted = true;
        rep.abort_code = a.reason;
        rep.abort_text = std::string("peer: ") + to_string(a.reason) +
                         (a.text.empty() ? "" : ": " + a.text);
    } catch (const LocalAbort& a) {
        rep.aborted = true;
        rep.abort_code = a.reason;
        rep.abort_text = a.text;
        try {
            write_frame(link, Abort{a.reason, a.text});
        } catch (...) {
        }
    } catch (const IntegrityError& e) {
        abort_with(rep, link, AbortReason::integrity, e.what());
    } catch (const FramingError& e) {
        abort_with(rep, link, AbortReason::integrity, e.what());
    } catch (const VersionError& e) {
        abort_with(rep, link, AbortReason::protocol, e.what());
    } catch (const ProtocolError& e) {
        abort_with(rep, link, AbortReason::protocol, e.what());
    } catch (const TransportError& e) {
        // Still worth announcing: a receive timeout leaves the outgoing
        // direction usable, and the peer must not mistake the close that
        // follows for a clean completion. On a truly dead stream the
        // attempt just fails silently.
        abort_with(rep, link, AbortReason::transport, e.what());
    } catch (const Error& e) {
        abort_with(rep, link, AbortReason::protocol, e.what());
    }
    if (rep.aborted) {
        rep.confirmed = false;
        rep.key = BitVec{};
        rep.skr_bit_s = 0.0;
    }
    link.close();
    return rep;
}

} // namespace

void validate(const SessionConfig& c) {
    sim::validate(c.system.frame);
    sim::validate(c.system.detector);
    distill::validate(c.system.distill);
    if (c.duration_s < 0.0)
        throw ValidationError("session: negative duration");
    if (c.frames_per_batch < 1 || c.frames_per_batch > 65535)
        throw ValidationError("session: batch must hold 1..65535 frames");
    if (c.system.frame.slots_per_frame > 256 ||
        c.system.frame.pairs_per_frame() > 255)
        throw ValidationError("session: frame grid exceeds the wire format");
}

SessionReport run_alice(Transport& link, const SessionConfig& cfg) {
    return run_session(link, cfg, true);
}

SessionReport run_bob(Transport& link, const SessionConfig& cfg) {
    return run_session(link, cfg, false);
}

} // namespace qkdcoex::net
