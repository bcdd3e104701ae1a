#include "qkdcoex/netlink.hpp"

#include <cstring>

#include "qkdcoex/checksum.hpp"
#include "qkdcoex/errors.hpp"

namespace qkdcoex::net {

namespace {

constexpr char kMagic[4] = {'Q', 'K', 'D', 'L'};
constexpr std::size_t kHeaderBytes = 9;  // magic + version + body length
constexpr std::size_t kCrcBytes = 4;

// --- little endian primitives ---------------------------------------------

class Writer {
  public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { raw(v, 2); }
    void u32(std::uint32_t v) { raw(v, 4); }
    void u64(std::uint64_t v) { raw(v, 8); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void bits(const BitVec& v) {
        u64(v.size());
        const std::vector<std::uint8_t> packed = v.to_bytes();
        out_.insert(out_.end(), packed.begin(), packed.end());
    }

  private:
    void raw(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t>& out_;
};

class Reader {
  public:
    Reader(const std::uint8_t* data, std::size_t len)
        : data_(data), len_(len) {}

    std::uint8_t u8() { return take(1); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(take(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    std::uint64_t u64() { return take(8); }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    BitVec bits() {
        const std::uint64_t n = u64();
        const std::uint64_t nbytes = (n + 7) / 8;
        if (nbytes > remaining())
            throw FramingError("frame: bit vector longer than its payload");
        std::vector<std::uint8_t> packed(data_ + pos_, data_ + pos_ + nbytes);
        pos_ += static_cast<std::size_t>(nbytes);
        return BitVec::from_bytes(packed, static_cast<std::size_t>(n));
    }
    std::string text(std::size_t n) {
        if (n > remaining())
            throw FramingError("frame: text longer than its payload");
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return len_ - pos_; }
    void expect_done(const char* what) const {
        if (pos_ != len_)
            throw FramingError(std::string("frame: trailing bytes after ") +
                               what);
    }

  private:
    std::uint64_t take(int n) {
        if (remaining() < static_cast<std::size_t>(n))
            throw FramingError("frame: payload truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

// --- per-type payload codecs -----------------------------------------------

void put_payload(Writer& w, const Hello& m) {
    w.u8(static_cast<std::uint8_t>(m.role));
    w.u64(m.n_frames);
    w.u32(m.frames_per_batch);
    w.u64(m.config_hash);
}

void put_payload(Writer& w, const DetectionsAnnounce& m) {
    w.u32(m.batch);
    w.u32(static_cast<std::uint32_t>(m.data.size()));
    for (const DataClick& c : m.data) {
        w.u16(c.frame_off);
        w.u8(c.pair);
        w.u8(c.slot_in_pair);
    }
    w.u32(static_cast<std::uint32_t>(m.monitor.size()));
    for (const MonitorClick& c : m.monitor) {
        w.u16(c.frame_off);
        w.u8(c.slot);
    }
}

void put_payload(Writer& w, const SiftDecision& m) {
    w.u32(m.batch);
    w.bits(m.keep);
}

void put_payload(Writer& w, const SampleDisclose& m) {
    if (m.bits.size() != m.indices.size())
        throw ValidationError("sample message: one bit per index required");
    w.u32(static_cast<std::uint32_t>(m.indices.size()));
    for (std::uint32_t idx : m.indices) w.u32(idx);
    w.bits(m.bits);
}

void put_payload(Writer& w, const ParamEstimate& m) {
    w.f64(m.qber);
    w.f64(m.visibility);
    w.u64(m.interfering_clicks);
    w.u64(m.noninterfering_clicks);
    w.u64(m.interfering_opportunities);
    w.u64(m.noninterfering_opportunities);
}

void put_payload(Writer& w, const EcReveal& m) { w.bits(m.bits); }

void put_payload(Writer& w, const PaSeed& m) {
    w.u32(m.m_total);
    w.bits(m.seed);
}

void put_payload(Writer& w, const KeyConfirm& m) { w.u64(m.tag); }

void put_payload(Writer& w, const Abort& m) {
    w.u8(static_cast<std::uint8_t>(m.reason));
    // The text is advisory; keep whatever fits the u16 length field.
    const std::size_t n = std::min<std::size_t>(m.text.size(), 0xffff);
    w.u16(static_cast<std::uint16_t>(n));
    for (std::size_t i = 0; i < n; ++i)
        w.u8(static_cast<std::uint8_t>(m.text[i]));
}

Message get_payload(MsgType type, Reader& r) {
    switch (type) {
        case MsgType::hello: {
            Hello m;
            const std::uint8_t role = r.u8();
            if (role > 1)
                throw FramingError("hello: unknown role");
            m.role = static_cast<Role>(role);
            m.n_frames = r.u64();
            m.frames_per_batch = r.u32();
            m.config_hash = r.u64();
            return m;
        }
        case MsgType::detections_announce: {
            DetectionsAnnounce m;
            m.batch = r.u32();
            const std::uint32_t nd = r.u32();
            if (static_cast<std::uint64_t>(nd) * 4 > r.remaining())
                throw FramingError("detections: count beyond payload");
            m.data.reserve(nd);
            for (std::uint32_t i = 0; i < nd; ++i) {
                DataClick c;
                c.frame_off = r.u16();
                c.pair = r.u8();
                c.slot_in_pair = r.u8();
                m.data.push_back(c);
            }
            const std::uint32_t nm = r.u32();
            if (static_cast<std::uint64_t>(nm) * 3 > r.remaining())
                throw FramingError("detections: count beyond payload");
            m.monitor.reserve(nm);
            for (std::uint32_t i = 0; i < nm; ++i) {
                MonitorClick c;
                c.frame_off = r.u16();
                c.slot = r.u8();
                m.monitor.push_back(c);
            }
            return m;
        }
        case MsgType::sift_decision: {
            SiftDecision m;
            m.batch = r.u32();
            m.keep = r.bits();
            return m;
        }
        case MsgType::sample_disclose: {
            SampleDisclose m;
            const std::uint32_t n = r.u32();
            if (static_cast<std::uint64_t>(n) * 4 > r.remaining())
                throw FramingError("sample: count beyond payload");
            m.indices.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i)
                m.indices.push_back(r.u32());
            m.bits = r.bits();
            if (m.bits.size() != m.indices.size())
                throw FramingError("sample: one bit per index required");
            return m;
        }
        case MsgType::param_estimate: {
            ParamEstimate m;
            m.qber = r.f64();
            m.visibility = r.f64();
            m.interfering_clicks = r.u64();
            m.noninterfering_clicks = r.u64();
            m.interfering_opportunities = r.u64();
            m.noninterfering_opportunities = r.u64();
            return m;
        }
        case MsgType::ec_reveal: {
            EcReveal m;
            m.bits = r.bits();
            return m;
        }
        case MsgType::pa_seed: {
            PaSeed m;
            m.m_total = r.u32();
            m.seed = r.bits();
            return m;
        }
        case MsgType::key_confirm: {
            KeyConfirm m;
            m.tag = r.u64();
            return m;
        }
        case MsgType::abort: {
            Abort m;
            const std::uint8_t reason = r.u8();
            if (reason < 1 || reason > 8)
                throw FramingError("abort: unknown reason code");
            m.reason = static_cast<AbortReason>(reason);
            m.text = r.text(r.u16());
            return m;
        }
    }
    throw ProtocolError("frame: unknown message type");
}

} // namespace

MsgType type_of(const Message& m) {
    return std::visit(
        [](const auto& v) -> MsgType {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Hello>) return MsgType::hello;
            if constexpr (std::is_same_v<T, DetectionsAnnounce>)
                return MsgType::detections_announce;
            if constexpr (std::is_same_v<T, SiftDecision>)
                return MsgType::sift_decision;
            if constexpr (std::is_same_v<T, SampleDisclose>)
                return MsgType::sample_disclose;
            if constexpr (std::is_same_v<T, ParamEstimate>)
                return MsgType::param_estimate;
            if constexpr (std::is_same_v<T, EcReveal>)
                return MsgType::ec_reveal;
            if constexpr (std::is_same_v<T, PaSeed>) return MsgType::pa_seed;
            if constexpr (std::is_same_v<T, KeyConfirm>)
                return MsgType::key_confirm;
            if constexpr (std::is_same_v<T, Abort>) return MsgType::abort;
        },
        m);
}

const char* to_string(MsgType t) {
    switch (t) {
        case MsgType::hello: return "hello";
        case MsgType::detections_announce: return "detections-announce";
        case MsgType::sift_decision: return "sift-decision";
        case MsgType::sample_disclose: return "sample-disclose";
        case MsgType::param_estimate: return "param-estimate";
        case MsgType::ec_reveal: return "ec-reveal";
        case MsgType::pa_seed: return "pa-seed";
        case MsgType::key_confirm: return "key-confirm";
        case MsgType::abort: return "abort";
    }
    return "unknown";
}

const char* to_string(AbortReason r) {
    switch (r) {
        case AbortReason::qber_limit: return "qber above threshold";
        case AbortReason::visibility_limit: return "visibility below threshold";
        case AbortReason::insufficient_sample: return "sample too small";
        case AbortReason::integrity: return "frame integrity failure";
        case AbortReason::protocol: return "protocol violation";
        case AbortReason::confirm_mismatch: return "key confirmation mismatch";
        case AbortReason::transport: return "transport failure";
        case AbortReason::peer: return "peer abort";
    }
    return "unknown";
}

std::vector<std::uint8_t> encode_frame(const Message& m) {
    std::vector<std::uint8_t> out;
    Writer w(out);
    out.insert(out.end(), kMagic, kMagic + 4);
    w.u8(kProtocolVersion);
    w.u32(0);  // body length, patched below
    w.u8(static_cast<std::uint8_t>(type_of(m)));
    std::visit([&w](const auto& v) { put_payload(w, v); }, m);

    const std::size_t body = out.size() - kHeaderBytes;
    if (body > kMaxBodyBytes)
        throw ValidationError("frame: body exceeds the size cap");
    for (int i = 0; i < 4; ++i)
        out[5 + i] = static_cast<std::uint8_t>(body >> (8 * i));
    w.u32(crc32(out.data(), out.size()));
    return out;
}

Message decode_frame(const std::uint8_t* data, std::size_t len) {
    if (len < kHeaderBytes + 1 + kCrcBytes)
        throw FramingError("frame: shorter than the fixed layout");
    if (std::memcmp(data, kMagic, 4) != 0)
        throw FramingError("frame: bad magic");
    if (data[4] != kProtocolVersion)
        throw VersionError("frame: unsupported protocol version");
    std::uint32_t body = 0;
    for (int i = 0; i < 4; ++i)
        body |= static_cast<std::uint32_t>(data[5 + i]) << (8 * i);
    if (body < 1 || body > kMaxBodyBytes)
        throw FramingError("frame: implausible body length");
    if (len != kHeaderBytes + body + kCrcBytes)
        throw FramingError("frame: length field disagrees with the buffer");

    const std::size_t crc_off = kHeaderBytes + body;
    std::uint32_t stated = 0;
    for (int i = 0; i < 4; ++i)
        stated |= static_cast<std::uint32_t>(data[crc_off + i]) << (8 * i);
    if (crc32(data, crc_off) != stated)
        throw IntegrityError("frame: checksum mismatch");

    const std::uint8_t type = data[kHeaderBytes];
    if (type < 1 || type > 9)
        throw ProtocolError("frame: unknown message type");
    Reader r(data + kHeaderBytes + 1, body - 1);
    Message m = get_payload(static_cast<MsgType>(type), r);
    r.expect_done(to_string(static_cast<MsgType>(type)));
    return m;
}

void write_frame(Transport& t, const Message& m) {
    const std::vector<std::uint8_t> frame = encode_frame(m);
    t.send(frame.data(), frame.size());
}

namespace {

// Fills [buf, buf+n); returns false when the stream is already closed at
// the first byte, throws when it closes partway through.
bool recv_exact(Transport& t, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const std::size_t r = t.recv_some(buf + got, n - got);
        if (r == 0) {
            if (got == 0) return false;
            throw TransportError("stream ended inside a frame");
        }
        got += r;
    }
    return true;
}

} // namespace

std::optional<Message> read_frame(Transport& t) {
    std::uint8_t header[kHeaderBytes];
    if (!recv_exact(t, header, kHeaderBytes)) return std::nullopt;
    std::uint32_t body = 0;
    for (int i = 0; i < 4; ++i)
        body |= static_cast<std::uint32_t>(header[5 + i]) << (8 * i);
    if (body < 1 || body > kMaxBodyBytes)
        throw FramingError("frame: implausible body length");

    std::vector<std::uint8_t> frame(kHeaderBytes + body + kCrcBytes);
    std::memcpy(frame.data(), header, kHeaderBytes);
    if (!recv_exact(t, frame.data() + kHeaderBytes, body + kCrcBytes))
        throw TransportError("stream ended inside a frame");
    return decode_frame(frame.data(), frame.size());
}

} // namespace qkdcoex::net
