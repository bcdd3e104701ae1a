#include "qkdcoex/tagstream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "qkdcoex/errors.hpp"
#include "qkdcoex/rng.hpp"

namespace qkdcoex::sim {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'A', 'G'};
constexpr unsigned char kVersion = 1;
constexpr unsigned char kDataLine = 0;
constexpr unsigned char kMonitorLine = 1;

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back((v >> (8 * i)) & 0xffu);
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t f64_bits(double v) {
    std::uint64_t u;
    static_assert(sizeof u == sizeof v);
    std::memcpy(&u, &v, sizeof u);
    return u;
}

double bits_f64(std::uint64_t u) {
    double v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

// Visit (ts, line) pairs of both lines merged by timestamp; data wins ties.
template <typename Fn>
void for_each_merged(const TagStream& t, Fn&& fn) {
    size_t i = 0, j = 0;
    while (i < t.data_ts_ps.size() || j < t.monitor_ts_ps.size()) {
        const bool take_data =
            j >= t.monitor_ts_ps.size() ||
            (i < t.data_ts_ps.size() && t.data_ts_ps[i] <= t.monitor_ts_ps[j]);
        if (take_data)
            fn(t.data_ts_ps[i++], kDataLine);
        else
            fn(t.monitor_ts_ps[j++], kMonitorLine);
    }
}

} // namespace

TagStream with_timing(const TagStream& tags, double offset_ns,
                      double jitter_rms_ns, std::uint64_t seed) {
    if (jitter_rms_ns < 0.0)
        throw ValidationError("timing model: negative jitter");
    Rng rng(seed);
    TagStream out;
    out.seed = tags.seed;
    out.config_hash = tags.config_hash;
    out.duration_ns = tags.duration_ns;
    auto shift = [&](const std::vector<std::uint64_t>& in,
                     std::vector<std::uint64_t>& dst) {
        dst.reserve(in.size());
        for (std::uint64_t ts : in) {
            const double t = static_cast<double>(ts) + offset_ns * 1000.0 +
                             rng.normal() * jitter_rms_ns * 1000.0;
            if (t >= 0.0)
                dst.push_back(static_cast<std::uint64_t>(std::llround(t)));
        }
        std::sort(dst.begin(), dst.end());
    };
    shift(tags.data_ts_ps, out.data_ts_ps);
    shift(tags.monitor_ts_ps, out.monitor_ts_ps);
    return out;
}

void save_ttag(const TagStream& tags, const std::string& path) {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    buf.push_back(kVersion);
    put_u64(buf, tags.seed);
    put_u64(buf, tags.config_hash);
    put_u64(buf, tags.data_ts_ps.size() + tags.monitor_ts_ps.size());
    put_u64(buf, f64_bits(tags.duration_ns));
    for_each_merged(tags, [&](std::uint64_t ts, unsigned char line) {
        put_u64(buf, ts);
        buf.push_back(line);
    });
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("short write: " + path);
}

TagStream load_ttag(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    constexpr size_t kHeader = 4 + 1 + 8 + 8 + 8 + 8;
    if (buf.size() < kHeader)
        throw FramingError("tag container shorter than its header");
    if (!std::equal(kMagic, kMagic + 4, buf.begin()))
        throw FramingError("tag container magic mismatch");
    if (buf[4] != kVersion)
        throw VersionError("unsupported tag container version");
    TagStream t;
    t.seed = get_u64(&buf[5]);
    t.config_hash = get_u64(&buf[13]);
    const std::uint64_t count = get_u64(&buf[21]);
    t.duration_ns = bits_f64(get_u64(&buf[29]));
    if (buf.size() != kHeader + count * 9)
        throw FramingError("tag container length disagrees with its count");
    const unsigned char* p = buf.data() + kHeader;
    for (std::uint64_t i = 0; i < count; ++i, p += 9) {
        const std::uint64_t ts = get_u64(p);
        const unsigned char line = p[8];
        if (line == kDataLine)
            t.data_ts_ps.push_back(ts);
        else if (line == kMonitorLine)
            t.monitor_ts_ps.push_back(ts);
        else
            throw FramingError("tag container has an unknown line id");
    }
    return t;
}

void export_csv(const TagStream& tags, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "ts_ps,line\r\n";
    for_each_merged(tags, [&](std::uint64_t ts, unsigned char line) {
        f << ts << (line == kDataLine ? ",data\r\n" : ",monitor\r\n");
    });
    if (!f) throw IoError("short write: " + path);
}

} // namespace qkdcoex::sim
