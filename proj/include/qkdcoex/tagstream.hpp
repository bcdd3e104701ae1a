#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qkdcoex::sim {

// Time-tagged detection record of one receiver run. Timestamps are absolute
// picoseconds since the start of frame 0, strictly increasing per line.
struct TagStream {
    std::uint64_t seed = 0;         // simulation seed the stream was drawn with
    std::uint64_t config_hash = 0;  // hash of the generating configuration
    double duration_ns = 0.0;       // observation window length
    std::vector<std::uint64_t> data_ts_ps;     // data-line detector
    std::vector<std::uint64_t> monitor_ts_ps;  // monitor-line detector
};

// Copy with every timestamp delayed by offset_ns plus a gaussian jitter of
// the given rms; tags shifted before t=0 are dropped, order is restored.
TagStream with_timing(const TagStream& tags, double offset_ns,
                      double jitter_rms_ns, std::uint64_t seed);

// Binary container ("TTAG"): header with seed/config hash/record count and
// window length, then the merged records as {u64 ts_ps, u8 line}, little
// endian, sorted by timestamp. Throws FramingError on malformed input and
// VersionError on an unknown container version.
void save_ttag(const TagStream& tags, const std::string& path);
TagStream load_ttag(const std::string& path);

// RFC-4180 CSV (CRLF, header "ts_ps,line"), rows merged by timestamp.
void export_csv(const TagStream& tags, const std::string& path);

} // namespace qkdcoex::sim
