#pragma once

#include <cstddef>
#include <cstdint>

namespace qkdcoex {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
// crc32("123456789") == 0xCBF43926.
uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

// FNV-1a 64-bit; used for cheap content fingerprints in file headers.
uint64_t fnv1a64(const uint8_t* data, size_t len);

} // namespace qkdcoex
