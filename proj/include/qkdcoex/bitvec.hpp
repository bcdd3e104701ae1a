#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qkdcoex {

// Packed vector of bits, LSB-first within each 64-bit word. Bit i of the
// logical sequence lives in word i/64 at position i%64.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(size_t n) : size_(n), words_((n + 63) / 64, 0) {}

    // From a string of '0'/'1' characters; anything else throws.
    static BitVec from_string(const std::string& s);

    // n bits drawn from a caller-provided word source (e.g. Rng::next_u64).
    template <typename WordFn>
    static BitVec random(size_t n, WordFn&& next_word) {
        BitVec v(n);
        for (auto& w : v.words_) w = next_word();
        v.mask_tail();
        return v;
    }

    size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool get(size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(size_t i, bool b) {
        uint64_t m = 1ULL << (i & 63);
        if (b) words_[i >> 6] |= m; else words_[i >> 6] &= ~m;
    }

    void push_back(bool b) {
        if ((size_ & 63) == 0) words_.push_back(0);
        if (b) words_[size_ >> 6] |= 1ULL << (size_ & 63);
        ++size_;
    }

    // Bits [start, start+len), as a new vector.
    BitVec slice(size_t start, size_t len) const;

    // XOR with another vector of identical length.
    void xor_with(const BitVec& other);

    size_t count_ones() const;

    // Hamming distance to another vector of identical length.
    size_t hamming(const BitVec& other) const;

    std::string to_string() const;

    // Dense byte serialization: bits packed LSB-first, tail padded with 0.
    std::vector<uint8_t> to_bytes() const;
    static BitVec from_bytes(const std::vector<uint8_t>& bytes, size_t nbits);

    const std::vector<uint64_t>& words() const { return words_; }

    bool operator==(const BitVec& o) const {
        return size_ == o.size_ && words_ == o.words_;
    }

private:
    void mask_tail();

    size_t size_ = 0;
    std::vector<uint64_t> words_;
};

} // namespace qkdcoex
