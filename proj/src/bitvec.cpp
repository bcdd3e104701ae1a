#include "qkdcoex/bitvec.hpp"

#include <bit>

#include "qkdcoex/errors.hpp"

namespace qkdcoex {

BitVec BitVec::from_string(const std::string& s) {
    BitVec v(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1') v.set(i, true);
        else if (s[i] != '0')
            throw ValidationError("bit string may contain only '0' and '1'");
    }
    return v;
}

BitVec BitVec::slice(size_t start, size_t len) const {
    if (start + len > size_)
        throw ValidationError("bit slice out of range");
    BitVec out(len);
    size_t word0 = start >> 6;
    unsigned shift = start & 63;
    for (size_t w = 0; w < out.words_.size(); ++w) {
        uint64_t lo = words_[word0 + w] >> shift;
        uint64_t hi = 0;
        if (shift && word0 + w + 1 < words_.size())
            hi = words_[word0 + w + 1] << (64 - shift);
        out.words_[w] = lo | hi;
    }
    out.mask_tail();
    return out;
}

void BitVec::xor_with(const BitVec& other) {
    if (other.size_ != size_)
        throw ValidationError("xor of bit vectors with different lengths");
    for (size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
}

size_t BitVec::count_ones() const {
    size_t n = 0;
    for (uint64_t w : words_) n += std::popcount(w);
    return n;
}

size_t BitVec::hamming(const BitVec& other) const {
    if (other.size_ != size_)
        throw ValidationError("hamming distance needs equal lengths");
    size_t n = 0;
    for (size_t w = 0; w < words_.size(); ++w)
        n += std::popcount(words_[w] ^ other.words_[w]);
    return n;
}

std::string BitVec::to_string() const {
    std::string s(size_, '0');
    for (size_t i = 0; i < size_; ++i)
        if (get(i)) s[i] = '1';
    return s;
}

std::vector<uint8_t> BitVec::to_bytes() const {
    std::vector<uint8_t> out((size_ + 7) / 8, 0);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(words_[i >> 3] >> ((i & 7) * 8));
    return out;
}

BitVec BitVec::from_bytes(const std::vector<uint8_t>& bytes, size_t nbits) {
    if (bytes.size() < (nbits + 7) / 8)
        throw ValidationError("byte buffer shorter than declared bit count");
    BitVec v(nbits);
    size_t nbytes = (nbits + 7) / 8;
    for (size_t i = 0; i < nbytes; ++i)
        v.words_[i >> 3] |= static_cast<uint64_t>(bytes[i]) << ((i & 7) * 8);
    v.mask_tail();
    return v;
}

void BitVec::mask_tail() {
    unsigned r = size_ & 63;
    if (r && !words_.empty()) words_.back() &= (~0ULL) >> (64 - r);
}

} // namespace qkdcoex
