#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkdnet {

/// Variable-length bit string. Bit i lives in byte i/8 at position i%8
/// (LSB first); unused trailing bits of the last byte are kept zero so
/// equality and hashing work on the raw bytes.
class BitString {
public:
    BitString() = default;

    static BitString zeros(std::size_t nbits) {
        BitString b;
        b.nbits_ = nbits;
        b.bytes_.assign((nbits + 7) / 8, 0);
        return b;
    }

    /// Low `nbits` of `value`, bit 0 first. Handy for exhaustive small-payload tests.
    static BitString from_u64(std::uint64_t value, std::size_t nbits) {
        BitString b = zeros(nbits);
        for (std::size_t i = 0; i < nbits && i < 64; ++i) {
            if ((value >> i) & 1u) b.set_bit(i, true);
        }
        return b;
    }

    std::size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }

    bool bit(std::size_t i) const {
        return (bytes_[i >> 3] >> (i & 7)) & 1u;
    }

    void set_bit(std::size_t i, bool v) {
        if (v)
            bytes_[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
        else
            bytes_[i >> 3] &= static_cast<std::uint8_t>(~(1u << (i & 7)));
    }

    void append_bit(bool v) {
        if (nbits_ % 8 == 0) bytes_.push_back(0);
        ++nbits_;
        if (v) set_bit(nbits_ - 1, true);
    }

    void append(const BitString& other) {
        if (nbits_ % 8 == 0) {
            bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
            nbits_ += other.nbits_;
        } else {
            for (std::size_t i = 0; i < other.nbits_; ++i) append_bit(other.bit(i));
        }
    }

    BitString slice(std::size_t offset, std::size_t nbits) const {
        if (offset + nbits > nbits_) throw std::out_of_range("BitString::slice out of range");
        BitString out = zeros(nbits);
        for (std::size_t i = 0; i < nbits; ++i) out.set_bit(i, bit(offset + i));
        return out;
    }

    /// Bitwise XOR; the one-time-pad primitive requires equal lengths.
    BitString xored(const BitString& key) const {
        if (key.nbits_ != nbits_)
            throw std::invalid_argument("length mismatch: plaintext " + std::to_string(nbits_) +
                                        " bits vs key " + std::to_string(key.nbits_) + " bits");
        BitString out = *this;
        for (std::size_t i = 0; i < bytes_.size(); ++i) out.bytes_[i] ^= key.bytes_[i];
        return out;
    }

    std::size_t popcount() const {
        std::size_t n = 0;
        for (std::uint8_t b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
        return n;
    }

    std::uint64_t to_u64() const {
        if (nbits_ > 64) throw std::out_of_range("BitString::to_u64 needs size <= 64");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < bytes_.size(); ++i)
            v |= static_cast<std::uint64_t>(bytes_[i]) << (8 * i);
        return v;
    }

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s;
        s.reserve(bytes_.size() * 2);
        for (std::uint8_t b : bytes_) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xf]);
        }
        return s;
    }

    std::uint64_t fnv1a() const {
        std::uint64_t h = 14695981039346656037ull;
        auto mix = [&h](std::uint8_t byte) {
            h ^= byte;
            h *= 1099511628211ull;
        };
        for (int i = 0; i < 8; ++i) mix(static_cast<std::uint8_t>(nbits_ >> (8 * i)));
        for (std::uint8_t b : bytes_) mix(b);
        return h;
    }

    friend bool operator==(const BitString& a, const BitString& b) {
        return a.nbits_ == b.nbits_ && a.bytes_ == b.bytes_;
    }
    friend bool operator!=(const BitString& a, const BitString& b) { return !(a == b); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

}  // namespace qkdnet
