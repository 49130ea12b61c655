#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "qkdnet/bitstring.hpp"

namespace qkdnet {

/// Deterministic random stream (xoshiro256**), seeded via splitmix64.
/// Streams for different purposes are derived from one root seed by a
/// fixed label, so adding a consumer never perturbs existing streams.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    static RngStream derive(std::uint64_t root_seed, std::string_view label) {
        std::uint64_t h = 14695981039346656037ull;
        for (char c : label) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 1099511628211ull;
        }
        return RngStream(root_seed ^ (h * 0x9E3779B97F4A7C15ull));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 significant bits; never returns 1.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform01()); }

    std::uint64_t below(std::uint64_t bound) { return bound ? next_u64() % bound : 0; }

    BitString bits(std::size_t nbits) {
        BitString out = BitString::zeros(nbits);
        std::size_t i = 0;
        while (i < nbits) {
            std::uint64_t w = next_u64();
            for (std::size_t j = 0; j < 64 && i < nbits; ++j, ++i) {
                if ((w >> j) & 1u) out.set_bit(i, true);
            }
        }
        return out;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t s_[4];
};

}  // namespace qkdnet
