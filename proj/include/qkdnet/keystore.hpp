#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "qkdnet/bitstring.hpp"
#include "qkdnet/rng.hpp"

namespace qkdnet {

/// Single-use local key material issued by a store. block_id is globally
/// unique: the owning link index occupies the high bits.
struct KeyBlock {
    std::uint64_t block_id = 0;
    std::uint32_t link_id = 0;
    BitString bits;
};

/// Bounded FIFO of key bits shared by the two endpoints of a QBB link.
/// The simulator models the pair of synchronized endpoint stores as one
/// logical object; Q3P-level synchronization is below this abstraction.
///
/// Generation outpacing consumption discards the overflow (the QKD devices
/// run at full capacity regardless); a consume that cannot be covered fails
/// without side effects.
class KeyStore {
public:
    KeyStore(std::uint32_t link_id, std::uint64_t capacity_bits)
        : link_id_(link_id),
          capacity_(capacity_bits),
          words_((capacity_bits + 63) / 64, 0) {}

    /// Appends up to num_bits of fresh key material drawn from rng.
    /// Returns the number of bits accepted; the rest is discarded and counted.
    std::uint64_t deposit(std::uint64_t num_bits, RngStream& rng) {
        const std::uint64_t accepted = std::min(num_bits, capacity_ - size_);
        std::uint64_t produced = 0;
        std::uint64_t word = 0;
        for (std::uint64_t i = 0; i < accepted; ++i) {
            if (produced % 64 == 0) word = rng.next_u64();
            write_bit(size_ + i, (word >> (produced % 64)) & 1u);
            ++produced;
        }
        size_ += accepted;
        total_deposited_ += num_bits;
        total_discarded_ += num_bits - accepted;
        return accepted;
    }

    /// Atomically removes exactly num_bits as a fresh never-reissued block,
    /// or fails (insufficient key) leaving the store untouched.
    std::optional<KeyBlock> consume(std::uint64_t num_bits) {
        if (num_bits == 0 || num_bits > size_) return std::nullopt;
        KeyBlock block;
        block.link_id = link_id_;
        block.block_id = (static_cast<std::uint64_t>(link_id_) + 1) << 40 | next_block_seq_++;
        block.bits = BitString::zeros(num_bits);
        for (std::uint64_t i = 0; i < num_bits; ++i) {
            if (read_bit(i)) block.bits.set_bit(i, true);
        }
        head_ = (head_ + num_bits) % bit_capacity();
        size_ -= num_bits;
        total_consumed_ += num_bits;
        return block;
    }

    double fill_fraction() const {
        return capacity_ == 0 ? 0.0 : static_cast<double>(size_) / static_cast<double>(capacity_);
    }

    std::uint32_t link_id() const { return link_id_; }
    std::uint64_t available_bits() const { return size_; }
    std::uint64_t capacity_bits() const { return capacity_; }
    std::uint64_t total_deposited() const { return total_deposited_; }
    std::uint64_t total_discarded() const { return total_discarded_; }
    std::uint64_t total_consumed() const { return total_consumed_; }
    std::uint64_t blocks_issued() const { return next_block_seq_; }

private:
    std::uint64_t bit_capacity() const { return words_.size() * 64; }

    bool read_bit(std::uint64_t offset) const {
        const std::uint64_t pos = (head_ + offset) % bit_capacity();
        return (words_[pos >> 6] >> (pos & 63)) & 1u;
    }

    void write_bit(std::uint64_t offset, bool v) {
        const std::uint64_t pos = (head_ + offset) % bit_capacity();
        if (v)
            words_[pos >> 6] |= (1ull << (pos & 63));
        else
            words_[pos >> 6] &= ~(1ull << (pos & 63));
    }

    std::uint32_t link_id_;
    std::uint64_t capacity_;
    std::vector<std::uint64_t> words_;
    std::uint64_t head_ = 0;
    std::uint64_t size_ = 0;
    std::uint64_t next_block_seq_ = 0;
    std::uint64_t total_deposited_ = 0;
    std::uint64_t total_discarded_ = 0;
    std::uint64_t total_consumed_ = 0;
};

}  // namespace qkdnet
