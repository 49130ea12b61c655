#include "qkdnet/q3p.hpp"

namespace qkdnet {

namespace {

void mix_u64(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= static_cast<std::uint8_t>(v >> (8 * i));
        h *= 1099511628211ull;
    }
}

}  // namespace

std::uint64_t compute_auth_tag(const BitString& tag_key, std::uint32_t circuit_id,
                               std::uint64_t packet_seq, std::uint32_t fragment_index,
                               std::uint32_t fragment_count, const BitString& ciphertext) {
    std::uint64_t h = 14695981039346656037ull;
    mix_u64(h, tag_key.fnv1a());
    mix_u64(h, circuit_id);
    mix_u64(h, packet_seq);
    mix_u64(h, fragment_index);
    mix_u64(h, fragment_count);
    mix_u64(h, ciphertext.fnv1a());
    return h;
}

std::uint32_t Q3pSender::fragments_for(std::uint64_t payload_bits) const {
    return static_cast<std::uint32_t>((payload_bits + cfg_.max_frame_payload_bits - 1) /
                                      cfg_.max_frame_payload_bits);
}

std::uint64_t Q3pSender::message_key_cost(std::uint64_t payload_bits) const {
    return payload_bits +
           static_cast<std::uint64_t>(fragments_for(payload_bits)) * cfg_.auth_tag_key_bits;
}

std::optional<SentMessage> Q3pSender::send_message(std::uint32_t circuit_id,
                                                   std::uint64_t packet_seq, std::uint32_t epoch,
                                                   const BitString& payload, KeyStore& store) {
    const std::uint64_t len = payload.size();
    if (len == 0) return std::nullopt;
    if (store.available_bits() < message_key_cost(len)) return std::nullopt;

    const std::uint32_t count = fragments_for(len);
    SentMessage out;
    out.frames.reserve(count);
    out.blocks.reserve(count);
    for (std::uint32_t idx = 0; idx < count; ++idx) {
        const std::uint64_t offset = static_cast<std::uint64_t>(idx) * cfg_.max_frame_payload_bits;
        const std::uint64_t frag_len = std::min<std::uint64_t>(cfg_.max_frame_payload_bits, len - offset);
        auto block = store.consume(frag_len + cfg_.auth_tag_key_bits);
        // the aggregate check above guarantees coverage
        if (!block) return std::nullopt;

        Q3pFrame frame;
        frame.frame_id = next_frame_id_++;
        frame.circuit_id = circuit_id;
        frame.packet_seq = packet_seq;
        frame.epoch = epoch;
        frame.fragment_index = idx;
        frame.fragment_count = count;
        frame.ciphertext = otp_encrypt(payload.slice(offset, frag_len), block->bits.slice(0, frag_len));
        frame.auth_tag = compute_auth_tag(block->bits.slice(frag_len, cfg_.auth_tag_key_bits),
                                          circuit_id, packet_seq, idx, count, frame.ciphertext);
        frame.key_block_ref = block->block_id;
        out.key_bits_consumed += frag_len + cfg_.auth_tag_key_bits;
        out.frames.push_back(std::move(frame));
        out.blocks.push_back(std::move(*block));
    }
    ++messages_sent_;
    payload_bits_sent_ += len;
    return out;
}

ReceivedFragment receive_frame(const Q3pFrame& frame, const KeyBlock& key, const Q3pConfig& cfg) {
    const std::uint64_t frag_len = frame.ciphertext.size();
    ReceivedFragment out;
    out.plaintext = otp_encrypt(frame.ciphertext, key.bits.slice(0, frag_len));
    const std::uint64_t expected =
        compute_auth_tag(key.bits.slice(frag_len, cfg.auth_tag_key_bits), frame.circuit_id,
                         frame.packet_seq, frame.fragment_index, frame.fragment_count,
                         frame.ciphertext);
    out.auth_ok = expected == frame.auth_tag;
    return out;
}

std::optional<BitString> Reassembler::add(const Q3pFrame& frame, BitString plaintext) {
    if (frame.fragment_index != expected_index_) {
        // unreachable on a lossless FIFO channel
        pending_ = BitString();
        expected_index_ = 0;
        if (frame.fragment_index != 0) return std::nullopt;
    }
    pending_.append(plaintext);
    ++expected_index_;
    if (expected_index_ == frame.fragment_count) {
        BitString full = std::move(pending_);
        pending_ = BitString();
        expected_index_ = 0;
        return full;
    }
    return std::nullopt;
}

}  // namespace qkdnet
