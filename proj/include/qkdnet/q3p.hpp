#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkdnet/bitstring.hpp"
#include "qkdnet/keystore.hpp"

namespace qkdnet {

struct Q3pConfig {
    std::uint32_t max_frame_payload_bits = 8192;
    std::uint32_t auth_tag_key_bits = 128;
};

/// Circuit id 0 marks the link-local control channel.
constexpr std::uint32_t kControlCircuit = 0;

/// One link-layer frame. In transit only the ciphertext and classical
/// header exist; plaintext is reconstructed at the receiving node.
struct Q3pFrame {
    std::uint64_t frame_id = 0;  // strictly increasing per channel direction
    std::uint32_t circuit_id = kControlCircuit;
    std::uint64_t packet_seq = 0;
    std::uint32_t epoch = 0;  // circuit path generation, bumped on reroute
    std::uint32_t fragment_index = 0;
    std::uint32_t fragment_count = 1;
    BitString ciphertext;
    std::uint64_t auth_tag = 0;
    std::uint64_t key_block_ref = 0;
};

/// Flow-control state of one direction of a link's classical channel.
struct ChannelState {
    std::uint32_t in_flight = 0;
    std::uint32_t window = 64;
    double latency_s = 0.001;
};

/// Bitwise one-time pad; lengths must match (throws std::invalid_argument).
inline BitString otp_encrypt(const BitString& text, const BitString& key) {
    return text.xored(key);
}

/// Placeholder authentication tag: a deterministic digest of the tag-key
/// bits, classical header fields, and ciphertext. Stands in for a
/// universal-hash MAC; what the simulator needs is the key-bit cost and
/// tamper detection, not a real construction.
std::uint64_t compute_auth_tag(const BitString& tag_key, std::uint32_t circuit_id,
                               std::uint64_t packet_seq, std::uint32_t fragment_index,
                               std::uint32_t fragment_count, const BitString& ciphertext);

struct SentMessage {
    std::vector<Q3pFrame> frames;
    std::vector<KeyBlock> blocks;  // blocks[i] keys frames[i]; receiver side of the store
    std::uint64_t key_bits_consumed = 0;
};

struct ReceivedFragment {
    BitString plaintext;
    bool auth_ok = false;
};

/// Sender half of one channel direction: fragmentation, per-frame OTP and
/// tag-key consumption, frame sequencing. All-or-nothing on key shortage.
class Q3pSender {
public:
    Q3pSender() = default;
    explicit Q3pSender(Q3pConfig cfg) : cfg_(cfg) {}

    /// Splits payload into ceil(len/max_frame_payload_bits) fragments, each
    /// consuming fragment_length + auth_tag_key_bits from the store. Returns
    /// nullopt (store untouched, message stays with the caller) when the
    /// store cannot cover the whole message.
    std::optional<SentMessage> send_message(std::uint32_t circuit_id, std::uint64_t packet_seq,
                                            std::uint32_t epoch, const BitString& payload,
                                            KeyStore& store);

    /// Key bits a payload of this size costs on one hop.
    std::uint64_t message_key_cost(std::uint64_t payload_bits) const;
    std::uint32_t fragments_for(std::uint64_t payload_bits) const;

    const Q3pConfig& config() const { return cfg_; }
    std::uint64_t frames_sent() const { return next_frame_id_; }
    std::uint64_t messages_sent() const { return messages_sent_; }
    std::uint64_t payload_bits_sent() const { return payload_bits_sent_; }

private:
    Q3pConfig cfg_;
    std::uint64_t next_frame_id_ = 0;
    std::uint64_t messages_sent_ = 0;
    std::uint64_t payload_bits_sent_ = 0;
};

/// Decrypts one frame with its key block and verifies the modeled tag.
/// auth_ok=false signals tampering; callers drop and count the frame.
ReceivedFragment receive_frame(const Q3pFrame& frame, const KeyBlock& key, const Q3pConfig& cfg);

/// In-order fragment collector for one (incoming link, circuit) pair.
/// Channels are lossless FIFO, so fragments of a message arrive contiguously.
class Reassembler {
public:
    /// Feeds one authenticated plaintext fragment; returns the full payload
    /// once fragment_count fragments have arrived.
    std::optional<BitString> add(const Q3pFrame& frame, BitString plaintext);

private:
    BitString pending_;
    std::uint32_t expected_index_ = 0;
};

}  // namespace qkdnet
