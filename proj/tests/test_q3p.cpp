#include <doctest.h>

#include <set>

#include "qkdnet/q3p.hpp"
#include "qkdnet/rng.hpp"

using namespace qkdnet;

namespace {
KeyStore filled_store(std::uint32_t link_id, std::uint64_t bits, std::uint64_t seed) {
    KeyStore s(link_id, bits);
    RngStream rng(seed);
    s.deposit(bits, rng);
    return s;
}
}  // namespace

TEST_CASE("otp identity and self cancellation") {
    BitString m = BitString::from_u64(0b1010, 4);
    CHECK(otp_encrypt(m, BitString::zeros(4)) == m);
    CHECK(otp_encrypt(m, m) == BitString::zeros(4));
    CHECK_THROWS_AS(otp_encrypt(m, BitString::zeros(5)), std::invalid_argument);
}

TEST_CASE("fragment count and key cost") {
    Q3pConfig cfg;
    cfg.max_frame_payload_bits = 1024;
    cfg.auth_tag_key_bits = 128;
    Q3pSender snd(cfg);
    CHECK(snd.fragments_for(2048) == 2);
    CHECK(snd.fragments_for(1024) == 1);
    CHECK(snd.fragments_for(1025) == 2);
    CHECK(snd.message_key_cost(2048) == 2304);
    CHECK(snd.message_key_cost(1024) == 1152);
}

TEST_CASE("2048-bit payload over 1024-bit frames consumes 2304 bits") {
    Q3pConfig cfg;
    cfg.max_frame_payload_bits = 1024;
    Q3pSender snd(cfg);
    KeyStore store = filled_store(1, 10000, 3);
    RngStream payload_rng(4);

    auto sent = snd.send_message(5, 1, 0, payload_rng.bits(2048), store);
    REQUIRE(sent.has_value());
    CHECK(sent->frames.size() == 2);
    CHECK(sent->key_bits_consumed == 2304);
    CHECK(store.total_consumed() == 2304);
    CHECK(sent->frames[0].fragment_count == 2);
    CHECK(sent->frames[1].fragment_index == 1);
    CHECK(sent->frames[0].circuit_id == 5);
    CHECK(sent->frames[0].packet_seq == 1);
}

TEST_CASE("payload at the frame boundary stays in one frame") {
    Q3pConfig cfg;
    cfg.max_frame_payload_bits = 1024;
    Q3pSender snd(cfg);
    KeyStore store = filled_store(1, 10000, 3);
    RngStream payload_rng(4);

    auto sent = snd.send_message(1, 1, 0, payload_rng.bits(1024), store);
    REQUIRE(sent.has_value());
    CHECK(sent->frames.size() == 1);
    CHECK(sent->frames[0].fragment_count == 1);
    CHECK(sent->key_bits_consumed == 1152);
}

TEST_CASE("relaying a 256-bit key across two links costs 768 bits total") {
    Q3pSender hop1, hop2;
    KeyStore store1 = filled_store(1, 10000, 20);
    KeyStore store2 = filled_store(2, 10000, 21);
    RngStream payload_rng(22);
    const BitString session_key = payload_rng.bits(256);

    auto leg1 = hop1.send_message(9, 1, 0, session_key, store1);
    REQUIRE(leg1.has_value());
    auto frag1 = receive_frame(leg1->frames[0], leg1->blocks[0], Q3pConfig{});
    REQUIRE(frag1.auth_ok);

    auto leg2 = hop2.send_message(9, 1, 0, frag1.plaintext, store2);
    REQUIRE(leg2.has_value());
    auto frag2 = receive_frame(leg2->frames[0], leg2->blocks[0], Q3pConfig{});
    REQUIRE(frag2.auth_ok);

    CHECK(frag2.plaintext == session_key);
    CHECK(store1.total_consumed() + store2.total_consumed() == 768);
}

TEST_CASE("send is all or nothing on key shortage") {
    Q3pSender snd;
    KeyStore store = filled_store(1, 99, 3);
    RngStream payload_rng(4);
    CHECK(!snd.send_message(1, 1, 0, payload_rng.bits(100), store).has_value());
    CHECK(store.available_bits() == 99);
    CHECK(store.total_consumed() == 0);
    CHECK(snd.messages_sent() == 0);
    CHECK(snd.frames_sent() == 0);
}

TEST_CASE("wire ciphertext differs from plaintext by key popcount") {
    Q3pSender snd;
    KeyStore store = filled_store(1, 100000, 6);
    RngStream payload_rng(7);
    BitString payload = payload_rng.bits(512);

    auto sent = snd.send_message(2, 9, 0, payload, store);
    REQUIRE(sent.has_value());
    const BitString& c = sent->frames[0].ciphertext;
    const BitString otp_key = sent->blocks[0].bits.slice(0, 512);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < 512; ++i) diff += c.bit(i) != payload.bit(i);
    CHECK(diff == otp_key.popcount());
}

TEST_CASE("round trip: 1000 random payloads reassemble bit-identical") {
    Q3pConfig cfg;
    cfg.max_frame_payload_bits = 256;
    Q3pSender snd(cfg);
    KeyStore store = filled_store(1, 20000000, 10);
    RngStream payload_rng(11);
    RngStream len_rng(12);

    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t len = 1 + len_rng.below(1500);
        BitString payload = payload_rng.bits(len);
        auto sent = snd.send_message(3, static_cast<std::uint64_t>(i), 0, payload, store);
        REQUIRE(sent.has_value());

        Reassembler rx;
        std::optional<BitString> done;
        for (std::size_t f = 0; f < sent->frames.size(); ++f) {
            auto frag = receive_frame(sent->frames[f], sent->blocks[f], cfg);
            REQUIRE(frag.auth_ok);
            auto maybe = rx.add(sent->frames[f], std::move(frag.plaintext));
            if (f + 1 < sent->frames.size())
                CHECK(!maybe.has_value());
            else
                done = std::move(maybe);
        }
        REQUIRE(done.has_value());
        CHECK(*done == payload);
    }
}

TEST_CASE("tampered ciphertext fails authentication") {
    Q3pSender snd;
    KeyStore store = filled_store(1, 100000, 13);
    RngStream payload_rng(14);

    auto sent = snd.send_message(4, 1, 0, payload_rng.bits(300), store);
    REQUIRE(sent.has_value());
    Q3pFrame tampered = sent->frames[0];
    tampered.ciphertext.set_bit(17, !tampered.ciphertext.bit(17));
    CHECK(!receive_frame(tampered, sent->blocks[0], Q3pConfig{}).auth_ok);

    Q3pFrame reheader = sent->frames[0];
    reheader.packet_seq += 1;
    CHECK(!receive_frame(reheader, sent->blocks[0], Q3pConfig{}).auth_ok);

    CHECK(receive_frame(sent->frames[0], sent->blocks[0], Q3pConfig{}).auth_ok);
}

TEST_CASE("key block refs are unique across frames") {
    Q3pConfig cfg;
    cfg.max_frame_payload_bits = 128;
    Q3pSender snd(cfg);
    KeyStore store = filled_store(1, 1000000, 15);
    RngStream payload_rng(16);

    std::set<std::uint64_t> refs;
    for (int i = 0; i < 50; ++i) {
        auto sent = snd.send_message(1, static_cast<std::uint64_t>(i), 0, payload_rng.bits(700), store);
        REQUIRE(sent.has_value());
        for (const auto& f : sent->frames) CHECK(refs.insert(f.key_block_ref).second);
    }
}

TEST_CASE("frame ids are strictly increasing per sender") {
    Q3pSender snd;
    KeyStore store = filled_store(1, 1000000, 17);
    RngStream payload_rng(18);

    std::uint64_t prev = 0;
    bool first = true;
    for (int i = 0; i < 20; ++i) {
        auto sent = snd.send_message(1, static_cast<std::uint64_t>(i), 0, payload_rng.bits(9000), store);
        REQUIRE(sent.has_value());
        for (const auto& f : sent->frames) {
            if (!first) CHECK(f.frame_id > prev);
            prev = f.frame_id;
            first = false;
        }
    }
    CHECK(snd.frames_sent() == 40);
    CHECK(snd.messages_sent() == 20);
}
