#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qkdnet {

struct LinkMetrics {
    std::uint64_t key_bits_generated = 0;
    std::uint64_t key_bits_discarded_overflow = 0;
    std::uint64_t key_bits_consumed_otp = 0;
    std::uint64_t key_bits_consumed_auth = 0;
    std::uint64_t key_bits_available_end = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t control_messages = 0;
    std::uint64_t control_unauth_sends = 0;
    std::uint64_t auth_failures = 0;
    double reserved_rate_end = 0.0;
    double fill_fraction_end = 0.0;
    double seconds_down = 0.0;

    std::uint64_t consumed_total() const {
        return key_bits_consumed_otp + key_bits_consumed_auth;
    }
};

struct CircuitMetrics {
    std::string demand_id;
    std::string source;
    std::string dest;
    std::string service;
    std::string final_state;
    std::string teardown_reason;
    double established_at = -1.0;
    double activated_at = -1.0;
    double closed_at = -1.0;
    std::vector<std::string> initial_path;
    std::vector<std::string> final_path;
    std::uint32_t reroutes = 0;
    std::uint64_t packets_offered = 0;
    std::uint64_t packets_admitted = 0;
    std::uint64_t packets_policed = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_duplicate_dropped = 0;
    std::uint64_t packets_stale_dropped = 0;
    std::uint64_t payload_bits_offered = 0;
    std::uint64_t payload_bits_delivered = 0;
    double sum_delay_s = 0.0;
    double max_delay_s = 0.0;

    double mean_delay_s() const {
        return packets_delivered ? sum_delay_s / static_cast<double>(packets_delivered) : 0.0;
    }
    double delivery_ratio() const {
        return packets_admitted
                   ? static_cast<double>(packets_delivered) / static_cast<double>(packets_admitted)
                   : 0.0;
    }
};

struct RejectionRecord {
    double time = 0.0;
    std::string demand_id;
    std::string reason;
    double best_available_rate = 0.0;
};

struct SamplePoint {
    double time = 0.0;
    std::map<std::string, double> link_fill;
    std::map<std::string, double> link_available_bits;
};

struct NetworkMetrics {
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t events_processed = 0;
    std::uint64_t floods = 0;
    std::map<std::string, LinkMetrics> links;
    std::map<std::uint64_t, CircuitMetrics> circuits;
    std::vector<RejectionRecord> rejections;
    std::vector<SamplePoint> samples;

    std::string to_json() const;
};

std::string format_double(double v);

}  // namespace qkdnet
