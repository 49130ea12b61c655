#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkdnet/bitstring.hpp"
#include "qkdnet/q3p.hpp"

namespace qkdnet {

enum class ServiceType { BestEffort, GuaranteedRate };

/// BestEffort bounds the client by (lambda_k, sigma_k) with no guarantee;
/// GuaranteedRate contracts a statistically guaranteed amount per period.
struct ServiceClass {
    ServiceType type = ServiceType::BestEffort;
    double lambda_k = 1.0;  // packets/second
    double sigma_k = 1.0;   // burst depth, packets
    double bits_per_period = 0.0;
    double period = 1.0;

    double nominal_rate() const {
        return type == ServiceType::GuaranteedRate ? bits_per_period / period : 0.0;
    }
};

struct PathRequest {
    std::string source_app;
    std::uint32_t ingress = 0;
    std::uint32_t dest_node = 0;
    std::uint16_t dest_port = 0;
    ServiceClass service;
    std::uint32_t key_block_length = 8192;  // bits per delivered session-key unit
};

/// Policing state for BestEffort circuits. The bucket starts full so an
/// initial burst of sigma_k packets conforms.
struct TokenBucket {
    double tokens = 0.0;
    double last_update = 0.0;

    static TokenBucket full(const ServiceClass& s, double now) {
        return TokenBucket{s.sigma_k, now};
    }

    /// Conforming iff a whole token is available after regeneration at
    /// lambda_k tokens/second, capped at depth sigma_k.
    bool police(double now, double lambda_k, double sigma_k) {
        tokens = std::min(sigma_k, tokens + lambda_k * (now - last_update));
        last_update = now;
        if (tokens >= 1.0) {
            tokens -= 1.0;
            return true;
        }
        return false;
    }
};

enum class CircuitState { Establishing, Active, Rerouting, Closed };

struct VirtualCircuit {
    std::uint32_t circuit_id = 0;
    PathRequest request;
    std::vector<std::uint32_t> path_nodes;  // ingress first, egress last
    std::vector<std::uint32_t> path_links;
    CircuitState state = CircuitState::Establishing;
    std::uint32_t epoch = 0;           // bumped on every reroute
    double demanded_rate = 0.0;        // reservation installed per link (GuaranteedRate)
    TokenBucket bucket;                // BestEffort policing
    std::uint64_t next_seq = 1;

    bool guaranteed() const { return request.service.type == ServiceType::GuaranteedRate; }
};

/// A session-key fragment waiting at a node for one outgoing link.
struct QueuedPacket {
    std::uint32_t circuit_id = 0;
    std::uint64_t seq = 0;
    std::uint32_t epoch = 0;
    bool guaranteed = false;
    BitString payload;
};

/// Relative key-bit cost of authentication for packets of this block
/// length: fragments * tag_bits / block_length. With 8192-bit blocks and
/// 128-bit tags this is 1.5625%.
double auth_overhead_fraction(std::uint32_t key_block_length, const Q3pConfig& cfg);

struct PathAdmission {
    bool admissible = false;
    double min_headroom = 0.0;  // min over links of factor*effective - reserved
};

/// Guaranteed-rate admission over one candidate path: every link must keep
/// reserved + demand within admission_factor * effective_rate.
PathAdmission check_admission(const std::vector<double>& link_effective_rates,
                              const std::vector<double>& link_reserved_rates,
                              double admission_factor, double demanded_rate);

/// Head-of-line pick across the two priority classes: guaranteed before best
/// effort, FIFO within class, and a head whose key need cannot be met does
/// not block the other class (skip-ahead within key availability).
/// Returns which queue to pop, or nullopt when nothing is transmittable.
enum class PickClass { Guaranteed, BestEffort };
std::optional<PickClass> pick_transmittable(const std::deque<QueuedPacket>& guaranteed_queue,
                                            const std::deque<QueuedPacket>& best_effort_queue,
                                            std::uint64_t available_key_bits,
                                            const Q3pConfig& cfg);

}  // namespace qkdnet
