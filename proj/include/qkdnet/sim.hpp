#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qkdnet/metrics.hpp"
#include "qkdnet/routing.hpp"
#include "qkdnet/scenario.hpp"

namespace qkdnet {

enum class TraceLevel { None, Circuit, Frame };

struct RunOptions {
    TraceLevel trace = TraceLevel::None;
    std::optional<std::uint64_t> seed;              // overrides scenario seed
    std::optional<double> sample_interval_s;        // overrides config
};

/// One deterministic discrete-event run. Construction validates the
/// scenario (throws ScenarioError); run() executes to the configured
/// duration; metrics() is complete only after run() returns.
class Simulation {
public:
    explicit Simulation(Scenario scenario, RunOptions opts = {});
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    void run();

    const NetworkMetrics& metrics() const;
    const std::vector<std::string>& trace_lines() const;
    const Scenario& scenario() const;

    // Run-audit observability, used by the test suite.
    std::uint64_t duplicate_block_refs() const;    // key blocks seen on >1 frame
    std::uint64_t fidelity_mismatches() const;     // delivered payload != ingress payload
    std::uint64_t delivered_packets_total() const;
    std::uint64_t in_transit_plaintext_hits() const;  // frames whose wire bits equal the payload they carry
    std::uint64_t payload_digest(std::uint32_t circuit_id) const;
    std::uint64_t store_available_bits(const std::string& link_id) const;
    RoutingTable node_routing_table(const std::string& node_id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience: construct, run, return the metrics.
NetworkMetrics run_scenario(const Scenario& s, RunOptions opts = {});

}  // namespace qkdnet
