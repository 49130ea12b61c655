#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdnet/forwarding.hpp"
#include "qkdnet/link_model.hpp"
#include "qkdnet/routing.hpp"

namespace qkdnet {

/// Every tunable of a run. Units are fixed by the schema: bits/second for
/// rates, km for lengths, seconds for times — never inferred.
struct ScenarioConfig {
    std::uint32_t auth_tag_key_bits = 128;
    std::uint32_t max_frame_payload_bits = 8192;
    double admission_factor = 0.9;
    CostWeights weights;  // w_load, w_cap, r_ref, k_paths
    double flood_delay_s = 0.05;
    double keygen_tick_s = 0.01;
    double channel_latency_s = 0.001;
    std::uint32_t channel_window = 64;
    double sample_interval_s = 0.0;  // 0 disables fill-level sampling
    double default_qber_threshold = 0.11;
    std::uint64_t default_store_capacity_bits = 100000000ull;  // 1e8
};

struct NodeSpec {
    std::string id;
    bool qan = false;  // stub: client access only, never transits
};

struct LinkSpec {
    std::string id;
    std::string node_a;
    std::string node_b;
    LinkProfile profile;
    std::uint64_t store_capacity_bits = 0;  // 0 = config default
    double latency_s = -1.0;                // <0 = config default
};

struct TrafficPattern {
    enum class Kind { None, Poisson, Periodic, Times };
    Kind kind = Kind::None;
    double rate = 0.0;      // Poisson: mean packets/second
    double interval = 0.0;  // Periodic
    std::int64_t count = -1;  // Periodic: -1 = until scenario end
    std::vector<double> times;
};

struct DemandSpec {
    double time = 0.0;
    std::string id;
    std::string source;
    std::string source_app;
    std::string dest;
    std::uint16_t dest_port = 0;
    std::uint32_t key_block_length = 8192;
    ServiceClass service;
    TrafficPattern traffic;
};

struct AttackSpec {
    double time = 0.0;
    std::string link;
    bool restore = false;
    double qber = 0.0;
};

struct Scenario {
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    ScenarioConfig config;
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::vector<DemandSpec> demands;
    std::vector<AttackSpec> attacks;
};

struct ScenarioIssue {
    std::string path;  // dotted field path, e.g. "topology.links[2].a"
    std::string message;
    bool warning = false;

    std::string text() const {
        return (warning ? "warning: " : "error: ") + path + ": " + message;
    }
};

/// Thrown on malformed input; `issues` carries the field-level diagnostics.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<ScenarioIssue> issues)
        : std::runtime_error(issues.empty() ? "invalid scenario" : issues.front().text()),
          issues_(std::move(issues)) {}
    const std::vector<ScenarioIssue>& issues() const { return issues_; }

private:
    std::vector<ScenarioIssue> issues_;
};

/// Parses the JSON text; throws ScenarioError on schema violations.
Scenario parse_scenario(const std::string& json_text);

/// Reads and parses a scenario file; file errors surface as std::ios_base::failure.
Scenario load_scenario_file(const std::string& path);

/// Full referential-integrity and range check. Errors make the scenario
/// unrunnable; warnings (e.g. link length beyond d_max) do not.
std::vector<ScenarioIssue> validate_scenario(const Scenario& s);

/// validate + throw on any non-warning issue.
void ensure_valid(const Scenario& s);

/// Sweepable scalar access: "config.<field>" or "link.<field>" (applied to
/// every link). Returns false for unknown parameter names.
bool apply_parameter(Scenario& s, const std::string& name, double value);
std::vector<std::string> sweepable_parameters();

}  // namespace qkdnet
