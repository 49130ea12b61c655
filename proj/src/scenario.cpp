#include "qkdnet/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qkdnet {

using nlohmann::json;

namespace {

class Parser {
public:
    std::vector<ScenarioIssue> issues;

    void fail(const std::string& path, const std::string& message) {
        issues.push_back({path, message, false});
    }

    double number(const json& j, const std::string& path, const char* key, double fallback,
                  bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing required field");
            return fallback;
        }
        if (!j[key].is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback;
        }
        return j[key].get<double>();
    }

    std::string text(const json& j, const std::string& path, const char* key,
                     const std::string& fallback = "", bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing required field");
            return fallback;
        }
        if (!j[key].is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback;
        }
        return j[key].get<std::string>();
    }

    bool boolean(const json& j, const std::string& path, const char* key, bool fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_boolean()) {
            fail(path + "." + key, "expected a boolean");
            return fallback;
        }
        return j[key].get<bool>();
    }
};

TrafficPattern parse_traffic(Parser& p, const json& j, const std::string& path) {
    TrafficPattern t;
    const std::string kind = p.text(j, path, "type", "", true);
    if (kind == "poisson") {
        t.kind = TrafficPattern::Kind::Poisson;
        t.rate = p.number(j, path, "rate", 0.0, true);
    } else if (kind == "periodic") {
        t.kind = TrafficPattern::Kind::Periodic;
        t.interval = p.number(j, path, "interval", 0.0, true);
        t.count = static_cast<std::int64_t>(p.number(j, path, "count", -1.0));
    } else if (kind == "times") {
        t.kind = TrafficPattern::Kind::Times;
        if (!j.contains("times") || !j["times"].is_array()) {
            p.fail(path + ".times", "expected an array of seconds");
        } else {
            for (const auto& v : j["times"]) {
                if (!v.is_number()) {
                    p.fail(path + ".times", "expected numbers");
                    break;
                }
                t.times.push_back(v.get<double>());
            }
        }
    } else if (!kind.empty()) {
        p.fail(path + ".type", "unknown traffic type '" + kind + "'");
    }
    return t;
}

ServiceClass parse_service(Parser& p, const json& j, const std::string& path) {
    ServiceClass s;
    const std::string kind = p.text(j, path, "type", "", true);
    if (kind == "best_effort") {
        s.type = ServiceType::BestEffort;
        s.lambda_k = p.number(j, path, "lambda_k", 1.0, true);
        s.sigma_k = p.number(j, path, "sigma_k", 1.0, true);
    } else if (kind == "guaranteed") {
        s.type = ServiceType::GuaranteedRate;
        s.bits_per_period = p.number(j, path, "bits_per_period", 0.0, true);
        s.period = p.number(j, path, "period", 1.0, true);
    } else if (!kind.empty()) {
        p.fail(path + ".type", "unknown service type '" + kind + "'");
    }
    return s;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioError({{"$", std::string("not valid JSON: ") + e.what(), false}});
    }
    if (!root.is_object()) throw ScenarioError({{"$", "top level must be an object", false}});

    Parser p;
    Scenario s;
    s.duration_s = p.number(root, "$", "duration", 0.0, true);
    s.seed = static_cast<std::uint64_t>(p.number(root, "$", "seed", 0.0));

    if (root.contains("config")) {
        const json& c = root["config"];
        if (!c.is_object()) {
            p.fail("config", "expected an object");
        } else {
            ScenarioConfig& cfg = s.config;
            cfg.auth_tag_key_bits = static_cast<std::uint32_t>(
                p.number(c, "config", "auth_tag_key_bits", cfg.auth_tag_key_bits));
            cfg.max_frame_payload_bits = static_cast<std::uint32_t>(
                p.number(c, "config", "max_frame_payload_bits", cfg.max_frame_payload_bits));
            cfg.admission_factor = p.number(c, "config", "admission_factor", cfg.admission_factor);
            cfg.weights.w_load = p.number(c, "config", "w_load", cfg.weights.w_load);
            cfg.weights.w_cap = p.number(c, "config", "w_cap", cfg.weights.w_cap);
            cfg.weights.r_ref = p.number(c, "config", "r_ref", cfg.weights.r_ref);
            cfg.weights.k_paths =
                static_cast<int>(p.number(c, "config", "k_paths", cfg.weights.k_paths));
            cfg.flood_delay_s = p.number(c, "config", "flood_delay_s", cfg.flood_delay_s);
            cfg.keygen_tick_s = p.number(c, "config", "keygen_tick_s", cfg.keygen_tick_s);
            cfg.channel_latency_s =
                p.number(c, "config", "channel_latency_s", cfg.channel_latency_s);
            cfg.channel_window = static_cast<std::uint32_t>(
                p.number(c, "config", "channel_window", cfg.channel_window));
            cfg.sample_interval_s =
                p.number(c, "config", "sample_interval_s", cfg.sample_interval_s);
            cfg.default_qber_threshold =
                p.number(c, "config", "default_qber_threshold", cfg.default_qber_threshold);
            cfg.default_store_capacity_bits = static_cast<std::uint64_t>(p.number(
                c, "config", "default_store_capacity_bits",
                static_cast<double>(cfg.default_store_capacity_bits)));
        }
    }

    if (!root.contains("topology") || !root["topology"].is_object()) {
        p.fail("topology", "missing required object");
    } else {
        const json& topo = root["topology"];
        if (!topo.contains("nodes") || !topo["nodes"].is_array()) {
            p.fail("topology.nodes", "missing required array");
        } else {
            std::size_t i = 0;
            for (const auto& nj : topo["nodes"]) {
                const std::string path = "topology.nodes[" + std::to_string(i++) + "]";
                NodeSpec n;
                if (nj.is_string()) {
                    n.id = nj.get<std::string>();
                } else if (nj.is_object()) {
                    n.id = p.text(nj, path, "id", "", true);
                    n.qan = p.boolean(nj, path, "qan", false);
                } else {
                    p.fail(path, "expected a string or an object");
                }
                s.nodes.push_back(std::move(n));
            }
        }
        if (!topo.contains("links") || !topo["links"].is_array()) {
            p.fail("topology.links", "missing required array");
        } else {
            std::size_t i = 0;
            for (const auto& lj : topo["links"]) {
                const std::string path = "topology.links[" + std::to_string(i++) + "]";
                LinkSpec l;
                if (!lj.is_object()) {
                    p.fail(path, "expected an object");
                    s.links.push_back(std::move(l));
                    continue;
                }
                l.id = p.text(lj, path, "id", "", true);
                l.node_a = p.text(lj, path, "a", "", true);
                l.node_b = p.text(lj, path, "b", "", true);
                l.profile.r0_bps = p.number(lj, path, "r0_bps", l.profile.r0_bps);
                l.profile.lambda_qkd_km = p.number(lj, path, "lambda_qkd_km", l.profile.lambda_qkd_km);
                l.profile.d_max_km = p.number(lj, path, "d_max_km", l.profile.d_max_km);
                l.profile.length_km = p.number(lj, path, "length_km", l.profile.length_km);
                l.profile.num_quantum_channels = static_cast<int>(
                    p.number(lj, path, "channels", l.profile.num_quantum_channels));
                l.profile.qber = p.number(lj, path, "qber", l.profile.qber);
                l.profile.qber_threshold =
                    p.number(lj, path, "qber_threshold", s.config.default_qber_threshold);
                l.store_capacity_bits = static_cast<std::uint64_t>(
                    p.number(lj, path, "store_capacity_bits", 0.0));
                l.latency_s = p.number(lj, path, "latency_s", -1.0);
                s.links.push_back(std::move(l));
            }
        }
    }

    if (root.contains("demands")) {
        if (!root["demands"].is_array()) {
            p.fail("demands", "expected an array");
        } else {
            std::size_t i = 0;
            for (const auto& dj : root["demands"]) {
                const std::string path = "demands[" + std::to_string(i++) + "]";
                DemandSpec d;
                if (!dj.is_object()) {
                    p.fail(path, "expected an object");
                    s.demands.push_back(std::move(d));
                    continue;
                }
                d.time = p.number(dj, path, "time", 0.0, true);
                d.id = p.text(dj, path, "id", "demand" + std::to_string(i - 1));
                d.source = p.text(dj, path, "source", "", true);
                d.source_app = p.text(dj, path, "source_app", "app");
                d.dest = p.text(dj, path, "dest", "", true);
                d.dest_port = static_cast<std::uint16_t>(p.number(dj, path, "dest_port", 0.0));
                d.key_block_length = static_cast<std::uint32_t>(
                    p.number(dj, path, "key_block_length", 8192.0));
                if (!dj.contains("service") || !dj["service"].is_object())
                    p.fail(path + ".service", "missing required object");
                else
                    d.service = parse_service(p, dj["service"], path + ".service");
                if (dj.contains("traffic")) {
                    if (!dj["traffic"].is_object())
                        p.fail(path + ".traffic", "expected an object");
                    else
                        d.traffic = parse_traffic(p, dj["traffic"], path + ".traffic");
                }
                s.demands.push_back(std::move(d));
            }
        }
    }

    if (root.contains("attacks")) {
        if (!root["attacks"].is_array()) {
            p.fail("attacks", "expected an array");
        } else {
            std::size_t i = 0;
            for (const auto& aj : root["attacks"]) {
                const std::string path = "attacks[" + std::to_string(i++) + "]";
                AttackSpec a;
                if (!aj.is_object()) {
                    p.fail(path, "expected an object");
                    s.attacks.push_back(std::move(a));
                    continue;
                }
                a.time = p.number(aj, path, "time", 0.0, true);
                a.link = p.text(aj, path, "link", "", true);
                a.restore = p.boolean(aj, path, "restore", false);
                if (!a.restore) a.qber = p.number(aj, path, "qber", 0.0, true);
                s.attacks.push_back(std::move(a));
            }
        }
    }

    if (!p.issues.empty()) throw ScenarioError(std::move(p.issues));
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::vector<ScenarioIssue> validate_scenario(const Scenario& s) {
    std::vector<ScenarioIssue> issues;
    auto error = [&](const std::string& path, const std::string& msg) {
        issues.push_back({path, msg, false});
    };
    auto warn = [&](const std::string& path, const std::string& msg) {
        issues.push_back({path, msg, true});
    };

    if (!(s.duration_s > 0)) error("duration", "must be > 0");
    const ScenarioConfig& cfg = s.config;
    if (cfg.auth_tag_key_bits == 0) error("config.auth_tag_key_bits", "must be >= 1");
    if (cfg.max_frame_payload_bits == 0) error("config.max_frame_payload_bits", "must be >= 1");
    if (!(cfg.admission_factor > 0 && cfg.admission_factor <= 1.0))
        error("config.admission_factor", "must be in (0, 1]");
    if (cfg.weights.k_paths < 1) error("config.k_paths", "must be >= 1");
    if (!(cfg.keygen_tick_s > 0)) error("config.keygen_tick_s", "must be > 0");
    if (cfg.flood_delay_s < 0) error("config.flood_delay_s", "must be >= 0");
    if (cfg.channel_latency_s < 0) error("config.channel_latency_s", "must be >= 0");
    if (cfg.channel_window == 0) error("config.channel_window", "must be >= 1");
    if (!(cfg.default_qber_threshold > 0 && cfg.default_qber_threshold < 0.5))
        error("config.default_qber_threshold", "must be in (0, 0.5)");

    std::set<std::string> node_ids;
    std::map<std::string, std::size_t> node_degree;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const std::string path = "topology.nodes[" + std::to_string(i) + "]";
        if (s.nodes[i].id.empty()) error(path + ".id", "must be nonempty");
        if (!node_ids.insert(s.nodes[i].id).second)
            error(path + ".id", "duplicate node id '" + s.nodes[i].id + "'");
    }
    if (s.nodes.empty()) error("topology.nodes", "at least one node required");

    std::set<std::string> link_ids;
    for (std::size_t i = 0; i < s.links.size(); ++i) {
        const std::string path = "topology.links[" + std::to_string(i) + "]";
        const LinkSpec& l = s.links[i];
        if (l.id.empty()) error(path + ".id", "must be nonempty");
        if (!link_ids.insert(l.id).second)
            error(path + ".id", "duplicate link id '" + l.id + "'");
        if (!node_ids.count(l.node_a)) error(path + ".a", "unknown node '" + l.node_a + "'");
        if (!node_ids.count(l.node_b)) error(path + ".b", "unknown node '" + l.node_b + "'");
        if (l.node_a == l.node_b) error(path, "link endpoints must differ");
        if (auto msg = validate_profile(l.profile)) error(path, *msg);
        if (l.profile.length_km > l.profile.d_max_km)
            warn(path, "length " + std::to_string(l.profile.length_km) +
                           " km exceeds d_max " + std::to_string(l.profile.d_max_km) +
                           " km: link will generate zero key");
        node_degree[l.node_a]++;
        node_degree[l.node_b]++;
    }

    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        if (s.nodes[i].qan && node_degree[s.nodes[i].id] != 1)
            error("topology.nodes[" + std::to_string(i) + "]",
                  "QAN node '" + s.nodes[i].id + "' must have exactly one link");
    }

    std::set<std::string> demand_ids;
    for (std::size_t i = 0; i < s.demands.size(); ++i) {
        const std::string path = "demands[" + std::to_string(i) + "]";
        const DemandSpec& d = s.demands[i];
        if (!demand_ids.insert(d.id).second)
            error(path + ".id", "duplicate demand id '" + d.id + "'");
        if (d.time < 0 || d.time > s.duration_s)
            error(path + ".time", "must be within [0, duration]");
        if (!node_ids.count(d.source)) error(path + ".source", "unknown node '" + d.source + "'");
        if (!node_ids.count(d.dest)) error(path + ".dest", "unknown node '" + d.dest + "'");
        if (d.key_block_length == 0) error(path + ".key_block_length", "must be > 0");
        if (d.service.type == ServiceType::BestEffort) {
            if (!(d.service.lambda_k > 0)) error(path + ".service.lambda_k", "must be > 0");
            if (!(d.service.sigma_k >= 1)) error(path + ".service.sigma_k", "must be >= 1");
        } else {
            if (!(d.service.bits_per_period > 0))
                error(path + ".service.bits_per_period", "must be > 0");
            if (!(d.service.period > 0)) error(path + ".service.period", "must be > 0");
            if (d.traffic.kind != TrafficPattern::Kind::None)
                warn(path + ".traffic", "ignored for guaranteed-rate service (emission is paced by the contract)");
        }
        if (d.service.type == ServiceType::BestEffort &&
            d.traffic.kind == TrafficPattern::Kind::None)
            warn(path + ".traffic", "best-effort demand without traffic pattern never emits");
        for (double t : d.traffic.times) {
            if (t < 0 || t > s.duration_s) {
                error(path + ".traffic.times", "times must be within [0, duration]");
                break;
            }
        }
    }

    for (std::size_t i = 0; i < s.attacks.size(); ++i) {
        const std::string path = "attacks[" + std::to_string(i) + "]";
        const AttackSpec& a = s.attacks[i];
        if (a.time < 0 || a.time > s.duration_s)
            error(path + ".time", "must be within [0, duration]");
        if (!link_ids.count(a.link)) error(path + ".link", "unknown link '" + a.link + "'");
        if (!a.restore && !(a.qber >= 0 && a.qber <= 0.5))
            error(path + ".qber", "must be in [0, 0.5]");
    }

    return issues;
}

void ensure_valid(const Scenario& s) {
    auto issues = validate_scenario(s);
    std::vector<ScenarioIssue> errors;
    for (auto& i : issues)
        if (!i.warning) errors.push_back(i);
    if (!errors.empty()) throw ScenarioError(std::move(errors));
}

namespace {

struct ParamBinding {
    const char* name;
    void (*apply)(Scenario&, double);
};

const ParamBinding kParams[] = {
    {"config.auth_tag_key_bits",
     [](Scenario& s, double v) { s.config.auth_tag_key_bits = static_cast<std::uint32_t>(v); }},
    {"config.max_frame_payload_bits",
     [](Scenario& s, double v) { s.config.max_frame_payload_bits = static_cast<std::uint32_t>(v); }},
    {"config.admission_factor", [](Scenario& s, double v) { s.config.admission_factor = v; }},
    {"config.w_load", [](Scenario& s, double v) { s.config.weights.w_load = v; }},
    {"config.w_cap", [](Scenario& s, double v) { s.config.weights.w_cap = v; }},
    {"config.r_ref", [](Scenario& s, double v) { s.config.weights.r_ref = v; }},
    {"config.k_paths", [](Scenario& s, double v) { s.config.weights.k_paths = static_cast<int>(v); }},
    {"config.flood_delay_s", [](Scenario& s, double v) { s.config.flood_delay_s = v; }},
    {"config.keygen_tick_s", [](Scenario& s, double v) { s.config.keygen_tick_s = v; }},
    {"config.channel_latency_s", [](Scenario& s, double v) { s.config.channel_latency_s = v; }},
    {"config.channel_window",
     [](Scenario& s, double v) { s.config.channel_window = static_cast<std::uint32_t>(v); }},
    {"link.length_km",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.length_km = v;
     }},
    {"link.r0_bps",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.r0_bps = v;
     }},
    {"link.lambda_qkd_km",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.lambda_qkd_km = v;
     }},
    {"link.d_max_km",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.d_max_km = v;
     }},
    {"link.qber",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.qber = v;
     }},
    {"link.qber_threshold",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.qber_threshold = v;
     }},
    {"link.channels",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.profile.num_quantum_channels = static_cast<int>(v);
     }},
    {"link.store_capacity_bits",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.store_capacity_bits = static_cast<std::uint64_t>(v);
     }},
    {"link.latency_s",
     [](Scenario& s, double v) {
         for (auto& l : s.links) l.latency_s = v;
     }},
};

}  // namespace

bool apply_parameter(Scenario& s, const std::string& name, double value) {
    for (const auto& p : kParams) {
        if (name == p.name) {
            p.apply(s, value);
            return true;
        }
    }
    return false;
}

std::vector<std::string> sweepable_parameters() {
    std::vector<std::string> out;
    for (const auto& p : kParams) out.emplace_back(p.name);
    return out;
}

}  // namespace qkdnet
