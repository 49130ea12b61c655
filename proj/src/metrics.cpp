#include "qkdnet/metrics.hpp"

#include <charconv>

#include <json.hpp>

namespace qkdnet {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

ordered_json link_json(const LinkMetrics& m) {
    ordered_json j;
    j["key_bits_generated"] = m.key_bits_generated;
    j["key_bits_discarded_overflow"] = m.key_bits_discarded_overflow;
    j["key_bits_consumed_otp"] = m.key_bits_consumed_otp;
    j["key_bits_consumed_auth"] = m.key_bits_consumed_auth;
    j["key_bits_available_end"] = m.key_bits_available_end;
    j["frames_sent"] = m.frames_sent;
    j["messages_sent"] = m.messages_sent;
    j["control_messages"] = m.control_messages;
    j["control_unauth_sends"] = m.control_unauth_sends;
    j["auth_failures"] = m.auth_failures;
    j["reserved_rate_end"] = m.reserved_rate_end;
    j["fill_fraction_end"] = m.fill_fraction_end;
    j["seconds_down"] = m.seconds_down;
    return j;
}

ordered_json circuit_json(const CircuitMetrics& m) {
    ordered_json j;
    j["demand_id"] = m.demand_id;
    j["source"] = m.source;
    j["dest"] = m.dest;
    j["service"] = m.service;
    j["final_state"] = m.final_state;
    j["teardown_reason"] = m.teardown_reason;
    j["established_at"] = m.established_at;
    j["activated_at"] = m.activated_at;
    j["closed_at"] = m.closed_at;
    j["initial_path"] = m.initial_path;
    j["final_path"] = m.final_path;
    j["reroutes"] = m.reroutes;
    j["packets_offered"] = m.packets_offered;
    j["packets_admitted"] = m.packets_admitted;
    j["packets_policed"] = m.packets_policed;
    j["packets_delivered"] = m.packets_delivered;
    j["packets_duplicate_dropped"] = m.packets_duplicate_dropped;
    j["packets_stale_dropped"] = m.packets_stale_dropped;
    j["payload_bits_offered"] = m.payload_bits_offered;
    j["payload_bits_delivered"] = m.payload_bits_delivered;
    j["mean_delay_s"] = m.mean_delay_s();
    j["max_delay_s"] = m.max_delay_s;
    j["delivery_ratio"] = m.delivery_ratio();
    return j;
}

}  // namespace

std::string NetworkMetrics::to_json() const {
    ordered_json j;
    j["duration_s"] = duration_s;
    j["seed"] = seed;
    j["events_processed"] = events_processed;
    j["floods"] = floods;

    ordered_json lj = ordered_json::object();
    for (const auto& [id, m] : links) lj[id] = link_json(m);
    j["links"] = std::move(lj);

    ordered_json cj = ordered_json::object();
    for (const auto& [id, m] : circuits) cj[std::to_string(id)] = circuit_json(m);
    j["circuits"] = std::move(cj);

    ordered_json rj = ordered_json::array();
    for (const auto& r : rejections) {
        ordered_json e;
        e["time"] = r.time;
        e["demand_id"] = r.demand_id;
        e["reason"] = r.reason;
        e["best_available_rate"] = r.best_available_rate;
        rj.push_back(std::move(e));
    }
    j["rejections"] = std::move(rj);

    ordered_json sj = ordered_json::array();
    for (const auto& s : samples) {
        ordered_json e;
        e["time"] = s.time;
        ordered_json fills = ordered_json::object();
        for (const auto& [id, v] : s.link_fill) fills[id] = v;
        e["link_fill"] = std::move(fills);
        ordered_json avail = ordered_json::object();
        for (const auto& [id, v] : s.link_available_bits) avail[id] = v;
        e["link_available_bits"] = std::move(avail);
        sj.push_back(std::move(e));
    }
    j["samples"] = std::move(sj);

    return j.dump(2) + "\n";
}

}  // namespace qkdnet
