#include "qkdnet/routing.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace qkdnet {

std::optional<double> link_cost(const LinkStateRecord& record, const CostWeights& weights) {
    if (record.status == LinkStatus::Down) return std::nullopt;
    const double residual = record.effective_rate - record.reserved_rate;
    if (residual <= 0.0) return std::nullopt;
    return 1.0 + weights.w_load * (1.0 - record.fill_fraction) +
           weights.w_cap * (weights.r_ref / residual);
}

namespace {

// True when path a orders before path b under the tie-break: node-id strings
// element-wise, then link index sequence.
bool lex_before(const RouteEntry& a, const RouteEntry& b, const std::vector<std::string>& ids) {
    const std::size_t n = std::min(a.nodes.size(), b.nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& sa = ids[a.nodes[i]];
        const std::string& sb = ids[b.nodes[i]];
        if (sa != sb) return sa < sb;
    }
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
    return a.links < b.links;
}

struct Adjacency {
    std::uint32_t peer;
    std::uint32_t link;
    double cost;
};

// Single-source min-cost search with the deterministic tie-break. Positive
// link costs (>= 1 by construction) let every node's entry settle before any
// node at strictly greater distance is popped.
std::map<std::uint32_t, RouteEntry> dijkstra(const std::vector<std::vector<Adjacency>>& adj,
                                             const std::vector<std::string>& node_ids,
                                             const std::vector<bool>& stub_node,
                                             std::uint32_t source) {
    const std::size_t n = adj.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<RouteEntry> entry(n);
    std::vector<bool> done(n, false);

    dist[source] = 0.0;
    entry[source].cost = 0.0;
    entry[source].nodes = {source};

    for (std::size_t round = 0; round < n; ++round) {
        std::uint32_t u = 0;
        double best = kInf;
        bool found = false;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (!done[v] && dist[v] < best) {
                best = dist[v];
                u = v;
                found = true;
            }
        }
        if (!found) break;
        done[u] = true;
        if (u != source && stub_node[u]) continue;  // QANs never transit

        for (const Adjacency& edge : adj[u]) {
            const double cand_cost = dist[u] + edge.cost;
            if (cand_cost > dist[edge.peer]) continue;
            RouteEntry cand = entry[u];
            cand.cost = cand_cost;
            cand.nodes.push_back(edge.peer);
            cand.links.push_back(edge.link);
            if (cand_cost < dist[edge.peer] ||
                lex_before(cand, entry[edge.peer], node_ids)) {
                dist[edge.peer] = cand_cost;
                entry[edge.peer] = std::move(cand);
            }
        }
    }

    std::map<std::uint32_t, RouteEntry> out;
    for (std::uint32_t v = 0; v < n; ++v) {
        if (v != source && done[v] && dist[v] < kInf) out.emplace(v, std::move(entry[v]));
    }
    return out;
}

}  // namespace

RoutingTable compute_routes(const std::vector<LinkStateRecord>& view,
                            const std::vector<std::string>& node_ids,
                            const std::vector<bool>& stub_node, std::uint32_t source,
                            const CostWeights& weights) {
    const std::size_t n = node_ids.size();

    auto build_adj = [&](const std::set<std::uint32_t>& excluded_links) {
        std::vector<std::vector<Adjacency>> adj(n);
        for (const LinkStateRecord& rec : view) {
            if (excluded_links.count(rec.link_id)) continue;
            const auto cost = link_cost(rec, weights);
            if (!cost) continue;
            adj[rec.node_a].push_back({rec.node_b, rec.link_id, *cost});
            adj[rec.node_b].push_back({rec.node_a, rec.link_id, *cost});
        }
        return adj;
    };

    RoutingTable table;
    const auto first_pass = dijkstra(build_adj({}), node_ids, stub_node, source);
    for (const auto& [dest, best] : first_pass) {
        std::vector<RouteEntry> candidates{best};
        std::set<std::uint32_t> used(best.links.begin(), best.links.end());
        for (int k = 1; k < weights.k_paths; ++k) {
            const auto pass = dijkstra(build_adj(used), node_ids, stub_node, source);
            auto it = pass.find(dest);
            if (it == pass.end()) break;
            used.insert(it->second.links.begin(), it->second.links.end());
            candidates.push_back(it->second);
        }
        table.routes.emplace(dest, std::move(candidates));
    }
    return table;
}

}  // namespace qkdnet
