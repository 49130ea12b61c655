#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qkdnet {

enum class LinkStatus { Up, Down };

/// One link as seen by a node's routing view. Both directions of a link
/// share one record; a Down link advertises no usable rate.
struct LinkStateRecord {
    std::uint32_t link_id = 0;
    std::uint32_t node_a = 0;
    std::uint32_t node_b = 0;
    double effective_rate = 0.0;
    double fill_fraction = 0.0;
    double reserved_rate = 0.0;
    LinkStatus status = LinkStatus::Up;
};

struct CostWeights {
    double w_load = 1.0;
    double w_cap = 1.0;
    double r_ref = 1e4;  // bits/s normalizer for the residual-capacity term
    int k_paths = 2;
};

/// Load-balancing cost of one link: 1 + w_load*(1 - fill) + w_cap*(r_ref/residual)
/// where residual = effective_rate - reserved_rate. Depleted stores and thin
/// residual capacity both push traffic elsewhere. nullopt = Unusable (Down or
/// no residual).
std::optional<double> link_cost(const LinkStateRecord& record, const CostWeights& weights);

struct RouteEntry {
    double cost = 0.0;
    std::vector<std::uint32_t> nodes;  // nodes[0] = source
    std::vector<std::uint32_t> links;  // links[i] connects nodes[i] -> nodes[i+1]
};

/// Per destination, up to k_paths link-disjoint candidates in ascending cost
/// order; unreachable destinations are absent.
struct RoutingTable {
    std::map<std::uint32_t, std::vector<RouteEntry>> routes;

    const RouteEntry* best(std::uint32_t dest) const {
        auto it = routes.find(dest);
        return it == routes.end() || it->second.empty() ? nullptr : &it->second.front();
    }
};

/// Min-cost paths over the node's view. Equal-cost ties go to the
/// lexicographically smallest node-id sequence (then smallest link index
/// sequence, for parallel links). Stub nodes (QANs) never transit. Candidate
/// k+1 is computed with candidate k's links removed.
RoutingTable compute_routes(const std::vector<LinkStateRecord>& view,
                            const std::vector<std::string>& node_ids,
                            const std::vector<bool>& stub_node, std::uint32_t source,
                            const CostWeights& weights);

}  // namespace qkdnet
