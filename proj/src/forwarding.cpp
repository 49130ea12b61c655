#include "qkdnet/forwarding.hpp"

#include <algorithm>
#include <limits>

namespace qkdnet {

double auth_overhead_fraction(std::uint32_t key_block_length, const Q3pConfig& cfg) {
    const std::uint64_t fragments =
        (static_cast<std::uint64_t>(key_block_length) + cfg.max_frame_payload_bits - 1) /
        cfg.max_frame_payload_bits;
    return static_cast<double>(fragments * cfg.auth_tag_key_bits) /
           static_cast<double>(key_block_length);
}

PathAdmission check_admission(const std::vector<double>& link_effective_rates,
                              const std::vector<double>& link_reserved_rates,
                              double admission_factor, double demanded_rate) {
    PathAdmission out;
    out.min_headroom = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < link_effective_rates.size(); ++i) {
        const double headroom = admission_factor * link_effective_rates[i] - link_reserved_rates[i];
        out.min_headroom = std::min(out.min_headroom, headroom);
    }
    if (link_effective_rates.empty()) out.min_headroom = 0.0;
    out.admissible = demanded_rate <= out.min_headroom;
    return out;
}

std::optional<PickClass> pick_transmittable(const std::deque<QueuedPacket>& guaranteed_queue,
                                            const std::deque<QueuedPacket>& best_effort_queue,
                                            std::uint64_t available_key_bits,
                                            const Q3pConfig& cfg) {
    Q3pSender cost(cfg);
    if (!guaranteed_queue.empty() &&
        cost.message_key_cost(guaranteed_queue.front().payload.size()) <= available_key_bits)
        return PickClass::Guaranteed;
    if (!best_effort_queue.empty() &&
        cost.message_key_cost(best_effort_queue.front().payload.size()) <= available_key_bits)
        return PickClass::BestEffort;
    return std::nullopt;
}

}  // namespace qkdnet
