#include "qkdnet/link_model.hpp"

#include <cmath>

namespace qkdnet {

std::optional<std::string> validate_profile(const LinkProfile& p) {
    if (!(p.r0_bps > 0)) return "r0_bps must be > 0";
    if (!(p.lambda_qkd_km > 0)) return "lambda_qkd_km must be > 0";
    if (!(p.d_max_km > 0)) return "d_max_km must be > 0";
    if (!(p.length_km >= 0)) return "length_km must be >= 0";
    if (p.num_quantum_channels < 1) return "num_quantum_channels must be >= 1";
    if (!(p.qber >= 0.0 && p.qber <= 0.5)) return "qber must be in [0, 0.5]";
    if (!(p.qber_threshold > 0.0 && p.qber_threshold < 0.5))
        return "qber_threshold must be in (0, 0.5)";
    return std::nullopt;
}

double single_channel_rate(const LinkProfile& p) {
    if (p.length_km > p.d_max_km) return 0.0;
    return p.r0_bps * std::exp(-p.length_km / p.lambda_qkd_km);
}

double effective_link_rate(const LinkProfile& p) {
    if (p.qber >= p.qber_threshold) return 0.0;
    return static_cast<double>(p.num_quantum_channels) * single_channel_rate(p);
}

}  // namespace qkdnet
