#pragma once

#include <optional>
#include <string>

namespace qkdnet {

/// Physical profile of a QBB link: one or more parallel quantum channels
/// plus the per-link QBER state that gates secure key extraction.
struct LinkProfile {
    double r0_bps = 100000.0;      // secret-bit rate at zero distance
    double lambda_qkd_km = 15.0;   // exponential scaling length
    double d_max_km = 120.0;       // no key beyond this distance
    double length_km = 0.0;
    int num_quantum_channels = 1;
    double qber = 0.0;             // in [0, 0.5]
    double qber_threshold = 0.11;  // in (0, 0.5); at or above: raw key discarded
};

/// Error message when the profile violates its invariants, nullopt when valid.
std::optional<std::string> validate_profile(const LinkProfile& p);

/// R0 * exp(-length/lambda) for length <= d_max, else 0.
/// Independent of QBER and channel count.
double single_channel_rate(const LinkProfile& p);

/// num_quantum_channels * single_channel_rate while qber < qber_threshold, else 0.
double effective_link_rate(const LinkProfile& p);

}  // namespace qkdnet
