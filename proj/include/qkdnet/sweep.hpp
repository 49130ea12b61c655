#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdnet/scenario.hpp"

namespace qkdnet {

struct SweepSpec {
    std::string parameter;                // see sweepable_parameters()
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;     // empty defaults to {scenario seed}
};

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    double keygen_rate_bps = 0.0;         // network-total generated bits / duration
    std::uint64_t key_bits_generated = 0;
    std::uint64_t key_bits_consumed = 0;
    std::uint64_t circuits_established = 0;
    std::uint64_t circuits_rejected = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t payload_bits_delivered = 0;
};

/// One isolated run per (value, seed); rows come back in grid order
/// regardless of which worker thread ran them. Throws on an unknown
/// parameter name or an invalid derived scenario.
std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec, unsigned threads = 0);

/// Header + one CSV line per row.
std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows);

}  // namespace qkdnet
