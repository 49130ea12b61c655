#include "qkdnet/sweep.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qkdnet/metrics.hpp"
#include "qkdnet/sim.hpp"

namespace qkdnet {

std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec, unsigned threads) {
    {
        Scenario probe = base;
        if (!apply_parameter(probe, spec.parameter, 0.0))
            throw std::invalid_argument("unknown sweep parameter '" + spec.parameter + "'");
    }
    const std::vector<std::uint64_t> seeds =
        spec.seeds.empty() ? std::vector<std::uint64_t>{0} : spec.seeds;

    struct Cell {
        double value;
        std::uint64_t seed;
    };
    std::vector<Cell> grid;
    for (double v : spec.values)
        for (std::uint64_t s : seeds) grid.push_back({v, s});

    std::vector<SweepRow> rows(grid.size());
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= grid.size()) return;
            try {
                Scenario s = base;
                apply_parameter(s, spec.parameter, grid[i].value);
                s.seed = grid[i].seed;
                const NetworkMetrics m = run_scenario(s);
                SweepRow& r = rows[i];
                r.value = grid[i].value;
                r.seed = grid[i].seed;
                for (const auto& [id, lm] : m.links) {
                    r.key_bits_generated += lm.key_bits_generated;
                    r.key_bits_consumed += lm.consumed_total();
                }
                r.keygen_rate_bps =
                    m.duration_s > 0 ? static_cast<double>(r.key_bits_generated) / m.duration_s : 0.0;
                r.circuits_established = m.circuits.size();
                r.circuits_rejected = m.rejections.size();
                for (const auto& [cid, cm] : m.circuits) {
                    r.packets_delivered += cm.packets_delivered;
                    r.payload_bits_delivered += cm.payload_bits_delivered;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    unsigned n = threads ? threads : std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    n = std::min<unsigned>(n, static_cast<unsigned>(grid.size() ? grid.size() : 1));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "parameter,value,seed,keygen_rate_bps,key_bits_generated,key_bits_consumed,"
           "circuits_established,circuits_rejected,packets_delivered,payload_bits_delivered\n";
    for (const SweepRow& r : rows) {
        out << parameter << ',' << format_double(r.value) << ',' << r.seed << ','
            << format_double(r.keygen_rate_bps) << ',' << r.key_bits_generated << ','
            << r.key_bits_consumed << ',' << r.circuits_established << ',' << r.circuits_rejected
            << ',' << r.packets_delivered << ',' << r.payload_bits_delivered << '\n';
    }
    return out.str();
}

}  // namespace qkdnet
