#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkdnet/scenario.hpp"
#include "qkdnet/sim.hpp"
#include "qkdnet/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int report_issues(const std::vector<qkdnet::ScenarioIssue>& issues) {
    bool errors = false;
    for (const auto& i : issues) {
        std::cerr << i.text() << "\n";
        if (!i.warning) errors = true;
    }
    return errors ? kExitValidation : kExitOk;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

qkdnet::TraceLevel parse_trace(const std::string& s) {
    if (s == "none") return qkdnet::TraceLevel::None;
    if (s == "circuit") return qkdnet::TraceLevel::Circuit;
    if (s == "frame") return qkdnet::TraceLevel::Frame;
    throw CLI::ValidationError("--trace", "expected none, circuit, or frame");
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, const std::string& trace,
            std::optional<double> sample_interval) {
    qkdnet::Scenario s = qkdnet::load_scenario_file(scenario_path);
    for (const auto& i : qkdnet::validate_scenario(s))
        if (i.warning) std::cerr << i.text() << "\n";

    qkdnet::RunOptions opts;
    opts.trace = parse_trace(trace);
    opts.seed = seed;
    opts.sample_interval_s = sample_interval;

    qkdnet::Simulation sim(std::move(s), opts);
    sim.run();

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::ios_base::failure("cannot create " + dir.string() + ": " + ec.message());

    write_file(dir / "metrics.json", sim.metrics().to_json());
    if (opts.trace != qkdnet::TraceLevel::None) {
        std::string lines;
        for (const auto& l : sim.trace_lines()) {
            lines += l;
            lines += '\n';
        }
        write_file(dir / "trace.jsonl", lines);
    }
    std::cout << "wrote " << (dir / "metrics.json").string() << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
    qkdnet::Scenario s = qkdnet::load_scenario_file(scenario_path);
    const auto issues = qkdnet::validate_scenario(s);
    const int rc = report_issues(issues);
    if (rc == kExitOk) std::cout << "OK\n";
    return rc;
}

std::vector<double> parse_values(const std::string& csv, std::optional<double> from,
                                 std::optional<double> to, std::optional<double> step) {
    std::vector<double> out;
    if (!csv.empty()) {
        std::size_t pos = 0;
        while (pos <= csv.size()) {
            const std::size_t comma = csv.find(',', pos);
            const std::string tok =
                csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!tok.empty()) out.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    } else if (from && to && step && *step > 0) {
        for (int i = 0;; ++i) {
            const double v = *from + *step * i;
            if (v > *to + 1e-12) break;
            out.push_back(v);
        }
    }
    return out;
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir,
              const std::string& param, const std::string& values_csv,
              std::optional<double> from, std::optional<double> to, std::optional<double> step,
              const std::vector<std::uint64_t>& seeds) {
    qkdnet::Scenario base = qkdnet::load_scenario_file(scenario_path);
    qkdnet::ensure_valid(base);

    qkdnet::SweepSpec spec;
    spec.parameter = param;
    spec.values = parse_values(values_csv, from, to, step);
    spec.seeds = seeds;
    if (spec.values.empty()) {
        std::cerr << "error: no sweep values; use --values or --from/--to/--step\n";
        return kExitValidation;
    }

    std::vector<qkdnet::SweepRow> rows;
    try {
        rows = qkdnet::run_sweep(base, spec);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "sweepable parameters:\n";
        for (const auto& p : qkdnet::sweepable_parameters()) std::cerr << "  " << p << "\n";
        return kExitValidation;
    }

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::ios_base::failure("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "sweep.csv", qkdnet::sweep_csv(param, rows));
    std::cout << "wrote " << (dir / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qkdnet: trusted-relay QKD network simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string trace = "none";
    std::optional<double> sample_interval;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write metrics");
    run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--trace", trace, "trace level: none, circuit, frame");
    run->add_option("--sample-interval", sample_interval, "key-store sampling period (seconds)");

    CLI::App* validate = app.add_subcommand("validate", "check a scenario without running it");
    validate->add_option("--scenario", scenario_path, "scenario JSON file")->required();

    std::string param, values_csv;
    std::optional<double> from, to, step;
    std::vector<std::uint64_t> seeds;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep and write a CSV");
    sweep->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--param", param, "parameter name, e.g. link.length_km")->required();
    sweep->add_option("--values", values_csv, "comma-separated values");
    sweep->add_option("--from", from, "range start");
    sweep->add_option("--to", to, "range end (inclusive)");
    sweep->add_option("--step", step, "range step");
    sweep->add_option("--seeds", seeds, "seeds, one run per (value, seed)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_path, out_dir, seed, trace, sample_interval);
        if (validate->parsed()) return cmd_validate(scenario_path);
        if (sweep->parsed())
            return cmd_sweep(scenario_path, out_dir, param, values_csv, from, to, step, seeds);
    } catch (const qkdnet::ScenarioError& e) {
        for (const auto& i : e.issues()) std::cerr << i.text() << "\n";
        return kExitValidation;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
