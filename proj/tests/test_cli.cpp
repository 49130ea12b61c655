#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run_cmd(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(QKDNET_BIN) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scenario(const char* name) { return fs::path(QKDNET_SCENARIO_DIR) / name; }

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::current_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::istringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        rows.push_back(std::move(cols));
    }
    return rows;
}

}  // namespace

TEST_CASE("run writes metrics.json and exits 0") {
    TempDir tmp("cli_run");
    const int rc = run_cmd("run --scenario " + scenario("ring5.json").string() + " --out " +
                               (tmp.path / "out").string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    const std::string metrics = slurp(tmp.path / "out" / "metrics.json");
    CHECK(!metrics.empty());
    CHECK(metrics.front() == '{');
    CHECK(metrics.find("\"links\"") != std::string::npos);
    CHECK(!fs::exists(tmp.path / "out" / "trace.jsonl"));
}

TEST_CASE("same command twice produces identical metrics bytes") {
    TempDir tmp("cli_det");
    const std::string base =
        "run --scenario " + scenario("ring5.json").string() + " --seed 42 --out ";
    CHECK(run_cmd(base + (tmp.path / "a").string(), tmp.path / "log1") == 0);
    CHECK(run_cmd(base + (tmp.path / "b").string(), tmp.path / "log2") == 0);
    CHECK(slurp(tmp.path / "a" / "metrics.json") == slurp(tmp.path / "b" / "metrics.json"));

    CHECK(run_cmd("run --scenario " + scenario("ring5.json").string() + " --seed 43 --out " +
                      (tmp.path / "c").string(),
                  tmp.path / "log3") == 0);
    CHECK(slurp(tmp.path / "a" / "metrics.json") != slurp(tmp.path / "c" / "metrics.json"));
}

TEST_CASE("trace flag writes trace.jsonl") {
    TempDir tmp("cli_trace");
    const int rc = run_cmd("run --scenario " + scenario("chain3.json").string() +
                               " --trace circuit --out " + (tmp.path / "out").string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    const std::string trace = slurp(tmp.path / "out" / "trace.jsonl");
    CHECK(trace.find("\"ev\":\"establish\"") != std::string::npos);
    CHECK(trace.find("\"ev\":\"teardown\"") != std::string::npos);
}

TEST_CASE("validate accepts the shipped scenarios") {
    TempDir tmp("cli_validate");
    for (const char* name : {"rate_sweep.json", "ring5.json", "chain3.json", "backbone.json"}) {
        const int rc = run_cmd("validate --scenario " + scenario(name).string(), tmp.path / "log");
        CHECK(rc == 0);
        CHECK(slurp(tmp.path / "log").find("OK") != std::string::npos);
    }
}

TEST_CASE("validate rejects bad scenarios with the field path, exit 1") {
    TempDir tmp("cli_invalid");
    {
        std::ofstream out(tmp.path / "bad.json");
        out << R"({"duration": 5, "topology": {"nodes": ["A", "A"],
                   "links": [{"id": "L", "a": "A", "b": "B"}]}})";
    }
    const int rc = run_cmd("validate --scenario " + (tmp.path / "bad.json").string(),
                           tmp.path / "log");
    CHECK(rc == 1);
    const std::string log = slurp(tmp.path / "log");
    CHECK(log.find("topology.nodes[1].id") != std::string::npos);
    CHECK(log.find("topology.links[0].b") != std::string::npos);
}

TEST_CASE("over-length link validates with a warning, exit 0") {
    TempDir tmp("cli_warn");
    {
        std::ofstream out(tmp.path / "long.json");
        out << R"({"duration": 5, "topology": {"nodes": ["A", "B"],
                   "links": [{"id": "L", "a": "A", "b": "B", "length_km": 150}]}})";
    }
    const int rc = run_cmd("validate --scenario " + (tmp.path / "long.json").string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    const std::string log = slurp(tmp.path / "log");
    CHECK(log.find("warning") != std::string::npos);
    CHECK(log.find("OK") != std::string::npos);
}

TEST_CASE("missing scenario file exits 2") {
    TempDir tmp("cli_missing");
    CHECK(run_cmd("run --scenario no/such/scenario.json --out " + tmp.path.string(),
                  tmp.path / "log") == 2);
    CHECK(run_cmd("validate --scenario no/such/scenario.json", tmp.path / "log2") == 2);
}

TEST_CASE("length sweep reproduces the rate curve") {
    TempDir tmp("cli_sweep");
    const int rc = run_cmd("sweep --scenario " + scenario("rate_sweep.json").string() +
                               " --param link.length_km --from 0 --to 120 --step 10 --out " +
                               tmp.path.string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    auto rows = read_csv(tmp.path / "sweep.csv");
    REQUIRE(rows.size() == 14);
    CHECK(rows[0][0] == "parameter");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][2] == "0");  // no --seeds given
        const double l = std::stod(rows[i][1]);
        const double measured = std::stod(rows[i][3]);
        const double expect = 100000.0 * std::exp(-l / 15.0);
        CHECK(std::abs(measured - expect) / expect < 0.005);
    }
}

TEST_CASE("qber sweep gates the rate to zero at the threshold") {
    TempDir tmp("cli_qber");
    const int rc = run_cmd("sweep --scenario " + scenario("rate_sweep.json").string() +
                               " --param link.qber --values 0,0.05,0.1,0.15,0.2 --out " +
                               tmp.path.string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    auto rows = read_csv(tmp.path / "sweep.csv");
    REQUIRE(rows.size() == 6);
    CHECK(std::stod(rows[1][3]) > 0.0);
    CHECK(std::stod(rows[2][3]) > 0.0);
    CHECK(std::stod(rows[3][3]) > 0.0);
    CHECK(std::stod(rows[4][3]) == 0.0);
    CHECK(std::stod(rows[5][3]) == 0.0);
}

TEST_CASE("sweep grid is values x seeds") {
    TempDir tmp("cli_grid");
    const int rc = run_cmd("sweep --scenario " + scenario("rate_sweep.json").string() +
                               " --param link.length_km --values 0,60 --seeds 1 2 3 --out " +
                               tmp.path.string(),
                           tmp.path / "log");
    CHECK(rc == 0);
    auto rows = read_csv(tmp.path / "sweep.csv");
    REQUIRE(rows.size() == 7);
    CHECK(rows[1][2] == "1");
    CHECK(rows[2][2] == "2");
    CHECK(rows[3][2] == "3");
    CHECK(rows[4][1] == rows[5][1]);
}

TEST_CASE("unknown sweep parameter exits 1 and lists the options") {
    TempDir tmp("cli_badparam");
    const int rc = run_cmd("sweep --scenario " + scenario("rate_sweep.json").string() +
                               " --param config.bogus --values 1 --out " + tmp.path.string(),
                           tmp.path / "log");
    CHECK(rc == 1);
    const std::string log = slurp(tmp.path / "log");
    CHECK(log.find("sweepable parameters") != std::string::npos);
    CHECK(log.find("link.length_km") != std::string::npos);
}
