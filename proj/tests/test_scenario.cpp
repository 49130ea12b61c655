#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "qkdnet/scenario.hpp"

using namespace qkdnet;

namespace {

const char* kMinimal = R"({
  "duration": 5,
  "seed": 9,
  "topology": {
    "nodes": ["A", "B"],
    "links": [{"id": "AB", "a": "A", "b": "B"}]
  }
})";

const char* kFull = R"({
  "duration": 10,
  "seed": 42,
  "config": {
    "admission_factor": 0.8,
    "w_load": 2.0,
    "sample_interval_s": 0.5,
    "default_qber_threshold": 0.09
  },
  "topology": {
    "nodes": ["A", {"id": "B"}, {"id": "C", "qan": true}],
    "links": [
      {"id": "AB", "a": "A", "b": "B", "r0_bps": 50000, "length_km": 30, "channels": 2},
      {"id": "BC", "a": "B", "b": "C", "qber": 0.05, "latency_s": 0.002}
    ]
  },
  "demands": [
    {
      "time": 1.0, "id": "d1", "source": "A", "dest": "C",
      "key_block_length": 4096,
      "service": {"type": "guaranteed", "bits_per_period": 32000, "period": 2},
      "dest_port": 443
    },
    {
      "time": 2.0, "id": "d2", "source": "C", "dest": "A",
      "service": {"type": "best_effort", "lambda_k": 5, "sigma_k": 3},
      "traffic": {"type": "poisson", "rate": 4}
    }
  ],
  "attacks": [
    {"time": 6.0, "link": "AB", "qber": 0.2},
    {"time": 8.0, "link": "AB", "restore": true}
  ]
})";

bool has_error_at(const std::vector<ScenarioIssue>& issues, const std::string& path) {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const ScenarioIssue& i) { return !i.warning && i.path == path; });
}

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
    Scenario s = parse_scenario(kMinimal);
    CHECK(s.duration_s == 5.0);
    CHECK(s.seed == 9);
    CHECK(s.config.admission_factor == doctest::Approx(0.9));
    CHECK(s.config.auth_tag_key_bits == 128);
    CHECK(s.config.max_frame_payload_bits == 8192);
    CHECK(s.config.default_store_capacity_bits == 100000000ull);
    REQUIRE(s.links.size() == 1);
    CHECK(s.links[0].profile.r0_bps == doctest::Approx(100000.0));
    CHECK(s.links[0].profile.qber_threshold == doctest::Approx(0.11));
    CHECK(s.links[0].latency_s == doctest::Approx(-1.0));
    CHECK(validate_scenario(s).empty());
}

TEST_CASE("full scenario round trips every section") {
    Scenario s = parse_scenario(kFull);
    CHECK(s.config.admission_factor == doctest::Approx(0.8));
    CHECK(s.config.weights.w_load == doctest::Approx(2.0));
    CHECK(s.config.sample_interval_s == doctest::Approx(0.5));

    REQUIRE(s.nodes.size() == 3);
    CHECK(!s.nodes[0].qan);
    CHECK(s.nodes[2].qan);

    REQUIRE(s.links.size() == 2);
    CHECK(s.links[0].profile.num_quantum_channels == 2);
    CHECK(s.links[0].profile.qber_threshold == doctest::Approx(0.09));
    CHECK(s.links[1].profile.qber == doctest::Approx(0.05));
    CHECK(s.links[1].latency_s == doctest::Approx(0.002));

    REQUIRE(s.demands.size() == 2);
    CHECK(s.demands[0].service.type == ServiceType::GuaranteedRate);
    CHECK(s.demands[0].service.nominal_rate() == doctest::Approx(16000.0));
    CHECK(s.demands[0].key_block_length == 4096);
    CHECK(s.demands[0].dest_port == 443);
    CHECK(s.demands[1].service.type == ServiceType::BestEffort);
    CHECK(s.demands[1].traffic.kind == TrafficPattern::Kind::Poisson);
    CHECK(s.demands[1].traffic.rate == doctest::Approx(4.0));

    REQUIRE(s.attacks.size() == 2);
    CHECK(!s.attacks[0].restore);
    CHECK(s.attacks[0].qber == doctest::Approx(0.2));
    CHECK(s.attacks[1].restore);

    CHECK(validate_scenario(s).empty());
}

TEST_CASE("garbage and missing fields raise ScenarioError with paths") {
    CHECK_THROWS_AS(parse_scenario("{nope"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("[1,2]"), ScenarioError);

    try {
        parse_scenario(R"({"topology": {"nodes": ["A"], "links": []}})");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        REQUIRE(!e.issues().empty());
        CHECK(e.issues()[0].path == "$.duration");
    }

    try {
        parse_scenario(R"({"duration": 1, "topology": {"nodes": ["A"],
            "links": [{"id": "L", "a": "A"}]}})");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(has_error_at(e.issues(), "topology.links[0].b"));
    }
}

TEST_CASE("type mismatches are reported per field") {
    try {
        parse_scenario(R"({"duration": "long", "topology": {"nodes": ["A"], "links": []}})");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(has_error_at(e.issues(), "$.duration"));
    }
}

TEST_CASE("validation catches referential and range problems") {
    Scenario s = parse_scenario(kMinimal);

    SUBCASE("duplicate node id") {
        s.nodes.push_back({"A", false});
        CHECK(has_error_at(validate_scenario(s), "topology.nodes[2].id"));
    }
    SUBCASE("duplicate link id") {
        s.links.push_back(s.links[0]);
        CHECK(has_error_at(validate_scenario(s), "topology.links[1].id"));
    }
    SUBCASE("unknown endpoint") {
        s.links[0].node_b = "Z";
        CHECK(has_error_at(validate_scenario(s), "topology.links[0].b"));
    }
    SUBCASE("self loop") {
        s.links[0].node_b = "A";
        CHECK(has_error_at(validate_scenario(s), "topology.links[0]"));
    }
    SUBCASE("bad profile") {
        s.links[0].profile.qber = 0.7;
        CHECK(!validate_scenario(s).empty());
    }
    SUBCASE("bad admission factor") {
        s.config.admission_factor = 1.5;
        CHECK(has_error_at(validate_scenario(s), "config.admission_factor"));
    }
    SUBCASE("zero duration") {
        s.duration_s = 0.0;
        CHECK(has_error_at(validate_scenario(s), "duration"));
    }
}

TEST_CASE("QAN nodes must have exactly one link") {
    Scenario s = parse_scenario(kFull);
    CHECK(validate_scenario(s).empty());
    s.nodes[1].qan = true;  // B has two links
    CHECK(has_error_at(validate_scenario(s), "topology.nodes[1]"));
}

TEST_CASE("duplicate demand ids rejected") {
    Scenario s = parse_scenario(kFull);
    s.demands[1].id = "d1";
    CHECK(has_error_at(validate_scenario(s), "demands[1].id"));
}

TEST_CASE("demand and attack times must lie in the run window") {
    Scenario s = parse_scenario(kFull);
    s.demands[0].time = 11.0;
    s.attacks[0].time = -1.0;
    auto issues = validate_scenario(s);
    CHECK(has_error_at(issues, "demands[0].time"));
    CHECK(has_error_at(issues, "attacks[0].time"));
}

TEST_CASE("over-length link is a warning, not an error") {
    Scenario s = parse_scenario(kMinimal);
    s.links[0].profile.length_km = 150.0;
    auto issues = validate_scenario(s);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].warning);
    CHECK_NOTHROW(ensure_valid(s));

    s.links[0].profile.qber = 0.9;
    CHECK_THROWS_AS(ensure_valid(s), ScenarioError);
}

TEST_CASE("best-effort demand without traffic warns") {
    Scenario s = parse_scenario(kFull);
    s.demands[1].traffic = TrafficPattern{};
    auto issues = validate_scenario(s);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].warning);
    CHECK(issues[0].path == "demands[1].traffic");
}

TEST_CASE("apply_parameter reaches config and link fields") {
    Scenario s = parse_scenario(kFull);
    CHECK(apply_parameter(s, "config.admission_factor", 0.5));
    CHECK(s.config.admission_factor == doctest::Approx(0.5));

    CHECK(apply_parameter(s, "link.length_km", 60.0));
    for (const auto& l : s.links) CHECK(l.profile.length_km == doctest::Approx(60.0));

    CHECK(apply_parameter(s, "link.channels", 4.0));
    for (const auto& l : s.links) CHECK(l.profile.num_quantum_channels == 4);

    CHECK(!apply_parameter(s, "config.no_such_knob", 1.0));

    auto params = sweepable_parameters();
    CHECK(std::find(params.begin(), params.end(), "link.length_km") != params.end());
    CHECK(std::find(params.begin(), params.end(), "config.admission_factor") != params.end());
}

TEST_CASE("load_scenario_file reads from disk and reports missing files") {
    const std::string path = "test_scenario_tmp.json";
    {
        std::ofstream out(path, std::ios::binary);
        out << kMinimal;
    }
    Scenario s = load_scenario_file(path);
    CHECK(s.duration_s == 5.0);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_scenario_file("no/such/file.json"), std::ios_base::failure);
}

TEST_CASE("traffic pattern variants") {
    Scenario s = parse_scenario(R"({
      "duration": 4,
      "topology": {"nodes": ["A", "B"], "links": [{"id": "L", "a": "A", "b": "B"}]},
      "demands": [
        {"time": 0, "id": "p", "source": "A", "dest": "B",
         "service": {"type": "best_effort", "lambda_k": 2, "sigma_k": 2},
         "traffic": {"type": "periodic", "interval": 0.5, "count": 3}},
        {"time": 0, "id": "t", "source": "A", "dest": "B",
         "service": {"type": "best_effort", "lambda_k": 2, "sigma_k": 2},
         "traffic": {"type": "times", "times": [0.5, 1.25, 3.0]}}
      ]
    })");
    CHECK(s.demands[0].traffic.kind == TrafficPattern::Kind::Periodic);
    CHECK(s.demands[0].traffic.interval == doctest::Approx(0.5));
    CHECK(s.demands[0].traffic.count == 3);
    CHECK(s.demands[1].traffic.kind == TrafficPattern::Kind::Times);
    CHECK(s.demands[1].traffic.times == std::vector<double>{0.5, 1.25, 3.0});
    CHECK(validate_scenario(s).empty());

    s.demands[1].traffic.times.push_back(9.0);
    CHECK(has_error_at(validate_scenario(s), "demands[1].traffic.times"));
}

TEST_CASE("unknown service or traffic type is rejected") {
    CHECK_THROWS_AS(parse_scenario(R"({
      "duration": 1,
      "topology": {"nodes": ["A", "B"], "links": [{"id": "L", "a": "A", "b": "B"}]},
      "demands": [{"time": 0, "source": "A", "dest": "B",
                   "service": {"type": "platinum"}}]
    })"),
                    ScenarioError);
}
