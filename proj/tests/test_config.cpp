#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dicekit/config.hpp"
#include "dicekit/errors.hpp"
#include "dicekit/scenario.hpp"
#include "test_support.hpp"

using namespace dicekit;

namespace {

const char* kConsistencyDoc = R"({
  "schema": 1,
  "scenario": "verify-consistency",
  "d": 2,
  "a": [[0.0, 0.7], [0.4, 0.0]],
  "nu": {"family": "atomic", "atoms": [
    {"weight": 0.5, "matrix": [[0.9, 0.1], [0.2, 0.8]]}
  ]},
  "n_max": 3
})";

const char* kSimulateDoc = R"({
  "scenario": "simulate-dice",
  "d": 2,
  "a": [[0.0, 1.0], [1.0, 0.0]],
  "nu": {"family": "dirichlet-splitting", "eta": [1.5, 2.0],
         "groups": [{"members": [1, 2], "weight": 0.6}]},
  "x0": [1, 2, 1],
  "horizon": 2.0,
  "seed": 42
})";

} // namespace

TEST_CASE("configs parse with defaults and 1-based indices convert down") {
    auto cfg = parse_config(kConsistencyDoc);
    CHECK(cfg.scenario == "verify-consistency");
    CHECK(cfg.params.d == 2);
    CHECK(cfg.params.a(0, 1) == 0.7);
    CHECK(cfg.n_max == 3);
    CHECK(cfg.epsilon == 1e-3);
    CHECK(!cfg.seed.has_value());
    CHECK(cfg.out_dir == "out");
    CHECK_FALSE(cfg.out_from_config);

    auto sim = parse_config(kSimulateDoc);
    CHECK(sim.x0 == Config{0, 1, 0});
    CHECK(sim.seed.has_value());
    CHECK(*sim.seed == 42);
    const auto* dsp = std::get_if<DirichletSplitting>(&sim.params.nu);
    REQUIRE(dsp != nullptr);
    CHECK(dsp->groups.at(0).members == std::vector<int>{0, 1});
}

TEST_CASE("unknown keys are rejected with their full path") {
    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({"scenario": "verify-consistency", "d": 2, "bogus": 1})");
        },
        "bogus"));
    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({"scenario": "verify-consistency", "d": 2,
                             "nu": {"family": "atomic",
                                    "atoms": [{"weight": 1.0,
                                               "matrix": [[1.0,0.0],[0.0,1.0]],
                                               "colour": 3}]}})");
        },
        "nu.atoms[0].colour"));
    // Keys belonging to a different scenario count as unknown here.
    CHECK(testsup::throws_containing<config_error>(
        [] { parse_config(R"({"scenario": "verify-consistency", "d": 2, "x0": [1]})"); },
        "x0"));
}

TEST_CASE("structural errors carry readable messages") {
    CHECK(testsup::throws_containing<config_error>(
        [] { parse_config("{"); }, "not valid JSON"));
    CHECK(testsup::throws_containing<config_error>(
        [] { parse_config(R"({"schema": 2, "scenario": "coalescent", "d": 1})"); },
        "schema"));
    CHECK(testsup::throws_containing<config_error>(
        [] { parse_config(R"({"scenario": "fly-to-moon", "d": 2})"); }, "scenario"));
    CHECK(testsup::throws_containing<config_error>(
        [] { parse_config(R"({"scenario": "verify-consistency"})"); }, "d"));
    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({"scenario": "simulate-dice", "d": 2, "horizon": 1.0})");
        },
        "x0"));
    // States outside 1..d are range errors, caught at parse time.
    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({"scenario": "simulate-dice", "d": 2, "x0": [0], "horizon": 1.0})");
        },
        "x0"));
    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({"scenario": "duality-check", "d": 2, "r0": [0.5, 0.6],
                             "b0": [1, 0], "horizon": 1.0, "paths": 10})");
        },
        "r0"));
}

TEST_CASE("coalescence rho accepts a diagonal and rejects cross-type matrices") {
    auto cfg = parse_config(R"({
        "scenario": "coalescent", "d": 2,
        "coalescence": {"rho": [[1.0, 0.0], [0.0, 2.0]]},
        "partition": "1:1|2:2", "horizon": 1.0, "seed": 7})");
    CHECK(cfg.coal.rho == std::vector<double>{1.0, 2.0});

    CHECK(testsup::throws_containing<config_error>(
        [] {
            parse_config(R"({
                "scenario": "coalescent", "d": 2,
                "coalescence": {"rho": [[1.0, 0.5], [0.5, 2.0]]},
                "partition": "1:1|2:2", "horizon": 1.0})");
        },
        "rho must be diagonal"));
}

TEST_CASE("resolved config is canonical and omits the output directory") {
    auto a = parse_config(kSimulateDoc);
    auto b = parse_config(kSimulateDoc);
    b.out_dir = "/tmp/somewhere-else";
    CHECK(resolved_config_json(a) == resolved_config_json(b));
    CHECK(scenario_hash(a) == scenario_hash(b));
    CHECK(scenario_hash(a).size() == 16);

    auto c = parse_config(kSimulateDoc);
    c.horizon = 3.0;
    CHECK(scenario_hash(a) != scenario_hash(c));

    // Resolved form spells out defaults, so a minimal and an explicit
    // document with equal content hash identically.
    auto lean = parse_config(R"({"scenario": "verify-consistency", "d": 2})");
    auto full = parse_config(
        R"({"scenario": "verify-consistency", "d": 2, "n_max": 3,
            "nu": {"family": "zero"}, "epsilon": 0.001})");
    CHECK(resolved_config_json(lean) == resolved_config_json(full));
}

TEST_CASE("scenario names round-trip through the dispatcher") {
    CHECK(scenario_names().size() == 8);
    for (const auto& name : scenario_names()) {
        CHECK(scenario_uses_seed(name) ==
              (name != "verify-consistency" && name != "verify-exchangeability"));
    }
}

TEST_CASE("verification scenarios pass on consistent parameters") {
    auto cfg = parse_config(kConsistencyDoc);
    auto result = run_scenario(cfg);
    CHECK(result.verdict == Verdict::pass);
    REQUIRE(result.artifacts.size() == 1);
    CHECK(result.artifacts[0].first == "result.jsonl");
    CHECK(result.artifacts[0].second.find("\"verdict\":\"pass\"") != std::string::npos);
    CHECK(verdict_exit_code(result.verdict) == 0);
    CHECK(verdict_name(result.verdict) == "pass");
}

TEST_CASE("simulation scenarios demand a seed and reproduce byte for byte") {
    auto cfg = parse_config(kSimulateDoc);
    auto first = run_scenario(cfg);
    auto second = run_scenario(cfg);
    REQUIRE(first.artifacts.size() == second.artifacts.size());
    for (std::size_t i = 0; i < first.artifacts.size(); ++i) {
        CHECK(first.artifacts[i].first == second.artifacts[i].first);
        CHECK(first.artifacts[i].second == second.artifacts[i].second);
    }
    std::vector<std::string> names;
    for (const auto& [name, text] : first.artifacts) names.push_back(name);
    CHECK(names == std::vector<std::string>{"result.jsonl", "trajectory.csv", "events.jsonl"});

    auto no_seed = cfg;
    no_seed.seed.reset();
    CHECK_THROWS_AS(run_scenario(no_seed), config_error);

    auto reseeded = cfg;
    reseeded.seed = 43;
    auto third = run_scenario(reseeded);
    CHECK(third.artifacts[0].second != first.artifacts[0].second);
}

TEST_CASE("floats in artifacts are full precision") {
    auto cfg = parse_config(kSimulateDoc);
    cfg.horizon = 0.1 + 0.2; // not representable as a short decimal
    auto result = run_scenario(cfg);
    CHECK(result.artifacts[0].second.find("0.30000000000000004") != std::string::npos);
}

TEST_CASE("artifact writing creates the directory and returns paths") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "dicekit-test-out";
    fs::remove_all(dir);
    ScenarioResult result;
    result.artifacts.emplace_back("result.jsonl", "{}\n");
    result.artifacts.emplace_back("trajectory.csv", "time\n0\n");
    auto paths = write_artifacts(result, dir.string());
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) CHECK(fs::exists(p));
    std::ifstream in(paths[0]);
    std::string line;
    std::getline(in, line);
    CHECK(line == "{}");
    fs::remove_all(dir);
}

TEST_CASE("duality scenario verdicts reflect the statistical outcome") {
    auto cfg = parse_config(R"({
        "scenario": "duality-check", "d": 2,
        "a": [[0.0, 1.0], [1.0, 0.0]],
        "r0": [0.8, 0.2], "b0": [1, 0],
        "horizon": 0.5, "paths": 4000, "seed": 11})");
    auto result = run_scenario(cfg);
    CHECK(result.verdict == Verdict::pass);
    CHECK(result.artifacts[0].second.find("\"lhs_frequency_moment\"") != std::string::npos);
}
