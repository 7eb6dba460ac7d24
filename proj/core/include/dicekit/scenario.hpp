#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dicekit/config.hpp"

namespace dicekit {

enum class Verdict { pass, fail, warn };

std::string verdict_name(Verdict v);

/// Process exit code: pass 0, fail 1, warn 2.
int verdict_exit_code(Verdict v);

/// Everything a scenario run produces, materialized as named artifact
/// contents. Writing them to disk is a separate step, so a run with the same
/// config and seed is byte-for-byte reproducible and directly testable.
struct ScenarioResult {
    Verdict verdict = Verdict::pass;
    std::string summary; // one human-readable line
    std::vector<std::pair<std::string, std::string>> artifacts; // name -> content
};

/// Whether the scenario simulates (and therefore consumes a seed).
bool scenario_uses_seed(const std::string& scenario);

/// Run the scenario named in cfg. Simulation scenarios require cfg.seed.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Create out_dir if needed and write every artifact; returns the paths.
std::vector<std::string> write_artifacts(const ScenarioResult& result,
                                         const std::string& out_dir);

} // namespace dicekit
