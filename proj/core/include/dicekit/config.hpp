#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dicekit/coalescent.hpp"
#include "dicekit/definetti.hpp"
#include "dicekit/rates.hpp"

namespace dicekit {

/// Fully resolved scenario description: parsed document with defaults applied.
struct ScenarioConfig {
    int schema = 1;
    std::string scenario;
    DiceParams params;

    int n = 2;
    int m = 1;
    int n_max = 3;
    std::vector<int> n_list{10, 100, 1000};
    double horizon = 1.0;
    double epsilon = 1e-3;
    std::int64_t paths = 100000;
    FrequencyState r0;
    CountVec b0;
    Config x0;
    CoalescenceSpec coal;
    std::string partition;

    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool out_from_config = false; // whether the config document set "out"

    /// Cross-field validation for the chosen scenario (simplex r0, x0 range,
    /// partition well-formedness, and so on).
    void validate() const;
};

/// Names of all supported scenarios, in dispatch order.
const std::vector<std::string>& scenario_names();

/// Parse a JSON config document. Unknown keys are errors carrying the key
/// path; defaults fill everything else.
ScenarioConfig parse_config(const std::string& text);

/// The fully resolved config as a canonical JSON string (stable key order,
/// defaults included); embedded in every result record.
std::string resolved_config_json(const ScenarioConfig& cfg);

/// FNV-1a hash of the resolved config, as fixed-width hex.
std::string scenario_hash(const ScenarioConfig& cfg);

} // namespace dicekit
