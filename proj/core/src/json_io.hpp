#pragma once

#include <string>

#include <json.hpp>

namespace dicekit {

struct ScenarioConfig;

namespace detail {

using ojson = nlohmann::ordered_json;

/// Serialize with %.17g floats so every artifact is round-trip exact and
/// byte-stable across runs.
std::string dump_json17(const ojson& j);

/// The resolved config as a JSON tree (defaults applied, stable key order).
ojson resolved_config(const ScenarioConfig& cfg);

} // namespace detail
} // namespace dicekit
