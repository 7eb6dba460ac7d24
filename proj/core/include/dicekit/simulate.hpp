#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dicekit/combinatorics.hpp"
#include "dicekit/rates.hpp"
#include "dicekit/statistics.hpp"

namespace dicekit {

/// One step of the graphical construction: either a single-chain move or a
/// coordinated re-roll. Coordinated events that happen to move nothing are
/// still logged (thinning keeps the event stream reproducible).
struct EventRecord {
    enum class Kind { individual, coordinated };
    double time = 0.0;
    Kind kind = Kind::individual;
    int particle = -1; // individual events
    int from = -1;
    int to = -1;
    std::vector<int> outcome; // coordinated events: post-event states, all chains
    bool changed = false;
};

struct Trajectory {
    int d = 0;
    Config x0;
    double horizon = 0.0;
    double epsilon = 0.0;
    double truncation_mass = 0.0;      // nu(V_d^eps)
    double truncation_tail = 0.0;      // integral of sum(1-u_ii) off V_d^eps
    std::vector<EventRecord> events;
    Config final_state;

    /// Right-continuous state at time t (events at exactly t applied).
    Config state_at(double t) const;
};

struct SimulationSpec {
    Config x0;
    DiceParams params;
    double horizon = 1.0;
    double epsilon = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0; // path index; distinct streams are independent
};

/// Simulate the n-chain system by the graphical construction with the
/// coordination measure truncated to V_d^eps. Deterministic given (seed, stream).
Trajectory simulate_graphical(const SimulationSpec& spec);

/// Keep the first m chains: individual events of chains > m are removed,
/// coordinated events keep their first m outcomes.
Trajectory restrict_trajectory(const Trajectory& t, int m);

/// Final configuration only; same law and same draws as simulate_graphical,
/// without storing events. For large-n sweeps.
Config simulate_endpoint(const SimulationSpec& spec);

/// Chi-square comparison of the time-T law of restrict(simulate(n)) against
/// simulate(m), both started from x0 (restricted for the m-run), plus exact
/// goodness-of-fit sides from the m-chain generator when d^m is buildable.
/// Supplying params_m != params is the designed-inconsistent negative control.
DistributionTestReport consistency_statistical_test(
    const DiceParams& params, const Config& x0, int m, double horizon, std::int64_t paths,
    std::uint64_t seed, double epsilon = 1e-3,
    const std::optional<DiceParams>& params_m = std::nullopt);

/// Piecewise-constant empirical frequency path: (time, counts/n) at 0 and
/// after every state-changing event.
std::vector<std::pair<double, std::vector<double>>> empirical_frequency(const Trajectory& t);

} // namespace dicekit
