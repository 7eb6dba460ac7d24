#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dicekit/combinatorics.hpp"
#include "dicekit/rates.hpp"
#include "dicekit/statistics.hpp"

namespace dicekit {

/// Partition of {1..n} into typed blocks, ordered by least elements. Elements
/// and types are 0-based internally; serialization is 1-based.
struct TypedPartition {
    std::vector<std::vector<int>> blocks;
    std::vector<int> types;

    int block_count() const { return static_cast<int>(blocks.size()); }
    int element_count() const;
    /// Block types as a configuration, in block order.
    Config block_types() const { return Config(types.begin(), types.end()); }

    /// Sorts elements within blocks and orders blocks by least element.
    void canonicalize();
    void validate(int d) const;

    /// One singleton block per element; types[l] is the type of {l}.
    static TypedPartition singletons(const Config& element_types);

    /// "1,3:2|2:1" with 1-based elements and types.
    std::string serialize() const;
    static TypedPartition parse(const std::string& text, int d);

    /// Keep elements < m, drop emptied blocks, re-canonicalize.
    TypedPartition restricted(int m) const;

    bool operator==(const TypedPartition&) const = default;
};

/// Weighted atom of a merger measure: participation probability per type.
struct CoalescenceAtom {
    double weight = 0.0;
    std::vector<double> u; // length d, entries in [0,1], not all zero
};

/// Per target type: a Kingman coefficient rho_i for binary same-type mergers
/// and an atomic measure Q_i on [0,1]^d for multiple mergers.
struct CoalescenceSpec {
    std::vector<double> rho;
    std::vector<std::vector<CoalescenceAtom>> q;

    void validate(int d) const;
    bool is_zero() const;
};

struct CoalescentParams {
    CoalescenceSpec coal;
    DiceParams dice;

    void validate() const;
};

/// Merge the blocks indexed by J (0-based block indices) into one block of
/// the given type; re-canonicalizes.
TypedPartition coal_apply(const TypedPartition& pi, const std::vector<int>& j, int type);

/// Replace all block types at once.
TypedPartition muta_apply(const TypedPartition& pi, const std::vector<int>& new_types);

/// lambda_{pi,J,i}: rho_i for binary same-type-i mergers plus, per atom of
/// Q_i, weight * prod_k u_k^{participants of type k} (1-u_k)^{bystanders of type k}.
double coal_rate(const TypedPartition& pi, const std::vector<int>& j, int type,
                 const CoalescenceSpec& spec);

/// Rate of switching the block-type vector to new_types: exactly the dice
/// process rate on block types.
double switch_rate(const TypedPartition& pi, const std::vector<int>& new_types,
                   const DiceParams& p);

struct CoalescentEvent {
    double time = 0.0;
    bool merger = false;
    std::vector<int> participants; // merger: block indices before the event
    int merged_type = -1;
    std::vector<int> new_types; // switch: post-event types (pre-event block order)
    bool changed = false;
    TypedPartition state; // state right after this event
};

struct CoalescentTrajectory {
    TypedPartition pi0;
    double horizon = 0.0;
    double epsilon = 0.0;
    std::vector<CoalescentEvent> events;
    TypedPartition final_state;

    TypedPartition at(double t) const;
};

/// Cap on element count (the simulator enumerates merger subsets of blocks).
inline constexpr int kCoalescentElementCap = 12;

CoalescentTrajectory simulate_coalescent(const TypedPartition& pi0,
                                         const CoalescentParams& params, double horizon,
                                         double epsilon, std::uint64_t seed,
                                         std::uint64_t stream = 0);

/// All typed partitions of {1..m} with d types, canonical order; cell layout
/// for the consistency test.
std::vector<TypedPartition> enumerate_typed_partitions(int m, int d);

/// Chi-square comparison of restrict(simulate(pi0), m) against a direct run
/// started from pi0 restricted, at the horizon. params_m overrides the
/// m-level parameters for the designed-inconsistent negative control.
DistributionTestReport coalescent_consistency_test(
    const TypedPartition& pi0, const CoalescentParams& params, int m, double horizon,
    std::int64_t paths, std::uint64_t seed, double epsilon = 1e-3,
    const std::optional<CoalescentParams>& params_m = std::nullopt);

} // namespace dicekit
