#pragma once

#include <cstdint>
#include <vector>

#include "dicekit/combinatorics.hpp"
#include "dicekit/measures.hpp"
#include "dicekit/rates.hpp"

namespace dicekit {

/// Point on the simplex: nonnegative entries summing to 1 within 1e-12.
using FrequencyState = std::vector<double>;

/// Validates r in place. Entries below -1e-12 are bugs (numeric_error);
/// entries in [-1e-12, 0) are clamped to 0. Returns true when clamping moved
/// an entry by more than 1e-15 (callers may log it).
bool validate_frequency(FrequencyState& r);

/// Transpose of the individual-rate matrix (dual single moves run at a_ji).
RateMatrixA transposed(const RateMatrixA& a);

/// Exact flow of dR/dt = sum_j (a_ji R_j - a_ij R_i), via the matrix
/// exponential of the conservative rate matrix.
FrequencyState drift_flow(const FrequencyState& r, const RateMatrixA& a, double dt);

/// Jump r -> U^T r.
FrequencyState coordination_jump(const FrequencyState& r, const StochasticMatrix& u);

/// Piecewise-deterministic frequency path: drift between Poisson(nu(V_d^eps))
/// jump times, U^T-jumps at them.
struct FrequencyPath {
    RateMatrixA a;
    FrequencyState r0;
    double horizon = 0.0;
    double epsilon = 0.0;
    double jump_rate = 0.0; // nu(V_d^eps)
    std::vector<double> jump_times;
    std::vector<FrequencyState> post_jump; // state right after each jump

    FrequencyState at(double t) const;
};

FrequencyPath simulate_frequency_sde(const FrequencyState& r0, const DiceParams& p, double horizon,
                                     double epsilon, std::uint64_t seed, std::uint64_t stream = 0);

/// Exact E[R(t)] for the untruncated dynamics: the first-moment ODE driven by
/// A plus the mean jump matrix of nu.
FrequencyState mean_frequency(const FrequencyState& r0, const DiceParams& p, double t);

/// Exact generator value (A f_b)(r) for the monomial f_b(r) = prod r_i^{b_i},
/// via the multinomial expansion of (U^T r)^b and closed-form monomial
/// integrals; finite for every supported family.
double generator_apply(const CountVec& exponents, const FrequencyState& r, const DiceParams& p);

struct DualTransition {
    CountVec target;
    double rate;
};

/// Complete merged outgoing rate list of the moment dual at b: single moves
/// b -> b - e_i + e_j at b_i a_ji, plus coordinated redistributions through
/// every K in S(b) \ {diag(b)} under the transposed measure. Entries whose
/// target equals b are genuine identity outcomes and are kept in the list.
/// Preconditions (balanced A, doubly stochastic support) are enforced.
std::vector<DualTransition> dual_rates(const CountVec& b, const DiceParams& p);

struct DualPath {
    CountVec b0;
    double horizon = 0.0;
    std::vector<double> times;
    std::vector<CountVec> states; // state right after times[k]

    CountVec at(double t) const;
};

DualPath simulate_dual(const CountVec& b0, const DiceParams& p, double horizon,
                       std::uint64_t seed, std::uint64_t stream = 0);

struct DualityReport {
    double lhs = 0.0; // E_r[ prod R_i(t)^{b_i} ]
    double rhs = 0.0; // E_b[ prod r_i^{N_i(t)} ]
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    std::int64_t paths = 0;
    bool pass = false; // |lhs - rhs| <= 3 (se_lhs + se_rhs)
};

DualityReport moment_duality_check(const FrequencyState& r, const CountVec& b, double t,
                                   const DiceParams& p, std::int64_t paths, std::uint64_t seed,
                                   double epsilon = 1e-3);

struct ConvergenceReport {
    std::vector<int> n_list;
    std::vector<double> w1_distance;  // max over coordinates of marginal W1
    std::vector<double> w1_se;        // batch-means standard error
    std::vector<double> mean_abs_diff;
    std::vector<double> second_abs_diff;
    double loglog_slope = 0.0;
    bool nonincreasing = true; // within 3 SE slack between consecutive n
};

/// Compare empirical n-dice frequencies at the horizon against the SDE law,
/// for each n in n_list, by marginal 1-Wasserstein distance.
ConvergenceReport convergence_check(const DiceParams& p, const FrequencyState& r0,
                                    const std::vector<int>& n_list, double horizon,
                                    std::int64_t paths, std::uint64_t seed,
                                    double epsilon = 1e-3);

/// Deterministic configuration of n chains whose counts best match n * r0
/// (largest-remainder rounding); used to start dice runs at the SDE start.
Config config_from_frequency(const FrequencyState& r0, int n);

} // namespace dicekit
