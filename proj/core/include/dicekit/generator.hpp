#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dicekit/combinatorics.hpp"
#include "dicekit/rates.hpp"

namespace dicekit {

/// Exact generator of the n-chain system on [d]^n. Row/column order follows
/// enumerate_configs(n, d); rows sum to zero by construction.
struct GeneratorMatrix {
    int d = 0;
    int n = 0;
    std::vector<Config> configs;
    Eigen::MatrixXd q;

    std::int64_t index_of(const Config& x) const { return config_index(x, d); }
};

/// Hard cap on the exact state space; larger systems go through the simulator.
inline constexpr std::int64_t kGeneratorStateCap = 4096;

/// Build the d^n x d^n generator from config_rate; diagonal = -row sum.
/// Throws resource_error beyond kGeneratorStateCap states.
GeneratorMatrix build_generator(const DiceParams& p, int n);

/// Result of sweeping the consistency equation
/// gamma_{b,K} = sum_l gamma_{b+e_j, K+E_jl} over all b, K, j.
struct ConsistencyReport {
    double max_residual = 0.0;
    CountVec worst_b;
    CountMatrix worst_k;
    int worst_j = -1;
    long long checked = 0;
};

/// Sweep an arbitrary rate array gamma(b, K); used both for dice parameters
/// and for hand-built arrays in negative controls.
ConsistencyReport consistency_residual(
    const std::function<double(const CountVec&, const CountMatrix&)>& gamma_fn, int d, int n_max);

/// Consistency sweep for the rate array of p, totals 1..n_max.
ConsistencyReport check_consistency_equation(const DiceParams& p, int n_max);

/// Project an n-coordinate generator onto its first m coordinates. Every
/// extension of a source configuration must produce the same projected row
/// within tol, otherwise lumpability_error is thrown.
GeneratorMatrix lumped_generator(const GeneratorMatrix& q, int m, double tol = 1e-9);

/// max over x != y of |Q(x sigma, y sigma) - Q(x, y)| for a permutation of the
/// n coordinate labels. If a partition of the labels is supplied, sigma must
/// preserve each of its classes.
double check_permutation_commutation(
    const GeneratorMatrix& q, const Permutation& sigma,
    const std::optional<std::vector<std::vector<int>>>& initial_partition = std::nullopt);

/// Row p0 * exp(tQ): exact transient distribution at time t.
Eigen::VectorXd transient_distribution(const Eigen::MatrixXd& q, const Eigen::VectorXd& p0,
                                       double t);

/// Write the generator as CSV (header row/column of configuration labels).
std::string generator_to_csv(const GeneratorMatrix& q);

} // namespace dicekit
