#pragma once

#include <functional>

#include "dicekit/combinatorics.hpp"
#include "dicekit/measures.hpp"

namespace dicekit {

/// Parameters of a dice process: individual jump rates A and coordination
/// measure nu on stochastic matrices.
struct DiceParams {
    int d = 0;
    RateMatrixA a;
    CoordinationMeasure nu = ZeroMeasure{};

    /// Checks dimensions, family parameters and finite integrability.
    void validate() const;
};

/// gamma_{b,K} for a proper change K in S(b) \ {diag(b)}:
/// monomial_integral(nu, K) plus a_ij when K = diag(b) - E_ii + E_ij.
double gamma_rate(const DiceParams& p, const CountVec& b, const CountMatrix& k);

/// Rate q(x, y) of the n-chain system between distinct configurations,
/// equal to gamma_rate of counts_from_configs(x, y).
double config_rate(const DiceParams& p, const Config& x, const Config& y);

/// Total outflow rate of configuration x: individual moves plus the
/// coordinated outflow -diag_deficiency(nu, counts(x)).
double total_outflow(const DiceParams& p, const Config& x);

} // namespace dicekit
