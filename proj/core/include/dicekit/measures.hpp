#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "dicekit/combinatorics.hpp"
#include "dicekit/rng.hpp"

namespace dicekit {

/// Row-stochastic d x d matrix. Rows must sum to 1 within 1e-12; sums off by
/// at most 1e-9 are renormalized, anything worse is rejected.
class StochasticMatrix {
public:
    StochasticMatrix() = default;

    /// Build from row-major entries (size d*d), validating/renormalizing rows.
    static StochasticMatrix from_rows(int d, std::vector<double> entries);
    static StochasticMatrix identity(int d);

    int dim() const { return d_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * d_ + j]; }
    const std::vector<double>& data() const { return a_; }

    bool is_doubly_stochastic(double tol = 1e-12) const;
    /// Transpose, revalidated as a stochastic matrix (requires double stochasticity
    /// up to the renormalization tolerance).
    StochasticMatrix transposed_checked() const;

    double min_diagonal() const;
    /// sum_i (1 - u_ii).
    double diagonal_deficit() const;
    /// prod_ij u_ij^{k_ij} with 0^0 = 1.
    double monomial(const CountMatrix& k) const;

private:
    int d_ = 0;
    std::vector<double> a_;
};

/// The zero measure: no coordinated jumps at all.
struct ZeroMeasure {};

/// Finite atomic measure sum_a w_a delta_{U_a}.
struct AtomicMeasure {
    struct Atom {
        double weight;
        StochasticMatrix matrix;
    };
    std::vector<Atom> atoms;
};

/// nu = sum_f c_f delta_{U^(f)} where U^(f) routes every chain at i to f(i):
/// all chains at a state jump to the same place.
struct TotallyDependent {
    struct Term {
        std::vector<int> map; // f: map[i] in 0..d-1
        double weight;
    };
    int d = 0;
    std::vector<Term> terms;
};

/// Stochastic exchange with finite atomic beta_ij: atom (i,j,s,v) keeps a
/// chain at i with probability s, at j with probability v, and swaps the
/// complementary mass between i and j.
struct StochasticExchange {
    struct Atom {
        int i = 0;
        int j = 0;
        double s = 1.0;
        double v = 1.0;
        double weight = 0.0;
    };
    int d = 0;
    std::vector<Atom> atoms;
};

/// Subset J (sorted, |J| >= 2) with weight c_J, shared by the splitting families.
struct GroupWeight {
    std::vector<int> members;
    double weight = 0.0;
};

/// nu_msp: atom per group J; every chain in J re-rolls to j in J with the fixed
/// probability eta_j / eta(J).
struct MultinomialSplitting {
    int d = 0;
    std::vector<double> eta;
    std::vector<GroupWeight> groups;
};

/// nu_dsp: per group J, a Dirichlet(eta_J) draw s shared by all rows in J.
struct DirichletSplitting {
    int d = 0;
    std::vector<double> eta;
    std::vector<GroupWeight> groups;
};

/// nu_hsp: per component (i, J) an infinite measure c_iJ s^(eta_i - 1)/(1-s) ds;
/// chains at i stay with probability s, otherwise move uniformly into J; all
/// other states are unaffected.
struct HarmonicSplitting {
    struct Component {
        int i = 0;
        std::vector<int> targets; // J, sorted, disjoint from i, nonempty
        double weight = 0.0;
    };
    int d = 0;
    std::vector<double> eta;
    std::vector<Component> components;
};

/// nu_iem: per group J, each row i in J draws its own Dirichlet over J with
/// parameters alpha_ij = kappa/|J| (j != i) and alpha_ii = eta_i - kappa(|J|-1)/|J|.
struct InstantExchange {
    int d = 0;
    std::vector<double> eta;
    double kappa = 0.0;
    std::vector<GroupWeight> groups;
};

using CoordinationMeasure =
    std::variant<ZeroMeasure, AtomicMeasure, TotallyDependent, StochasticExchange,
                 MultinomialSplitting, DirichletSplitting, HarmonicSplitting, InstantExchange>;

/// Off-diagonal individual jump rates a_ij >= 0; the diagonal is unused.
class RateMatrixA {
public:
    RateMatrixA() = default;
    explicit RateMatrixA(int d) : d_(d), a_(static_cast<std::size_t>(d) * d, 0.0) {}
    /// Row-major d*d entries; diagonal forced to zero, negatives rejected.
    static RateMatrixA from_entries(int d, const std::vector<double>& entries);

    int dim() const { return d_; }
    double operator()(int i, int j) const {
        return i == j ? 0.0 : a_[static_cast<std::size_t>(i) * d_ + j];
    }
    void set(int i, int j, double v);
    /// Total outflow sum_{j != i} a_ij.
    double row_out(int i) const;
    /// Balance condition sum_{j != i} (a_ij - a_ji) = 0 for every i.
    bool is_balanced(double tol = 1e-12) const;

private:
    int d_ = 0;
    std::vector<double> a_;
};

/// Validate family parameters against the ambient dimension d.
/// Throws validation_error naming the offending component.
void validate_measure(const CoordinationMeasure& nu, int d);

/// integral of sum_i (1 - u_ii) d nu, in closed form per family.
double integrability_value(const CoordinationMeasure& nu);

/// integral of prod_ij u_ij^{k_ij} d nu, in closed form per family.
/// Throws numeric_error for the pure-diagonal monomial of an infinite-mass family.
double monomial_integral(const CoordinationMeasure& nu, const CountMatrix& k);

/// integral of (prod_i u_ii^{b_i} - 1) d nu: finite, <= 0, defined even for
/// infinite-mass families. This is minus the total coordinated outflow rate of
/// a configuration with counts b.
double diag_deficiency(const CoordinationMeasure& nu, const CountVec& b);

/// True iff the measure is (structurally) supported on doubly stochastic matrices.
bool is_doubly_stochastic_supported(const CoordinationMeasure& nu, double tol = 1e-12);

/// True for families representable as finitely many explicit atoms.
bool is_atomic_representable(const CoordinationMeasure& nu);

/// Materialize the finite atom list (Zero/Atomic/TotallyDependent/
/// StochasticExchange/MultinomialSplitting). Throws unsupported_error otherwise.
AtomicMeasure to_atoms(const CoordinationMeasure& nu, int d);

/// Pushforward under U -> U^T. Requires doubly stochastic support (the dual's
/// precondition); the result is materialized as atoms.
AtomicMeasure transpose_pushforward(const CoordinationMeasure& nu, int d);

/// mean jump matrix C with c_ij = integral of u_ij d nu (i != j) and
/// c_ii = -sum_{j != i} c_ij; rows sum to zero. Drives first-moment ODEs.
std::vector<double> mean_jump_matrix(const CoordinationMeasure& nu, int d);

/// nu restricted to V_d^eps = union_i { U : u_ii < 1 - eps }: finite total
/// mass (at most integrability_value / eps) plus an exact conditional sampler.
class TruncatedMeasure {
public:
    double mass() const { return mass_; }
    double epsilon() const { return eps_; }
    bool empty() const { return !(mass_ > 0.0); }
    /// integral of sum_i (1 - u_ii) over the *excluded* near-identity part;
    /// n * this bounds the rate of particle moves the truncation discards.
    double integrability_tail() const { return tail_; }

    /// Draw from nu( . intersect V_d^eps) / nu(V_d^eps). Requires mass() > 0.
    StochasticMatrix sample(RngStream& rng) const;

    struct Component {
        double mass;
        std::function<StochasticMatrix(RngStream&)> draw;
    };

private:
    friend TruncatedMeasure truncate(const CoordinationMeasure& nu, int d, double eps);
    std::vector<Component> comps_;
    std::vector<double> comp_masses_;
    double mass_ = 0.0;
    double eps_ = 0.0;
    double tail_ = 0.0;
};

TruncatedMeasure truncate(const CoordinationMeasure& nu, int d, double eps);

StochasticMatrix sample_truncated(const TruncatedMeasure& t, RngStream& rng);

} // namespace dicekit
