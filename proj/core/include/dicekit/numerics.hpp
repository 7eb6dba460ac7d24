#pragma once

#include <cmath>
#include <vector>

namespace dicekit {

/// Neumaier-compensated accumulator. Summing path statistics in a fixed
/// index order through this type keeps reductions reproducible to ~1e-12
/// regardless of how the work was scheduled.
class NeumaierSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Regularized lower incomplete gamma P(a, x).
double reg_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double reg_gamma_q(double a, double x);

/// Survival function of the chi-square distribution with dof degrees of freedom.
double chi2_sf(double x, double dof);

/// log Beta(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

/// Partial harmonic-splitting mass integral(0..x) s^(a-1) / (1-s) ds for
/// 0 <= x < 1, a > 0, via the series sum_k x^(a+k) / (a+k).
double harmonic_partial_integral(double a, double x);

/// Moment E[X^n] of X ~ Beta(a, b): prod_{m<n} (a+m)/(a+b+m).
double beta_moment(double a, double b, int n);

/// log Gamma-ratio Dirichlet moment: E[prod s_i^{m_i}] under Dirichlet(alpha).
double dirichlet_moment(const std::vector<double>& alpha, const std::vector<int>& m);

/// Ordinary least-squares slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace dicekit
