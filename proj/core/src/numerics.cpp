#include "dicekit/numerics.hpp"

#include <cmath>
#include <limits>

#include "dicekit/errors.hpp"

namespace dicekit {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// Series expansion of P(a,x), effective for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw numeric_error("reg_gamma_p: series failed to converge");
}

// Continued fraction for Q(a,x), effective for x >= a + 1 (modified Lentz).
double gamma_q_contfrac(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw numeric_error("reg_gamma_q: continued fraction failed to converge");
}

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw numeric_error("reg_inc_beta: continued fraction failed to converge");
}

} // namespace

double reg_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw validation_error("reg_gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double reg_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw validation_error("reg_gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi2_sf(double x, double dof) {
    if (!(dof > 0.0)) throw validation_error("chi2_sf: dof must be positive");
    if (x <= 0.0) return 1.0;
    return reg_gamma_q(0.5 * dof, 0.5 * x);
}

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw validation_error("reg_inc_beta: need a, b > 0");
    if (x < 0.0 || x > 1.0) throw validation_error("reg_inc_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    // The continued fraction converges fastest below the mean switch point.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(b, a)) *
                     betacf(b, a, 1.0 - x) / b;
}

double harmonic_partial_integral(double a, double x) {
    if (!(a > 0.0)) throw validation_error("harmonic_partial_integral: need a > 0");
    if (x < 0.0 || x >= 1.0)
        throw validation_error("harmonic_partial_integral: need 0 <= x < 1");
    if (x == 0.0) return 0.0;
    // sum_k x^(a+k)/(a+k); terms decay geometrically with ratio x.
    double term = std::pow(x, a);
    double denom = a;
    NeumaierSum sum;
    for (int k = 0; k < 2'000'000; ++k) {
        sum.add(term / denom);
        term *= x;
        denom += 1.0;
        if (term / denom < kEps * std::max(1.0, sum.value())) {
            sum.add(term / denom / (1.0 - x)); // geometric tail bound as remainder
            return sum.value();
        }
    }
    throw numeric_error("harmonic_partial_integral: series failed to converge");
}

double beta_moment(double a, double b, int n) {
    if (!(a > 0.0) || !(b > 0.0)) throw validation_error("beta_moment: need a, b > 0");
    if (n < 0) throw validation_error("beta_moment: need n >= 0");
    double r = 1.0;
    for (int m = 0; m < n; ++m) r *= (a + m) / (a + b + m);
    return r;
}

double dirichlet_moment(const std::vector<double>& alpha, const std::vector<int>& m) {
    if (alpha.size() != m.size())
        throw validation_error("dirichlet_moment: alpha/m size mismatch");
    double a0 = 0.0;
    int m0 = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0)) throw validation_error("dirichlet_moment: alpha > 0 required");
        if (m[i] < 0) throw validation_error("dirichlet_moment: exponents must be >= 0");
        a0 += alpha[i];
        m0 += m[i];
    }
    // Rising-factorial form of Gamma(a0)/Gamma(a0+m0) * prod Gamma(a_i+m_i)/Gamma(a_i);
    // exact products avoid lgamma cancellation for the small integer exponents used here.
    double num = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < m[i]; ++k) num *= alpha[i] + k;
    double den = 1.0;
    for (int k = 0; k < m0; ++k) den *= a0 + k;
    return num / den;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("ols_slope: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw validation_error("ols_slope: degenerate abscissa");
    return sxy / sxx;
}

} // namespace dicekit
