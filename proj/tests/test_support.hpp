#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dicekit/errors.hpp"

namespace testsup {

/// Composite Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    double h = (b - a) / (2 * panels);
    double sum = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

/// Dirichlet sampler built on the standard library only, independent of the
/// library's own RNG stack.
inline std::vector<double> std_dirichlet(std::mt19937_64& rng, const std::vector<double>& alpha) {
    std::vector<double> out(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        std::gamma_distribution<double> g(alpha[i], 1.0);
        out[i] = g(rng);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

/// Running mean/variance over scalar samples.
struct MeanAccumulator {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double se() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

/// True when fn() throws E whose message contains the fragment.
template <typename E>
bool throws_containing(const std::function<void()>& fn, const std::string& fragment) {
    try {
        fn();
    } catch (const E& e) {
        return std::string(e.what()).find(fragment) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

} // namespace testsup
