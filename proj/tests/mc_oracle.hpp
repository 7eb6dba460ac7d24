#pragma once

// Independent Monte Carlo quadrature for coordination-measure integrals.
// Everything here is rebuilt from the family definitions using only the
// standard library: no dicekit matrix builders, closed forms or RNG are
// involved, so agreement with the library is a genuine two-sided check.

#include <cmath>
#include <random>
#include <vector>

#include "dicekit/combinatorics.hpp"
#include "dicekit/measures.hpp"
#include "test_support.hpp"

namespace testsup {

struct McEstimate {
    double value = 0.0;
    double se = 0.0;
};

namespace detail {

inline double mono_flat(const std::vector<double>& u, int d, const dicekit::CountMatrix& k) {
    double p = 1.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            int e = k(i, j);
            if (e == 0) continue;
            double v = u[static_cast<std::size_t>(i) * d + j];
            if (v == 0.0) return 0.0;
            p *= std::pow(v, e);
        }
    return p;
}

inline std::vector<double> identity_flat(int d) {
    std::vector<double> u(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) u[static_cast<std::size_t>(i) * d + i] = 1.0;
    return u;
}

struct WeightedAtom {
    double w;
    std::vector<double> u;
};

/// Explicit atom lists for the finite families, straight from the definitions.
inline std::vector<WeightedAtom> finite_atoms(const dicekit::CoordinationMeasure& nu, int d) {
    using namespace dicekit;
    std::vector<WeightedAtom> atoms;
    if (std::holds_alternative<ZeroMeasure>(nu)) return atoms;
    if (const auto* m = std::get_if<AtomicMeasure>(&nu)) {
        for (const auto& a : m->atoms) atoms.push_back({a.weight, a.matrix.data()});
        return atoms;
    }
    if (const auto* m = std::get_if<TotallyDependent>(&nu)) {
        for (const auto& t : m->terms) {
            std::vector<double> u(static_cast<std::size_t>(d) * d, 0.0);
            for (int i = 0; i < d; ++i) u[static_cast<std::size_t>(i) * d + t.map[i]] = 1.0;
            atoms.push_back({t.weight, std::move(u)});
        }
        return atoms;
    }
    if (const auto* m = std::get_if<StochasticExchange>(&nu)) {
        for (const auto& a : m->atoms) {
            auto u = identity_flat(d);
            u[static_cast<std::size_t>(a.i) * d + a.i] = a.s;
            u[static_cast<std::size_t>(a.i) * d + a.j] = 1.0 - a.s;
            u[static_cast<std::size_t>(a.j) * d + a.j] = a.v;
            u[static_cast<std::size_t>(a.j) * d + a.i] = 1.0 - a.v;
            atoms.push_back({a.weight, std::move(u)});
        }
        return atoms;
    }
    if (const auto* m = std::get_if<MultinomialSplitting>(&nu)) {
        for (const auto& g : m->groups) {
            double eta_total = 0.0;
            for (int j : g.members) eta_total += m->eta[j];
            auto u = identity_flat(d);
            for (int i : g.members) {
                for (int j = 0; j < d; ++j) u[static_cast<std::size_t>(i) * d + j] = 0.0;
                for (int j : g.members)
                    u[static_cast<std::size_t>(i) * d + j] = m->eta[j] / eta_total;
            }
            atoms.push_back({g.weight, std::move(u)});
        }
        return atoms;
    }
    throw dicekit::unsupported_error("finite_atoms: not a finite family");
}

} // namespace detail

/// Monte Carlo estimate of integral of prod u_ij^{k_ij} d nu. Requires a K
/// for which the integral is finite (any non-diagonal K qualifies).
inline McEstimate mc_monomial(const dicekit::CoordinationMeasure& nu, int d,
                              const dicekit::CountMatrix& k, std::mt19937_64& rng,
                              long long samples) {
    using namespace dicekit;

    if (std::holds_alternative<ZeroMeasure>(nu)) return {0.0, 0.0};

    if (std::holds_alternative<AtomicMeasure>(nu) || std::holds_alternative<TotallyDependent>(nu) ||
        std::holds_alternative<StochasticExchange>(nu) ||
        std::holds_alternative<MultinomialSplitting>(nu)) {
        auto atoms = detail::finite_atoms(nu, d);
        double total = 0.0;
        std::vector<double> weights;
        for (const auto& a : atoms) {
            total += a.w;
            weights.push_back(a.w);
        }
        if (total <= 0.0) return {0.0, 0.0};
        std::discrete_distribution<int> pick(weights.begin(), weights.end());
        MeanAccumulator acc;
        for (long long s = 0; s < samples; ++s)
            acc.add(detail::mono_flat(atoms[static_cast<std::size_t>(pick(rng))].u, d, k));
        return {total * acc.mean, total * acc.se()};
    }

    if (const auto* m = std::get_if<DirichletSplitting>(&nu)) {
        McEstimate out;
        for (const auto& g : m->groups) {
            if (g.weight <= 0.0) continue;
            std::vector<double> alpha;
            for (int j : g.members) alpha.push_back(m->eta[j]);
            MeanAccumulator acc;
            for (long long s = 0; s < samples; ++s) {
                auto draw = std_dirichlet(rng, alpha);
                auto u = detail::identity_flat(d);
                for (int i : g.members) {
                    for (int j = 0; j < d; ++j) u[static_cast<std::size_t>(i) * d + j] = 0.0;
                    for (std::size_t t = 0; t < g.members.size(); ++t)
                        u[static_cast<std::size_t>(i) * d + g.members[t]] = draw[t];
                }
                acc.add(detail::mono_flat(u, d, k));
            }
            out.value += g.weight * acc.mean;
            out.se += g.weight * acc.se();
        }
        return out;
    }

    if (const auto* m = std::get_if<InstantExchange>(&nu)) {
        McEstimate out;
        for (const auto& g : m->groups) {
            if (g.weight <= 0.0) continue;
            const auto sz = static_cast<double>(g.members.size());
            MeanAccumulator acc;
            for (long long s = 0; s < samples; ++s) {
                auto u = detail::identity_flat(d);
                for (int i : g.members) {
                    std::vector<double> alpha;
                    for (int j : g.members)
                        alpha.push_back(j == i ? m->eta[i] - m->kappa * (sz - 1.0) / sz
                                               : m->kappa / sz);
                    auto draw = std_dirichlet(rng, alpha);
                    for (int j = 0; j < d; ++j) u[static_cast<std::size_t>(i) * d + j] = 0.0;
                    for (std::size_t t = 0; t < g.members.size(); ++t)
                        u[static_cast<std::size_t>(i) * d + g.members[t]] = draw[t];
                }
                acc.add(detail::mono_flat(u, d, k));
            }
            out.value += g.weight * acc.mean;
            out.se += g.weight * acc.se();
        }
        return out;
    }

    if (const auto* m = std::get_if<HarmonicSplitting>(&nu)) {
        // Uniform-proposal Monte Carlo of c * s^(eta_i - 1)/(1-s) against the
        // component's matrix; any proper K keeps the integrand bounded.
        McEstimate out;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (const auto& c : m->components) {
            if (c.weight <= 0.0) continue;
            const auto share = static_cast<double>(c.targets.size());
            MeanAccumulator acc;
            for (long long s = 0; s < samples; ++s) {
                double v = unif(rng);
                auto u = detail::identity_flat(d);
                u[static_cast<std::size_t>(c.i) * d + c.i] = v;
                for (int j : c.targets)
                    u[static_cast<std::size_t>(c.i) * d + j] = (1.0 - v) / share;
                double mono = detail::mono_flat(u, d, k);
                acc.add(mono * std::pow(v, m->eta[c.i] - 1.0) / (1.0 - v));
            }
            out.value += c.weight * acc.mean;
            out.se += c.weight * acc.se();
        }
        return out;
    }

    throw dicekit::unsupported_error("mc_monomial: unhandled family");
}

/// Monte Carlo estimate of integral of (prod_i u_ii^{b_i} - 1) d nu.
inline McEstimate mc_diag_deficiency(const dicekit::CoordinationMeasure& nu, int d,
                                     const dicekit::CountVec& b, std::mt19937_64& rng,
                                     long long samples) {
    using namespace dicekit;

    auto diag_power = [&](const std::vector<double>& u) {
        double p = 1.0;
        for (int i = 0; i < d; ++i) {
            if (b[static_cast<std::size_t>(i)] == 0) continue;
            double v = u[static_cast<std::size_t>(i) * d + i];
            p *= std::pow(v, b[static_cast<std::size_t>(i)]);
        }
        return p - 1.0;
    };

    if (std::holds_alternative<ZeroMeasure>(nu)) return {0.0, 0.0};

    if (const auto* m = std::get_if<HarmonicSplitting>(&nu)) {
        // (s^{b_i} - 1)/(1 - s) stays bounded as s -> 1.
        McEstimate out;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (const auto& c : m->components) {
            if (c.weight <= 0.0) continue;
            MeanAccumulator acc;
            int bi = b[static_cast<std::size_t>(c.i)];
            for (long long s = 0; s < samples; ++s) {
                double v = unif(rng);
                acc.add(std::pow(v, m->eta[c.i] - 1.0) * (std::pow(v, bi) - 1.0) / (1.0 - v));
            }
            out.value += c.weight * acc.mean;
            out.se += c.weight * acc.se();
        }
        return out;
    }

    if (const auto* m = std::get_if<DirichletSplitting>(&nu)) {
        McEstimate out;
        for (const auto& g : m->groups) {
            if (g.weight <= 0.0) continue;
            std::vector<double> alpha;
            for (int j : g.members) alpha.push_back(m->eta[j]);
            MeanAccumulator acc;
            for (long long s = 0; s < samples; ++s) {
                auto draw = std_dirichlet(rng, alpha);
                double p = 1.0;
                for (std::size_t t = 0; t < g.members.size(); ++t)
                    p *= std::pow(draw[t], b[static_cast<std::size_t>(g.members[t])]);
                acc.add(p - 1.0);
            }
            out.value += g.weight * acc.mean;
            out.se += g.weight * acc.se();
        }
        return out;
    }

    if (const auto* m = std::get_if<InstantExchange>(&nu)) {
        McEstimate out;
        for (const auto& g : m->groups) {
            if (g.weight <= 0.0) continue;
            const auto sz = static_cast<double>(g.members.size());
            MeanAccumulator acc;
            for (long long s = 0; s < samples; ++s) {
                double p = 1.0;
                for (int i : g.members) {
                    std::vector<double> alpha;
                    for (int j : g.members)
                        alpha.push_back(j == i ? m->eta[i] - m->kappa * (sz - 1.0) / sz
                                               : m->kappa / sz);
                    auto draw = std_dirichlet(rng, alpha);
                    for (std::size_t t = 0; t < g.members.size(); ++t)
                        if (g.members[t] == i)
                            p *= std::pow(draw[t], b[static_cast<std::size_t>(i)]);
                }
                acc.add(p - 1.0);
            }
            out.value += g.weight * acc.mean;
            out.se += g.weight * acc.se();
        }
        return out;
    }

    // Finite atom families: exact mixture sampling.
    auto atoms = detail::finite_atoms(nu, d);
    double total = 0.0;
    std::vector<double> weights;
    for (const auto& a : atoms) {
        total += a.w;
        weights.push_back(a.w);
    }
    if (total <= 0.0) return {0.0, 0.0};
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    MeanAccumulator acc;
    for (long long s = 0; s < samples; ++s)
        acc.add(diag_power(atoms[static_cast<std::size_t>(pick(rng))].u));
    return {total * acc.mean, total * acc.se()};
}

} // namespace testsup
