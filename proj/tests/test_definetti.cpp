#include <doctest.h>

#include <cmath>
#include <vector>

#include "dicekit/definetti.hpp"
#include "dicekit/errors.hpp"
#include "family_zoo.hpp"
#include "test_support.hpp"

using namespace dicekit;

namespace {

/// RK4 integration of dR/dt = (A*)^T R, an oracle independent of the
/// matrix-exponential path used by the library.
FrequencyState rk4_drift(const FrequencyState& r0, const RateMatrixA& a, double t, int steps) {
    const int d = a.dim();
    auto deriv = [&](const FrequencyState& r) {
        FrequencyState out(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                // flow j -> i at a_ji, flow i -> j at a_ij
                out[static_cast<std::size_t>(i)] += a(j, i) * r[static_cast<std::size_t>(j)];
                out[static_cast<std::size_t>(i)] -= a(i, j) * r[static_cast<std::size_t>(i)];
            }
        return out;
    };
    FrequencyState r = r0;
    double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        auto k1 = deriv(r);
        FrequencyState tmp(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) tmp[i] = r[i] + 0.5 * h * k1[i];
        auto k2 = deriv(tmp);
        for (std::size_t i = 0; i < r.size(); ++i) tmp[i] = r[i] + 0.5 * h * k2[i];
        auto k3 = deriv(tmp);
        for (std::size_t i = 0; i < r.size(); ++i) tmp[i] = r[i] + h * k3[i];
        auto k4 = deriv(tmp);
        for (std::size_t i = 0; i < r.size(); ++i)
            r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return r;
}

DiceParams symmetric2(double rate, const CoordinationMeasure& nu) {
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    p.a.set(0, 1, rate);
    p.a.set(1, 0, rate);
    p.nu = nu;
    return p;
}

} // namespace

TEST_CASE("frequency validation clamps dust and rejects real negatives") {
    FrequencyState ok = {0.25, 0.75};
    CHECK_FALSE(validate_frequency(ok));
    FrequencyState dust = {1.0 + 1e-13, -1e-13};
    validate_frequency(dust);
    CHECK(dust[1] == 0.0);
    FrequencyState bad = {1.0, -1e-9};
    CHECK_THROWS_AS(validate_frequency(bad), numeric_error);
    FrequencyState off = {0.6, 0.6};
    CHECK_THROWS_AS(validate_frequency(off), validation_error);
}

TEST_CASE("drift flow matches the symmetric two-type closed form") {
    auto p = symmetric2(1.3, ZeroMeasure{});
    FrequencyState r0 = {0.8, 0.2};
    for (double t : {0.1, 0.5, 2.0}) {
        auto r = drift_flow(r0, p.a, t);
        double expect = 0.5 + 0.3 * std::exp(-2.0 * 1.3 * t);
        CHECK(r[0] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(r[0] + r[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("drift flow matches RK4 for a general three-type rate matrix") {
    auto a = testsup::demo_rate_matrix(3);
    FrequencyState r0 = {0.5, 0.3, 0.2};
    auto exact = drift_flow(r0, a, 0.8);
    auto numeric = rk4_drift(r0, a, 0.8, 4000);
    for (int i = 0; i < 3; ++i)
        CHECK(exact[static_cast<std::size_t>(i)] ==
              doctest::Approx(numeric[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("coordination jumps apply the transposed matrix to the frequencies") {
    auto u = testsup::mat2(0.6, 0.4, 0.1, 0.9);
    FrequencyState r = {0.7, 0.3};
    auto after = coordination_jump(r, u);
    CHECK(after[0] == doctest::Approx(0.6 * 0.7 + 0.1 * 0.3).epsilon(1e-14));
    CHECK(after[1] == doctest::Approx(0.4 * 0.7 + 0.9 * 0.3).epsilon(1e-14));
    CHECK(after[0] + after[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("the all-half atom freezes the frequency path exactly") {
    AtomicMeasure half;
    half.atoms.push_back({2.0, testsup::mat2(0.5, 0.5, 0.5, 0.5)});
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2); // no drift
    p.nu = half;
    auto path = simulate_frequency_sde({0.8, 0.2}, p, 4.0, 1e-3, 21);
    REQUIRE(!path.jump_times.empty());
    for (const auto& state : path.post_jump) {
        CHECK(state[0] == 0.5); // exact, not approximate
        CHECK(state[1] == 0.5);
    }
    CHECK(path.at(4.0)[0] == 0.5);
    double first = path.jump_times.front();
    CHECK(path.at(first * 0.5)[0] == 0.8); // untouched before the first jump
}

TEST_CASE("jump counts follow the truncated mass") {
    AtomicMeasure atomic;
    atomic.atoms.push_back({1.7, testsup::mat2(0, 1, 1, 0)});
    DiceParams p = symmetric2(0.5, atomic);
    testsup::MeanAccumulator jumps;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        auto path = simulate_frequency_sde({0.6, 0.4}, p, 2.0, 1e-3, 77, s);
        jumps.add(static_cast<double>(path.jump_times.size()));
    }
    CHECK(std::abs(jumps.mean - 1.7 * 2.0) < 4.0 * jumps.se());
}

TEST_CASE("mean frequency solves the first-moment equation") {
    // Against Monte Carlo over SDE paths, for a measure with a nontrivial
    // mean jump matrix.
    AtomicMeasure atomic;
    atomic.atoms.push_back({0.8, testsup::mat2(0.6, 0.4, 0.3, 0.7)});
    DiceParams p = symmetric2(0.4, atomic);
    FrequencyState r0 = {0.9, 0.1};
    auto exact = mean_frequency(r0, p, 1.2);
    testsup::MeanAccumulator first;
    for (std::uint64_t s = 0; s < 20000; ++s) {
        auto path = simulate_frequency_sde(r0, p, 1.2, 1e-6, 3131, s);
        first.add(path.at(1.2)[0]);
    }
    CHECK(std::abs(first.mean - exact[0]) < 4.0 * first.se() + 1e-4);
    CHECK(exact[0] + exact[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generator application on monomials, fully hand-computed swap case") {
    // Swap atom with weight c and no drift, f(r) = r1 r2: the jump moves
    // (r1, r2) to (r2, r1), so A f = c (r2 r1 - r1 r2) = 0.
    AtomicMeasure swap;
    swap.atoms.push_back({1.5, testsup::mat2(0, 1, 1, 0)});
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    p.nu = swap;
    CHECK(generator_apply({1, 1}, {0.3, 0.7}, p) == doctest::Approx(0.0).epsilon(1e-12));
    // f(r) = r1: A f = c (r2 - r1).
    CHECK(generator_apply({1, 0}, {0.3, 0.7}, p) ==
          doctest::Approx(1.5 * (0.7 - 0.3)).epsilon(1e-12));
    // f(r) = r1^2: A f = c (r2^2 - r1^2).
    CHECK(generator_apply({2, 0}, {0.3, 0.7}, p) ==
          doctest::Approx(1.5 * (0.49 - 0.09)).epsilon(1e-12));
}

TEST_CASE("generator application handles drift terms exactly") {
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    p.a.set(0, 1, 0.7);
    p.a.set(1, 0, 0.2);
    // f(r) = r1: dR1/dt = a21 r2 - a12 r1, so A f = 0.2 r2 - 0.7 r1.
    FrequencyState r = {0.4, 0.6};
    CHECK(generator_apply({1, 0}, r, p) ==
          doctest::Approx(0.2 * 0.6 - 0.7 * 0.4).epsilon(1e-12));
    // f(r) = r1 r2: product rule.
    double expect = (0.2 * 0.6 - 0.7 * 0.4) * 0.6 + (0.7 * 0.4 - 0.2 * 0.6) * 0.4;
    CHECK(generator_apply({1, 1}, r, p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dual rates reproduce the swap-atom example and keep identity outcomes") {
    AtomicMeasure swap;
    swap.atoms.push_back({1.5, testsup::mat2(0, 1, 1, 0)});
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    p.nu = swap;
    auto rates = dual_rates({1, 1}, p);
    REQUIRE(rates.size() == 1);
    CHECK(rates[0].target == CountVec{1, 1}); // both particles relabel, b unchanged
    CHECK(rates[0].rate == doctest::Approx(1.5));
}

TEST_CASE("dual single moves run at b_i a_ji") {
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    p.a.set(0, 1, 0.9);
    p.a.set(1, 0, 0.9); // balanced
    p.nu = ZeroMeasure{};
    auto rates = dual_rates({2, 1}, p);
    double to_12 = 0.0; // b - e1 + e2 = (1,2)
    double to_30 = 0.0; // b - e2 + e1 = (3,0)
    for (const auto& t : rates) {
        if (t.target == CountVec{1, 2}) to_12 += t.rate;
        if (t.target == CountVec{3, 0}) to_30 += t.rate;
    }
    CHECK(to_12 == doctest::Approx(2.0 * 0.9));
    CHECK(to_30 == doctest::Approx(1.0 * 0.9));
}

TEST_CASE("dual preconditions are enforced by name") {
    DiceParams unbalanced;
    unbalanced.d = 2;
    unbalanced.a = RateMatrixA(2);
    unbalanced.a.set(0, 1, 1.0); // a21 = 0: not balanced
    unbalanced.nu = ZeroMeasure{};
    CHECK(testsup::throws_containing<validation_error>(
        [&] { dual_rates({1, 0}, unbalanced); }, "balance"));

    DiceParams skew;
    skew.d = 2;
    skew.a = RateMatrixA(2);
    AtomicMeasure bad;
    bad.atoms.push_back({1.0, testsup::mat2(0.6, 0.4, 0.3, 0.7)});
    skew.nu = bad;
    CHECK(testsup::throws_containing<validation_error>(
        [&] { dual_rates({1, 0}, skew); }, "doubly stochastic"));
}

TEST_CASE("generator duality identity holds across the doubly stochastic zoo") {
    // <A f_b(r)> computed through moments equals the dual-rate form
    // sum_K rate (r^{b'} - r^b) for every small b and several r.
    for (int d : {2, 3}) {
        for (const auto& named : testsup::doubly_stochastic_zoo(d)) {
            DiceParams p;
            p.d = d;
            p.a = testsup::balanced_rate_matrix(d);
            p.nu = named.nu;
            std::vector<FrequencyState> rs;
            if (d == 2)
                rs = {{0.5, 0.5}, {0.85, 0.15}, {0.2, 0.8}};
            else
                rs = {{0.4, 0.35, 0.25}, {0.7, 0.2, 0.1}, {0.15, 0.5, 0.35}};
            for (int total = 1; total <= 3; ++total) {
                for (const auto& b : enumerate_compositions(total, d)) {
                    auto rates = dual_rates(b, p);
                    for (const auto& r : rs) {
                        auto mono = [&](const CountVec& e) {
                            double v = 1.0;
                            for (int i = 0; i < d; ++i)
                                v *= std::pow(r[static_cast<std::size_t>(i)],
                                              e[static_cast<std::size_t>(i)]);
                            return v;
                        };
                        double rhs = 0.0;
                        for (const auto& tr : rates) rhs += tr.rate * (mono(tr.target) - mono(b));
                        double lhs = generator_apply(b, r, p);
                        INFO("family ", named.name, " d=", d);
                        CHECK(std::abs(lhs - rhs) <= 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("dual simulation is deterministic and conserves particle count for doubly stochastic families") {
    AtomicMeasure swap;
    swap.atoms.push_back({1.0, testsup::mat2(0, 1, 1, 0)});
    DiceParams p = symmetric2(1.0, swap);
    auto d1 = simulate_dual({2, 1}, p, 3.0, 17, 4);
    auto d2 = simulate_dual({2, 1}, p, 3.0, 17, 4);
    CHECK(d1.times == d2.times);
    REQUIRE(d1.states == d2.states);
    for (const auto& s : d1.states) CHECK(s[0] + s[1] == 3);
}

TEST_CASE("moment duality holds in the drift-only closed-form case") {
    DiceParams p = symmetric2(1.0, ZeroMeasure{});
    auto rep = moment_duality_check({0.8, 0.2}, {1, 0}, 0.5, p, 20000, 99);
    double exact = 0.5 + 0.3 * std::exp(-1.0);
    CHECK(rep.pass);
    CHECK(std::abs(rep.lhs - exact) <= 3.0 * (rep.se_lhs + rep.se_rhs) + 1e-12);
    CHECK(std::abs(rep.rhs - exact) <= 3.0 * (rep.se_lhs + rep.se_rhs) + 1e-12);
}

TEST_CASE("rounding frequencies to configurations uses largest remainders") {
    CHECK(counts_of(config_from_frequency({0.61, 0.39}, 10), 2) == CountVec{6, 4});
    CHECK(counts_of(config_from_frequency({0.5, 0.5}, 3), 2) == CountVec{2, 1});
    CHECK(counts_of(config_from_frequency({0.34, 0.33, 0.33}, 3), 3) == CountVec{1, 1, 1});
    CHECK(config_from_frequency({1.0, 0.0}, 4) == Config{0, 0, 0, 0});
}

TEST_CASE("convergence report is structurally sound on a small run") {
    AtomicMeasure atomic;
    atomic.atoms.push_back({0.6, testsup::mat2(0.7, 0.3, 0.3, 0.7)});
    DiceParams p = symmetric2(0.8, atomic);
    auto rep = convergence_check(p, {0.7, 0.3}, {4, 16}, 0.5, 400, 2025);
    REQUIRE(rep.n_list == std::vector<int>{4, 16});
    REQUIRE(rep.w1_distance.size() == 2);
    CHECK(rep.w1_distance[0] > 0.0);
    CHECK(rep.w1_se[0] > 0.0);
    CHECK(std::isfinite(rep.loglog_slope));
}
