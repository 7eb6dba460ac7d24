#include <doctest.h>

#include <cmath>

#include "dicekit/generator.hpp"
#include "dicekit/simulate.hpp"
#include "dicekit/statistics.hpp"
#include "family_zoo.hpp"

using namespace dicekit;

namespace {

DiceParams mixed_params(int d) {
    DiceParams p;
    p.d = d;
    p.a = testsup::demo_rate_matrix(d);
    p.nu = testsup::family_zoo(d)[1].nu; // atomic with two/three atoms
    return p;
}

SimulationSpec make_spec(const Config& x0, const DiceParams& p, double horizon,
                         std::uint64_t seed, std::uint64_t stream = 0) {
    SimulationSpec s;
    s.x0 = x0;
    s.params = p;
    s.horizon = horizon;
    s.epsilon = 1e-3;
    s.seed = seed;
    s.stream = stream;
    return s;
}

} // namespace

TEST_CASE("trajectories are reproducible per seed and vary across streams") {
    auto p = mixed_params(2);
    auto spec = make_spec({0, 1, 0, 1}, p, 2.0, 99);
    auto t1 = simulate_graphical(spec);
    auto t2 = simulate_graphical(spec);
    REQUIRE(t1.events.size() == t2.events.size());
    for (std::size_t i = 0; i < t1.events.size(); ++i) {
        CHECK(t1.events[i].time == t2.events[i].time);
        CHECK(t1.events[i].changed == t2.events[i].changed);
    }
    CHECK(t1.final_state == t2.final_state);

    auto spec3 = make_spec({0, 1, 0, 1}, p, 2.0, 99, 1);
    auto t3 = simulate_graphical(spec3);
    bool differs = t3.events.size() != t1.events.size();
    for (std::size_t i = 0; !differs && i < t1.events.size(); ++i)
        differs = t1.events[i].time != t3.events[i].time;
    CHECK(differs);
}

TEST_CASE("endpoint shortcut reproduces the recorded trajectory endpoint") {
    auto p = mixed_params(3);
    for (std::uint64_t stream = 0; stream < 20; ++stream) {
        auto spec = make_spec({0, 1, 2, 0}, p, 1.5, 31, stream);
        CHECK(simulate_endpoint(spec) == simulate_graphical(spec).final_state);
    }
}

TEST_CASE("state_at replays the event sequence right-continuously") {
    auto p = mixed_params(2);
    auto spec = make_spec({0, 0, 1}, p, 2.0, 7);
    auto t = simulate_graphical(spec);
    CHECK(t.state_at(0.0) == t.x0);
    CHECK(t.state_at(t.horizon) == t.final_state);
    Config cur = t.x0;
    for (const auto& ev : t.events) {
        if (ev.kind == EventRecord::Kind::individual)
            cur[static_cast<std::size_t>(ev.particle)] = ev.to;
        else
            cur = ev.outcome;
        CHECK(t.state_at(ev.time) == cur);
    }
}

TEST_CASE("near-identity coordination atoms are truncated away with a tail bound") {
    DiceParams p;
    p.d = 2;
    p.a = RateMatrixA(2);
    AtomicMeasure atomic;
    atomic.atoms.push_back({3.0, testsup::mat2(0.9995, 0.0005, 0.0005, 0.9995)});
    p.nu = atomic;
    auto spec = make_spec({0, 1}, p, 10.0, 5);
    spec.epsilon = 0.01; // atom diagonal 0.9995 >= 1 - 0.01: excluded
    auto t = simulate_graphical(spec);
    CHECK(t.truncation_mass == 0.0);
    CHECK(t.events.empty());
    CHECK(t.truncation_tail == doctest::Approx(3.0 * 0.001).epsilon(1e-12));

    spec.epsilon = 1e-4; // now the atom survives
    auto t2 = simulate_graphical(spec);
    CHECK(t2.truncation_mass == doctest::Approx(3.0));
    CHECK(!t2.events.empty());
}

TEST_CASE("restriction keeps the prefix marginal of the trajectory") {
    auto p = mixed_params(3);
    auto spec = make_spec({0, 1, 2, 0, 1}, p, 1.0, 77);
    auto full = simulate_graphical(spec);
    auto cut = restrict_trajectory(full, 3);
    REQUIRE(cut.x0.size() == 3);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto a = full.state_at(t);
        auto b = cut.state_at(t);
        for (int i = 0; i < 3; ++i)
            CHECK(a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);
    }
    // Only events that touch the kept chains survive, and their change flags
    // reflect the restricted outcome.
    for (const auto& ev : cut.events) {
        if (ev.kind == EventRecord::Kind::individual) CHECK(ev.particle < 3);
        else CHECK(ev.outcome.size() == 3);
    }
}

TEST_CASE("restricted simulation agrees with direct simulation in law") {
    auto p = mixed_params(2);
    Config x0 = {0, 1, 0, 1};
    auto rep = consistency_statistical_test(p, x0, 2, 0.8, 30000, 4242);
    CHECK(rep.pass());
    CHECK(rep.gof_a.has_value()); // exact marginal available at d^m = 4 cells
    CHECK(rep.gof_b.has_value());
}

TEST_CASE("designed-inconsistent parameters are caught by the statistical test") {
    auto p = mixed_params(2);
    DiceParams wrong = p;
    wrong.a.set(0, 1, p.a(0, 1) + 2.5); // m-level dynamics differ on purpose
    Config x0 = {0, 1, 0, 1};
    auto rep = consistency_statistical_test(p, x0, 2, 0.8, 30000, 4242, 1e-3, wrong);
    CHECK_FALSE(rep.pass());
    CHECK(rep.two_sample.p_value < 1e-3);
}

TEST_CASE("endpoint law matches the exact generator marginal") {
    auto p = mixed_params(2);
    Config x0 = {0, 1};
    auto g = build_generator(p, 2);
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(4);
    p0(g.index_of(x0)) = 1.0;
    auto exact = transient_distribution(g.q, p0, 0.7);
    std::vector<std::int64_t> counts(4, 0);
    const int paths = 40000;
    for (int path = 0; path < paths; ++path) {
        auto spec = make_spec(x0, p, 0.7, 900, static_cast<std::uint64_t>(path));
        ++counts[static_cast<std::size_t>(config_index(simulate_endpoint(spec), 2))];
    }
    std::vector<double> probs(4);
    for (int i = 0; i < 4; ++i) probs[static_cast<std::size_t>(i)] = exact(i);
    auto r = chi2_goodness_of_fit(counts, probs);
    CHECK(r.p_value > 1e-3);
}

TEST_CASE("empirical frequency steps only at state-changing events") {
    auto p = mixed_params(2);
    auto spec = make_spec({0, 0, 1, 1}, p, 1.0, 3);
    auto t = simulate_graphical(spec);
    auto path = empirical_frequency(t);
    REQUIRE(!path.empty());
    CHECK(path.front().first == 0.0);
    CHECK(path.front().second[0] == doctest::Approx(0.5));
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        CHECK(path[i].second != path[i + 1].second);
    for (const auto& [time, freq] : path) {
        double total = 0.0;
        for (double f : freq) total += f;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}
