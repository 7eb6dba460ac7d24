#include <benchmark/benchmark.h>

#include "dicekit/coalescent.hpp"
#include "dicekit/definetti.hpp"
#include "dicekit/generator.hpp"
#include "dicekit/measures.hpp"
#include "dicekit/rates.hpp"
#include "dicekit/rng.hpp"
#include "dicekit/simulate.hpp"

namespace {

using namespace dicekit;

DiceParams demo_params(int d) {
    DiceParams p;
    p.d = d;
    p.a = RateMatrixA(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) p.a.set(i, j, 0.4 + 0.1 * (i + j));
    DirichletSplitting dsp;
    dsp.d = d;
    for (int i = 0; i < d; ++i) dsp.eta.push_back(1.0 + 0.5 * i);
    GroupWeight g;
    for (int i = 0; i < d; ++i) g.members.push_back(i);
    g.weight = 0.9;
    dsp.groups.push_back(g);
    p.nu = dsp;
    return p;
}

void BM_GammaRate(benchmark::State& state) {
    auto p = demo_params(3);
    CountVec b{2, 1, 1};
    auto ks = enumerate_transition_matrices(b);
    for (auto _ : state) {
        double total = 0.0;
        for (const auto& k : ks) total += gamma_rate(p, b, k);
        benchmark::DoNotOptimize(total);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ks.size()));
}
BENCHMARK(BM_GammaRate);

void BM_BuildGenerator(benchmark::State& state) {
    auto p = demo_params(2);
    int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto g = build_generator(p, n);
        benchmark::DoNotOptimize(g.q.data());
    }
}
BENCHMARK(BM_BuildGenerator)->Arg(3)->Arg(5)->Arg(7);

void BM_LumpGenerator(benchmark::State& state) {
    auto p = demo_params(2);
    auto g = build_generator(p, 6);
    for (auto _ : state) {
        auto lumped = lumped_generator(g, 3);
        benchmark::DoNotOptimize(lumped.q.data());
    }
}
BENCHMARK(BM_LumpGenerator);

void BM_TruncateAndSample(benchmark::State& state) {
    auto p = demo_params(3);
    auto truncated = truncate(p.nu, 3, 1e-3);
    RngStream rng(7, 0);
    for (auto _ : state) {
        auto u = truncated.sample(rng);
        benchmark::DoNotOptimize(u.data().data());
    }
}
BENCHMARK(BM_TruncateAndSample);

void BM_SimulateDice(benchmark::State& state) {
    SimulationSpec spec;
    spec.params = demo_params(2);
    spec.x0 = Config(static_cast<std::size_t>(state.range(0)), 0);
    for (std::size_t i = 0; i < spec.x0.size(); i += 2) spec.x0[i] = 1;
    spec.horizon = 1.0;
    spec.seed = 99;
    std::uint64_t stream = 0;
    for (auto _ : state) {
        spec.stream = stream++;
        auto x = simulate_endpoint(spec);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_SimulateDice)->Arg(10)->Arg(100)->Arg(1000);

void BM_FrequencySde(benchmark::State& state) {
    auto p = demo_params(2);
    std::uint64_t stream = 0;
    for (auto _ : state) {
        auto path = simulate_frequency_sde({0.7, 0.3}, p, 5.0, 1e-3, 21, stream++);
        benchmark::DoNotOptimize(path.jump_times.data());
    }
}
BENCHMARK(BM_FrequencySde);

void BM_Coalescent(benchmark::State& state) {
    CoalescentParams cp;
    cp.coal.rho = {1.0, 1.0};
    cp.coal.q.resize(2);
    cp.coal.q[0].push_back({0.5, {0.6, 0.2}});
    cp.dice = demo_params(2);
    Config types(8, 0);
    for (std::size_t i = 0; i < types.size(); i += 2) types[i] = 1;
    auto pi0 = TypedPartition::singletons(types);
    std::uint64_t stream = 0;
    for (auto _ : state) {
        auto traj = simulate_coalescent(pi0, cp, 2.0, 1e-3, 31, stream++);
        benchmark::DoNotOptimize(traj.final_state.blocks.data());
    }
}
BENCHMARK(BM_Coalescent);

} // namespace

BENCHMARK_MAIN();
