#include "dicekit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dicekit/errors.hpp"
#include "dicekit/generator.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

Config Trajectory::state_at(double t) const {
    Config x = x0;
    for (const EventRecord& e : events) {
        if (e.time > t) break;
        if (!e.changed) continue;
        if (e.kind == EventRecord::Kind::individual)
            x[static_cast<std::size_t>(e.particle)] = e.to;
        else
            std::copy(e.outcome.begin(), e.outcome.end(), x.begin());
    }
    return x;
}

namespace {

/// Chains bucketed by state, with O(1) moves, so events cost O(d) instead of O(n).
struct OccupancyIndex {
    std::vector<std::vector<int>> at_state; // chain labels per state
    std::vector<int> state_of;
    std::vector<int> slot_of;

    OccupancyIndex(const Config& x0, int d)
        : at_state(static_cast<std::size_t>(d)),
          state_of(x0.begin(), x0.end()),
          slot_of(x0.size()) {
        for (std::size_t l = 0; l < x0.size(); ++l) {
            auto& bucket = at_state[static_cast<std::size_t>(x0[l])];
            slot_of[l] = static_cast<int>(bucket.size());
            bucket.push_back(static_cast<int>(l));
        }
    }

    int count(int i) const { return static_cast<int>(at_state[static_cast<std::size_t>(i)].size()); }

    void move(int chain, int to) {
        int from = state_of[static_cast<std::size_t>(chain)];
        if (from == to) return;
        auto& src = at_state[static_cast<std::size_t>(from)];
        int slot = slot_of[static_cast<std::size_t>(chain)];
        int moved = src.back();
        src[static_cast<std::size_t>(slot)] = moved;
        slot_of[static_cast<std::size_t>(moved)] = slot;
        src.pop_back();
        auto& dst = at_state[static_cast<std::size_t>(to)];
        slot_of[static_cast<std::size_t>(chain)] = static_cast<int>(dst.size());
        dst.push_back(chain);
        state_of[static_cast<std::size_t>(chain)] = to;
    }

    Config config() const { return Config(state_of.begin(), state_of.end()); }
};

template <typename Sink>
Config run_graphical(const SimulationSpec& spec, const TruncatedMeasure& truncated,
                     Sink&& sink) {
    const DiceParams& p = spec.params;
    int d = p.d;
    auto n = static_cast<int>(spec.x0.size());
    OccupancyIndex occ(spec.x0, d);

    std::vector<double> row_out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) row_out[static_cast<std::size_t>(i)] = p.a.row_out(i);

    RngStream rng = RngStream::substream(spec.seed, spec.stream);
    double coord_rate = truncated.mass();
    double t = 0.0;
    std::vector<double> state_rates(static_cast<std::size_t>(d));
    std::vector<double> row(static_cast<std::size_t>(d));

    while (true) {
        double ind_rate = 0.0;
        for (int i = 0; i < d; ++i) {
            state_rates[static_cast<std::size_t>(i)] =
                occ.count(i) * row_out[static_cast<std::size_t>(i)];
            ind_rate += state_rates[static_cast<std::size_t>(i)];
        }
        double total = ind_rate + coord_rate;
        if (!(total > 0.0)) break;
        t += rng.exponential(total);
        if (t > spec.horizon) break;

        if (rng.uniform() * total < ind_rate) {
            int from = static_cast<int>(rng.categorical(state_rates, ind_rate));
            int chain =
                occ.at_state[static_cast<std::size_t>(from)][rng.uniform_below(
                    static_cast<std::uint64_t>(occ.count(from)))];
            for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = p.a(from, j);
            int to = static_cast<int>(rng.categorical(row, row_out[static_cast<std::size_t>(from)]));
            occ.move(chain, to);
            sink.individual(t, chain, from, to);
        } else {
            StochasticMatrix u = truncated.sample(rng);
            bool changed = false;
            std::vector<int> outcome(static_cast<std::size_t>(n));
            for (int l = 0; l < n; ++l) {
                int i = occ.state_of[static_cast<std::size_t>(l)];
                for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = u(i, j);
                int to = static_cast<int>(rng.categorical(row, 1.0));
                outcome[static_cast<std::size_t>(l)] = to;
                if (to != i) changed = true;
            }
            for (int l = 0; l < n; ++l) occ.move(l, outcome[static_cast<std::size_t>(l)]);
            sink.coordinated(t, std::move(outcome), changed);
        }
    }
    return occ.config();
}

struct RecordingSink {
    std::vector<EventRecord>& events;
    void individual(double t, int chain, int from, int to) {
        EventRecord e;
        e.time = t;
        e.kind = EventRecord::Kind::individual;
        e.particle = chain;
        e.from = from;
        e.to = to;
        e.changed = from != to;
        events.push_back(std::move(e));
    }
    void coordinated(double t, std::vector<int> outcome, bool changed) {
        EventRecord e;
        e.time = t;
        e.kind = EventRecord::Kind::coordinated;
        e.outcome = std::move(outcome);
        e.changed = changed;
        events.push_back(std::move(e));
    }
};

struct DiscardingSink {
    void individual(double, int, int, int) {}
    void coordinated(double, std::vector<int>&&, bool) {}
};

void check_spec(const SimulationSpec& spec) {
    spec.params.validate();
    if (spec.x0.empty()) throw validation_error("simulate: empty initial configuration");
    if (!is_valid_config(spec.x0, spec.params.d))
        throw validation_error("simulate: initial configuration has states outside 1..d");
    if (!(spec.horizon >= 0.0)) throw validation_error("simulate: horizon must be nonnegative");
}

} // namespace

Trajectory simulate_graphical(const SimulationSpec& spec) {
    check_spec(spec);
    TruncatedMeasure truncated = truncate(spec.params.nu, spec.params.d, spec.epsilon);
    Trajectory traj;
    traj.d = spec.params.d;
    traj.x0 = spec.x0;
    traj.horizon = spec.horizon;
    traj.epsilon = spec.epsilon;
    traj.truncation_mass = truncated.mass();
    traj.truncation_tail = truncated.integrability_tail();
    RecordingSink sink{traj.events};
    traj.final_state = run_graphical(spec, truncated, sink);
    return traj;
}

Config simulate_endpoint(const SimulationSpec& spec) {
    check_spec(spec);
    TruncatedMeasure truncated = truncate(spec.params.nu, spec.params.d, spec.epsilon);
    DiscardingSink sink;
    return run_graphical(spec, truncated, sink);
}

Trajectory restrict_trajectory(const Trajectory& t, int m) {
    if (m < 1 || m > static_cast<int>(t.x0.size()))
        throw validation_error("restrict_trajectory: need 1 <= m <= n");
    Trajectory out;
    out.d = t.d;
    out.x0 = Config(t.x0.begin(), t.x0.begin() + m);
    out.horizon = t.horizon;
    out.epsilon = t.epsilon;
    out.truncation_mass = t.truncation_mass;
    out.truncation_tail = t.truncation_tail;
    Config current = out.x0;
    for (const EventRecord& e : t.events) {
        if (e.kind == EventRecord::Kind::individual) {
            if (e.particle >= m) continue;
            EventRecord kept = e;
            if (kept.changed) current[static_cast<std::size_t>(kept.particle)] = kept.to;
            out.events.push_back(std::move(kept));
        } else {
            EventRecord kept;
            kept.time = e.time;
            kept.kind = EventRecord::Kind::coordinated;
            kept.outcome.assign(e.outcome.begin(), e.outcome.begin() + m);
            kept.changed = !std::equal(kept.outcome.begin(), kept.outcome.end(), current.begin());
            if (kept.changed)
                std::copy(kept.outcome.begin(), kept.outcome.end(), current.begin());
            out.events.push_back(std::move(kept));
        }
    }
    out.final_state = std::move(current);
    return out;
}

DistributionTestReport consistency_statistical_test(
    const DiceParams& params, const Config& x0, int m, double horizon, std::int64_t paths,
    std::uint64_t seed, double epsilon, const std::optional<DiceParams>& params_m) {
    auto n = static_cast<int>(x0.size());
    if (m < 1 || m > n)
        throw validation_error("consistency test: need 1 <= m <= n");
    if (paths < 1) throw validation_error("consistency test: need at least one path");
    const DiceParams& pm = params_m ? *params_m : params;
    std::int64_t cells = 1;
    for (int l = 0; l < m; ++l) {
        cells *= params.d;
        if (cells > kGeneratorStateCap)
            throw resource_error("consistency test: d^m marginal too large to tabulate");
    }
    Config x0m(x0.begin(), x0.begin() + m);

    std::vector<std::int64_t> counts_n(static_cast<std::size_t>(cells), 0);
    std::vector<std::int64_t> counts_m(static_cast<std::size_t>(cells), 0);
    SimulationSpec spec_n{x0, params, horizon, epsilon, seed, 0};
    SimulationSpec spec_m{x0m, pm, horizon, epsilon, seed, 0};
    for (std::int64_t path = 0; path < paths; ++path) {
        spec_n.stream = static_cast<std::uint64_t>(2 * path);
        Config xs = simulate_endpoint(spec_n);
        Config restricted(xs.begin(), xs.begin() + m);
        ++counts_n[static_cast<std::size_t>(config_index(restricted, params.d))];
        spec_m.stream = static_cast<std::uint64_t>(2 * path + 1);
        ++counts_m[static_cast<std::size_t>(config_index(simulate_endpoint(spec_m), params.d))];
    }

    std::optional<std::vector<double>> exact;
    if (cells <= 1024) {
        GeneratorMatrix gm = build_generator(params, m);
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
        p0(static_cast<Eigen::Index>(config_index(x0m, params.d))) = 1.0;
        Eigen::VectorXd pt = transient_distribution(gm.q, p0, horizon);
        exact.emplace(pt.data(), pt.data() + pt.size());
    }

    return compare_distributions(counts_n, counts_m, exact);
}

std::vector<std::pair<double, std::vector<double>>> empirical_frequency(const Trajectory& t) {
    auto n = static_cast<double>(t.x0.size());
    if (t.x0.empty()) throw validation_error("empirical frequency: empty configuration");
    CountVec counts = counts_of(t.x0, t.d);
    std::vector<std::pair<double, std::vector<double>>> path;
    auto emit = [&](double time) {
        std::vector<double> r(static_cast<std::size_t>(t.d));
        for (int i = 0; i < t.d; ++i) r[static_cast<std::size_t>(i)] = counts[i] / n;
        path.emplace_back(time, std::move(r));
    };
    emit(0.0);
    Config x = t.x0;
    for (const EventRecord& e : t.events) {
        if (!e.changed) continue;
        if (e.kind == EventRecord::Kind::individual) {
            --counts[e.from];
            ++counts[e.to];
            x[static_cast<std::size_t>(e.particle)] = e.to;
        } else {
            for (std::size_t l = 0; l < x.size(); ++l) {
                --counts[x[l]];
                ++counts[e.outcome[l]];
                x[l] = e.outcome[l];
            }
        }
        emit(e.time);
    }
    return path;
}

} // namespace dicekit
