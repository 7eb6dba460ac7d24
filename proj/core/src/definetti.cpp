#include "dicekit/definetti.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"
#include "dicekit/simulate.hpp"

namespace dicekit {

bool validate_frequency(FrequencyState& r) {
    if (r.empty()) throw validation_error("frequency state: empty vector");
    bool clamped = false;
    NeumaierSum sum;
    for (double& v : r) {
        if (v < -1e-12)
            throw numeric_error("frequency state: entry below -1e-12 indicates a bug, not "
                                "roundoff");
        if (v < 0.0) {
            if (v < -1e-15) clamped = true;
            v = 0.0;
        }
        sum.add(v);
    }
    if (std::abs(sum.value() - 1.0) > 1e-12)
        throw validation_error("frequency state: coordinates must sum to 1 within 1e-12");
    return clamped;
}

RateMatrixA transposed(const RateMatrixA& a) {
    RateMatrixA t(a.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) t.set(i, j, a(j, i));
    return t;
}

namespace {

/// Conservative rate matrix: off-diagonal a_ij, diagonal -row sums.
Eigen::MatrixXd conservative(const RateMatrixA& a) {
    int d = a.dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            if (j != i) m(i, j) = a(i, j);
        m(i, i) = -a.row_out(i);
    }
    return m;
}

FrequencyState flow_with(const Eigen::MatrixXd& m_transposed, const FrequencyState& r,
                         double dt) {
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::MatrixXd e = (dt * m_transposed).exp();
    Eigen::VectorXd out = e * rv;
    FrequencyState result(out.data(), out.data() + out.size());
    validate_frequency(result);
    return result;
}

double simplex_monomial(const FrequencyState& r, const CountVec& b) {
    double value = 1.0;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b[i] > 0) value *= std::pow(r[i], b[i]);
    return value;
}

} // namespace

FrequencyState drift_flow(const FrequencyState& r, const RateMatrixA& a, double dt) {
    if (!(dt >= 0.0)) throw validation_error("drift flow: dt must be nonnegative");
    if (r.size() != static_cast<std::size_t>(a.dim()))
        throw validation_error("drift flow: dimension mismatch");
    FrequencyState checked = r;
    validate_frequency(checked);
    if (dt == 0.0) return checked;
    return flow_with(conservative(a).transpose(), checked, dt);
}

FrequencyState coordination_jump(const FrequencyState& r, const StochasticMatrix& u) {
    if (r.size() != static_cast<std::size_t>(u.dim()))
        throw validation_error("coordination jump: dimension mismatch");
    int d = u.dim();
    FrequencyState out(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
        NeumaierSum sum;
        for (int j = 0; j < d; ++j) sum.add(u(j, i) * r[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(i)] = sum.value();
    }
    validate_frequency(out);
    return out;
}

FrequencyState FrequencyPath::at(double t) const {
    if (t < 0.0 || t > horizon)
        throw validation_error("frequency path: evaluation time outside [0, horizon]");
    std::size_t k = 0;
    while (k < jump_times.size() && jump_times[k] <= t) ++k;
    const FrequencyState& base = (k == 0) ? r0 : post_jump[k - 1];
    double since = (k == 0) ? t : t - jump_times[k - 1];
    return drift_flow(base, a, since);
}

FrequencyPath simulate_frequency_sde(const FrequencyState& r0, const DiceParams& p,
                                     double horizon, double epsilon, std::uint64_t seed,
                                     std::uint64_t stream) {
    p.validate();
    if (!(horizon >= 0.0))
        throw validation_error("frequency sde: horizon must be nonnegative");
    FrequencyPath path;
    path.a = p.a;
    path.r0 = r0;
    validate_frequency(path.r0);
    if (path.r0.size() != static_cast<std::size_t>(p.d))
        throw validation_error("frequency sde: r0 has wrong dimension");
    path.horizon = horizon;
    path.epsilon = epsilon;
    TruncatedMeasure truncated = truncate(p.nu, p.d, epsilon);
    path.jump_rate = truncated.mass();
    if (path.jump_rate <= 0.0) return path;

    RngStream rng = RngStream::substream(seed, stream);
    double t = 0.0;
    FrequencyState r = path.r0;
    while (true) {
        t += rng.exponential(path.jump_rate);
        if (t > horizon) break;
        double since = path.jump_times.empty() ? t : t - path.jump_times.back();
        r = drift_flow(r, p.a, since);
        r = coordination_jump(r, truncated.sample(rng));
        path.jump_times.push_back(t);
        path.post_jump.push_back(r);
    }
    return path;
}

FrequencyState mean_frequency(const FrequencyState& r0, const DiceParams& p, double t) {
    p.validate();
    FrequencyState r = r0;
    validate_frequency(r);
    if (!(t >= 0.0)) throw validation_error("mean frequency: t must be nonnegative");
    int d = p.d;
    Eigen::MatrixXd m = conservative(p.a);
    std::vector<double> c = mean_jump_matrix(p.nu, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) += c[static_cast<std::size_t>(i) * d + j];
    return flow_with(m.transpose(), r, t);
}

double generator_apply(const CountVec& exponents, const FrequencyState& r, const DiceParams& p) {
    p.validate();
    if (exponents.size() != static_cast<std::size_t>(p.d) ||
        r.size() != static_cast<std::size_t>(p.d))
        throw validation_error("generator apply: dimension mismatch");
    for (int e : exponents)
        if (e < 0) throw validation_error("generator apply: exponents must be nonnegative");
    FrequencyState rc = r;
    validate_frequency(rc);

    NeumaierSum value;
    // Drift: sum_i (sum_j a_ji r_j - a_ij r_i) * d/dr_i of r^b.
    for (int i = 0; i < p.d; ++i) {
        if (exponents[i] == 0) continue;
        double flow = 0.0;
        for (int j = 0; j < p.d; ++j)
            if (j != i)
                flow += p.a(j, i) * rc[static_cast<std::size_t>(j)] -
                        p.a(i, j) * rc[static_cast<std::size_t>(i)];
        if (flow == 0.0) continue;
        CountVec reduced = exponents;
        reduced[i] -= 1;
        value.add(flow * exponents[i] * simplex_monomial(rc, reduced));
    }

    // Jumps: integral of (U^T r)^b - r^b, expanded over transition count
    // matrices; the diagonal term contributes the (finite) deficiency.
    double base = simplex_monomial(rc, exponents);
    for (const CountMatrix& k : enumerate_transition_matrices(exponents)) {
        double mult = static_cast<double>(target_multiplicity(k));
        double weight = monomial_integral(p.nu, k.transposed());
        if (weight == 0.0) continue;
        CountVec target = k.col_sums();
        value.add(mult * weight * simplex_monomial(rc, target));
    }
    value.add(diag_deficiency(p.nu, exponents) * base);
    return value.value();
}

std::vector<DualTransition> dual_rates(const CountVec& b, const DiceParams& p) {
    p.validate();
    if (b.size() != static_cast<std::size_t>(p.d))
        throw validation_error("dual rates: dimension mismatch");
    if (!p.a.is_balanced())
        throw validation_error("duality precondition failed: A is not balanced "
                               "(sum_j a_ij != sum_j a_ji for some i)");
    if (!is_doubly_stochastic_supported(p.nu))
        throw validation_error("duality precondition failed: coordination measure is not "
                               "supported on doubly stochastic matrices");
    DiceParams dual_params{p.d, transposed(p.a),
                           CoordinationMeasure{transpose_pushforward(p.nu, p.d)}};
    std::map<CountVec, double> merged;
    for (const CountMatrix& k : enumerate_transition_matrices(b)) {
        double rate =
            static_cast<double>(target_multiplicity(k)) * gamma_rate(dual_params, b, k);
        if (rate <= 0.0) continue;
        merged[k.col_sums()] += rate;
    }
    std::vector<DualTransition> out;
    out.reserve(merged.size());
    for (auto& [target, rate] : merged) out.push_back({target, rate});
    return out;
}

CountVec DualPath::at(double t) const {
    CountVec b = b0;
    for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) b = states[k];
    return b;
}

DualPath simulate_dual(const CountVec& b0, const DiceParams& p, double horizon,
                       std::uint64_t seed, std::uint64_t stream) {
    if (!(horizon >= 0.0)) throw validation_error("dual: horizon must be nonnegative");
    for (int v : b0)
        if (v < 0) throw validation_error("dual: b0 must be nonnegative");
    DualPath path;
    path.b0 = b0;
    path.horizon = horizon;
    RngStream rng = RngStream::substream(seed, stream);

    std::map<CountVec, std::vector<DualTransition>> table;
    CountVec b = b0;
    double t = 0.0;
    std::vector<double> weights;
    while (true) {
        auto it = table.find(b);
        if (it == table.end()) it = table.emplace(b, dual_rates(b, p)).first;
        const auto& moves = it->second;
        double total = 0.0;
        weights.clear();
        for (const auto& m : moves) {
            weights.push_back(m.rate);
            total += m.rate;
        }
        if (!(total > 0.0)) break;
        t += rng.exponential(total);
        if (t > horizon) break;
        const auto& chosen = moves[rng.categorical(weights, total)];
        if (chosen.target == b) continue; // merged identity outcome
        b = chosen.target;
        path.times.push_back(t);
        path.states.push_back(b);
    }
    return path;
}

DualityReport moment_duality_check(const FrequencyState& r, const CountVec& b, double t,
                                   const DiceParams& p, std::int64_t paths, std::uint64_t seed,
                                   double epsilon) {
    if (paths < 1) throw validation_error("duality check: need at least one path");
    // Fail fast on the duality preconditions before spending simulation time.
    (void)dual_rates(b, p);
    DualityReport report;
    report.paths = paths;

    NeumaierSum lhs_sum;
    NeumaierSum lhs_sq;
    for (std::int64_t path = 0; path < paths; ++path) {
        FrequencyPath fp = simulate_frequency_sde(r, p, t, epsilon, seed,
                                                  static_cast<std::uint64_t>(2 * path));
        double v = simplex_monomial(fp.at(t), b);
        lhs_sum.add(v);
        lhs_sq.add(v * v);
    }
    NeumaierSum rhs_sum;
    NeumaierSum rhs_sq;
    for (std::int64_t path = 0; path < paths; ++path) {
        DualPath dp = simulate_dual(b, p, t, seed, static_cast<std::uint64_t>(2 * path + 1));
        double v = simplex_monomial(r, dp.at(t));
        rhs_sum.add(v);
        rhs_sq.add(v * v);
    }
    auto m = static_cast<double>(paths);
    report.lhs = lhs_sum.value() / m;
    report.rhs = rhs_sum.value() / m;
    double var_l = std::max(0.0, lhs_sq.value() / m - report.lhs * report.lhs);
    double var_r = std::max(0.0, rhs_sq.value() / m - report.rhs * report.rhs);
    report.se_lhs = std::sqrt(var_l / m);
    report.se_rhs = std::sqrt(var_r / m);
    report.pass = std::abs(report.lhs - report.rhs) <= 3.0 * (report.se_lhs + report.se_rhs);
    return report;
}

Config config_from_frequency(const FrequencyState& r0, int n) {
    FrequencyState r = r0;
    validate_frequency(r);
    if (n < 1) throw validation_error("config from frequency: n must be positive");
    int d = static_cast<int>(r.size());
    std::vector<int> counts(static_cast<std::size_t>(d));
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int i = 0; i < d; ++i) {
        double ideal = r[static_cast<std::size_t>(i)] * n;
        counts[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(ideal));
        assigned += counts[static_cast<std::size_t>(i)];
        remainders.push_back({ideal - std::floor(ideal), i});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    for (int leftover = n - assigned, k = 0; leftover > 0; --leftover, ++k)
        counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(k)].second)] += 1;
    Config x;
    x.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < d; ++i)
        x.insert(x.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]), i);
    return x;
}

namespace {

double w1_sorted(std::vector<double>& a, std::vector<double>& b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    NeumaierSum sum;
    for (std::size_t k = 0; k < a.size(); ++k) sum.add(std::abs(a[k] - b[k]));
    return sum.value() / static_cast<double>(a.size());
}

} // namespace

ConvergenceReport convergence_check(const DiceParams& p, const FrequencyState& r0,
                                    const std::vector<int>& n_list, double horizon,
                                    std::int64_t paths, std::uint64_t seed, double epsilon) {
    if (n_list.empty()) throw validation_error("convergence check: empty n list");
    if (paths < 20) throw validation_error("convergence check: need at least 20 paths");
    ConvergenceReport report;
    report.n_list = n_list;
    int d = p.d;

    // SDE-side sample, shared across all n.
    std::vector<std::vector<double>> sde(static_cast<std::size_t>(d),
                                         std::vector<double>(static_cast<std::size_t>(paths)));
    for (std::int64_t path = 0; path < paths; ++path) {
        FrequencyPath fp =
            simulate_frequency_sde(r0, p, horizon, epsilon, seed,
                                   static_cast<std::uint64_t>(path));
        FrequencyState r = fp.at(horizon);
        for (int i = 0; i < d; ++i)
            sde[static_cast<std::size_t>(i)][static_cast<std::size_t>(path)] =
                r[static_cast<std::size_t>(i)];
    }

    constexpr int kBatches = 10;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        int n = n_list[ni];
        Config x0 = config_from_frequency(r0, n);
        SimulationSpec spec{x0, p, horizon, epsilon, seed + 0x9e3779b97f4a7c15ull, 0};
        std::vector<std::vector<double>> dice(
            static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(paths)));
        for (std::int64_t path = 0; path < paths; ++path) {
            spec.stream = static_cast<std::uint64_t>(n) * 1000003u +
                          static_cast<std::uint64_t>(path);
            Config xs = simulate_endpoint(spec);
            CountVec counts = counts_of(xs, d);
            for (int i = 0; i < d; ++i)
                dice[static_cast<std::size_t>(i)][static_cast<std::size_t>(path)] =
                    counts[i] / static_cast<double>(n);
        }

        double dist = 0.0;
        double mean_diff = 0.0;
        double second_diff = 0.0;
        for (int i = 0; i < d; ++i) {
            std::vector<double> a = dice[static_cast<std::size_t>(i)];
            std::vector<double> b = sde[static_cast<std::size_t>(i)];
            double m1a = 0.0;
            double m1b = 0.0;
            double m2a = 0.0;
            double m2b = 0.0;
            for (double v : a) {
                m1a += v;
                m2a += v * v;
            }
            for (double v : b) {
                m1b += v;
                m2b += v * v;
            }
            auto m = static_cast<double>(paths);
            mean_diff = std::max(mean_diff, std::abs(m1a - m1b) / m);
            second_diff = std::max(second_diff, std::abs(m2a - m2b) / m);
            dist = std::max(dist, w1_sorted(a, b));
        }
        report.w1_distance.push_back(dist);
        report.mean_abs_diff.push_back(mean_diff);
        report.second_abs_diff.push_back(second_diff);

        // Batch-means spread of the statistic for the nonincreasing slack.
        std::int64_t per = paths / kBatches;
        std::vector<double> batch_stats;
        for (int bi = 0; bi < kBatches && per >= 2; ++bi) {
            double batch_dist = 0.0;
            for (int i = 0; i < d; ++i) {
                auto first = static_cast<std::size_t>(bi * per);
                std::vector<double> a(dice[static_cast<std::size_t>(i)].begin() + first,
                                      dice[static_cast<std::size_t>(i)].begin() + first +
                                          static_cast<std::size_t>(per));
                std::vector<double> b(sde[static_cast<std::size_t>(i)].begin() + first,
                                      sde[static_cast<std::size_t>(i)].begin() + first +
                                          static_cast<std::size_t>(per));
                batch_dist = std::max(batch_dist, w1_sorted(a, b));
            }
            batch_stats.push_back(batch_dist);
        }
        double se = 0.0;
        if (batch_stats.size() > 1) {
            double mean = std::accumulate(batch_stats.begin(), batch_stats.end(), 0.0) /
                          static_cast<double>(batch_stats.size());
            double var = 0.0;
            for (double v : batch_stats) var += (v - mean) * (v - mean);
            var /= static_cast<double>(batch_stats.size() - 1);
            se = std::sqrt(var / static_cast<double>(batch_stats.size()));
        }
        report.w1_se.push_back(se);
    }

    std::vector<double> log_n;
    std::vector<double> log_dist;
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        if (report.w1_distance[k] > 0.0) {
            log_n.push_back(std::log(static_cast<double>(n_list[k])));
            log_dist.push_back(std::log(report.w1_distance[k]));
        }
    }
    report.loglog_slope = log_n.size() >= 2 ? ols_slope(log_n, log_dist) : 0.0;
    for (std::size_t k = 0; k + 1 < n_list.size(); ++k) {
        double slack = 3.0 * (report.w1_se[k] + report.w1_se[k + 1]);
        if (report.w1_distance[k + 1] > report.w1_distance[k] + slack)
            report.nonincreasing = false;
    }
    return report;
}

} // namespace dicekit
