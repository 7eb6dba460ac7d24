#include "dicekit/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <variant>

#include "dicekit/coalescent.hpp"
#include "dicekit/definetti.hpp"
#include "dicekit/errors.hpp"
#include "dicekit/generator.hpp"
#include "dicekit/simulate.hpp"
#include "json_io.hpp"

namespace dicekit {
namespace {

using detail::ojson;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ojson ints1(const std::vector<int>& v) {
    ojson out = ojson::array();
    for (int x : v) out.push_back(x + 1);
    return out;
}

ojson count_matrix_json(const CountMatrix& k) {
    ojson rows = ojson::array();
    for (int i = 0; i < k.dim(); ++i) {
        ojson row = ojson::array();
        for (int j = 0; j < k.dim(); ++j) row.push_back(k(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson chi2_json(const ChiSquareResult& r) {
    ojson out;
    out["statistic"] = r.statistic;
    out["dof"] = r.dof;
    out["p_value"] = r.p_value;
    out["min_expected"] = r.min_expected;
    return out;
}

std::uint64_t need_seed(const ScenarioConfig& cfg) {
    if (!cfg.seed)
        throw config_error("scenario '" + cfg.scenario +
                           "' simulates and needs a seed (config key \"seed\" or --seed)");
    return *cfg.seed;
}

/// CSV field quoting for partition strings and labels.
std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

struct Outcome {
    Verdict verdict = Verdict::pass;
    std::string summary;
    ojson metrics;
    std::vector<std::pair<std::string, std::string>> extra;
};

Outcome run_verify_consistency(const ScenarioConfig& cfg) {
    const double tol = 1e-9;
    ConsistencyReport rep = check_consistency_equation(cfg.params, cfg.n_max);
    Outcome o;
    o.verdict = rep.max_residual <= tol ? Verdict::pass : Verdict::fail;
    o.metrics["n_max"] = cfg.n_max;
    o.metrics["tolerance"] = tol;
    o.metrics["max_residual"] = rep.max_residual;
    o.metrics["identities_checked"] = rep.checked;
    if (!rep.worst_b.empty()) {
        o.metrics["worst_b"] = rep.worst_b;
        o.metrics["worst_change"] = count_matrix_json(rep.worst_k);
        o.metrics["worst_extension_state"] = rep.worst_j + 1;
    }
    o.summary = "consistency residual " + fmt(rep.max_residual) + " over " +
                std::to_string(rep.checked) + " identities (tolerance " + fmt(tol) + ")";
    return o;
}

Outcome run_verify_exchangeability(const ScenarioConfig& cfg) {
    const double tol = 1e-12;
    GeneratorMatrix g = build_generator(cfg.params, cfg.n);
    double worst = 0.0;
    std::vector<int> worst_sigma;
    std::vector<int> sigma(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) sigma[static_cast<std::size_t>(i)] = i;
    long long permutations = 0;
    do {
        ++permutations;
        double dev = check_permutation_commutation(g, Permutation{sigma});
        if (dev > worst) {
            worst = dev;
            worst_sigma = sigma;
        }
    } while (std::next_permutation(sigma.begin(), sigma.end()));

    Outcome o;
    o.verdict = worst <= tol ? Verdict::pass : Verdict::fail;
    o.metrics["n"] = cfg.n;
    o.metrics["states"] = static_cast<std::int64_t>(g.configs.size());
    o.metrics["permutations"] = permutations;
    o.metrics["tolerance"] = tol;
    o.metrics["max_deviation"] = worst;
    if (!worst_sigma.empty()) o.metrics["worst_permutation"] = ints1(worst_sigma);
    o.summary = "exchangeability deviation " + fmt(worst) + " over " +
                std::to_string(permutations) + " permutations of " + std::to_string(cfg.n) +
                " chains (tolerance " + fmt(tol) + ")";
    o.extra.emplace_back("generator.csv", generator_to_csv(g));
    return o;
}

Outcome run_simulate_dice(const ScenarioConfig& cfg) {
    SimulationSpec spec;
    spec.x0 = cfg.x0;
    spec.params = cfg.params;
    spec.horizon = cfg.horizon;
    spec.epsilon = cfg.epsilon;
    spec.seed = need_seed(cfg);
    Trajectory traj = simulate_graphical(spec);

    const std::size_t n = cfg.x0.size();
    std::string csv = "time";
    for (std::size_t i = 0; i < n; ++i) csv += ",chain_" + std::to_string(i + 1);
    csv += '\n';
    auto add_row = [&](double t, const Config& x) {
        csv += fmt(t);
        for (int s : x) csv += ',' + std::to_string(s + 1);
        csv += '\n';
    };
    std::string events;
    Config cur = traj.x0;
    add_row(0.0, cur);
    long long changed = 0;
    long long coordinated = 0;
    for (const EventRecord& ev : traj.events) {
        ojson line;
        line["time"] = ev.time;
        if (ev.kind == EventRecord::Kind::individual) {
            cur[static_cast<std::size_t>(ev.particle)] = ev.to;
            line["kind"] = "individual";
            line["chain"] = ev.particle + 1;
            line["from"] = ev.from + 1;
            line["to"] = ev.to + 1;
        } else {
            ++coordinated;
            cur = ev.outcome;
            line["kind"] = "coordinated";
            line["outcome"] = ints1(ev.outcome);
        }
        line["changed"] = ev.changed;
        if (ev.changed) ++changed;
        events += detail::dump_json17(line) + "\n";
        add_row(ev.time, cur);
    }
    add_row(traj.horizon, traj.final_state);

    Outcome o;
    o.metrics["chains"] = static_cast<std::int64_t>(n);
    o.metrics["events"] = static_cast<std::int64_t>(traj.events.size());
    o.metrics["state_changing_events"] = changed;
    o.metrics["coordinated_events"] = coordinated;
    o.metrics["truncation_mass"] = traj.truncation_mass;
    o.metrics["truncation_tail"] = traj.truncation_tail;
    o.metrics["final_state"] = ints1(traj.final_state);
    o.metrics["final_counts"] = counts_of(traj.final_state, cfg.params.d);
    o.summary = std::to_string(traj.events.size()) + " events (" + std::to_string(changed) +
                " state-changing) over horizon " + fmt(traj.horizon);
    o.extra.emplace_back("trajectory.csv", std::move(csv));
    o.extra.emplace_back("events.jsonl", std::move(events));
    return o;
}

Outcome run_frequency_sde(const ScenarioConfig& cfg) {
    FrequencyPath path =
        simulate_frequency_sde(cfg.r0, cfg.params, cfg.horizon, cfg.epsilon, need_seed(cfg));

    const int d = cfg.params.d;
    std::vector<double> ts;
    const int grid = 200;
    for (int k = 0; k <= grid; ++k) ts.push_back(cfg.horizon * k / grid);
    for (double t : path.jump_times)
        if (t <= cfg.horizon) ts.push_back(t);
    std::sort(ts.begin(), ts.end());

    std::string csv = "time";
    for (int i = 0; i < d; ++i) csv += ",r_" + std::to_string(i + 1);
    csv += '\n';
    for (double t : ts) {
        FrequencyState r = path.at(t);
        csv += fmt(t);
        for (double v : r) csv += ',' + fmt(v);
        csv += '\n';
    }

    FrequencyState final_state = path.at(cfg.horizon);
    FrequencyState mean = mean_frequency(cfg.r0, cfg.params, cfg.horizon);
    Outcome o;
    o.metrics["jumps"] = static_cast<std::int64_t>(path.jump_times.size());
    o.metrics["jump_rate"] = path.jump_rate;
    o.metrics["final_state"] = final_state;
    o.metrics["exact_mean_at_horizon"] = mean;
    o.summary = std::to_string(path.jump_times.size()) + " coordination jumps at rate " +
                fmt(path.jump_rate) + " over horizon " + fmt(cfg.horizon);
    o.extra.emplace_back("trajectory.csv", std::move(csv));
    return o;
}

Outcome run_duality_check(const ScenarioConfig& cfg) {
    DualityReport rep = moment_duality_check(cfg.r0, cfg.b0, cfg.horizon, cfg.params, cfg.paths,
                                             need_seed(cfg), cfg.epsilon);
    Outcome o;
    o.verdict = rep.pass ? Verdict::pass : Verdict::fail;
    o.metrics["paths"] = rep.paths;
    o.metrics["lhs_frequency_moment"] = rep.lhs;
    o.metrics["rhs_dual_moment"] = rep.rhs;
    o.metrics["se_lhs"] = rep.se_lhs;
    o.metrics["se_rhs"] = rep.se_rhs;
    o.metrics["abs_difference"] = std::abs(rep.lhs - rep.rhs);
    o.metrics["bound_3se"] = 3.0 * (rep.se_lhs + rep.se_rhs);
    o.summary = "duality gap " + fmt(std::abs(rep.lhs - rep.rhs)) + " vs bound " +
                fmt(3.0 * (rep.se_lhs + rep.se_rhs)) + " (" + fmt(rep.lhs) + " vs " +
                fmt(rep.rhs) + ")";
    return o;
}

Outcome run_convergence_check(const ScenarioConfig& cfg) {
    ConvergenceReport rep = convergence_check(cfg.params, cfg.r0, cfg.n_list, cfg.horizon,
                                              cfg.paths, need_seed(cfg), cfg.epsilon);
    const bool drift_only = std::holds_alternative<ZeroMeasure>(cfg.params.nu);
    Outcome o;
    if (drift_only)
        o.verdict = (rep.loglog_slope >= -0.7 && rep.loglog_slope <= -0.3) ? Verdict::pass
                                                                           : Verdict::fail;
    else
        o.verdict = rep.nonincreasing ? Verdict::pass : Verdict::fail;
    o.metrics["n_list"] = rep.n_list;
    o.metrics["w1_distance"] = rep.w1_distance;
    o.metrics["w1_se"] = rep.w1_se;
    o.metrics["mean_abs_diff"] = rep.mean_abs_diff;
    o.metrics["second_abs_diff"] = rep.second_abs_diff;
    o.metrics["loglog_slope"] = rep.loglog_slope;
    o.metrics["nonincreasing"] = rep.nonincreasing;
    o.metrics["drift_only"] = drift_only;
    if (drift_only) {
        o.metrics["slope_band"] = ojson::array({-0.7, -0.3});
        o.summary = "log-log W1 slope " + fmt(rep.loglog_slope) + " (band -0.7 .. -0.3)";
    } else {
        o.summary = std::string("W1 distances ") +
                    (rep.nonincreasing ? "nonincreasing" : "NOT nonincreasing") +
                    " in n; slope " + fmt(rep.loglog_slope);
    }
    return o;
}

Outcome run_coalescent(const ScenarioConfig& cfg) {
    CoalescentParams params{cfg.coal, cfg.params};
    TypedPartition pi0 = TypedPartition::parse(cfg.partition, cfg.params.d);
    CoalescentTrajectory traj =
        simulate_coalescent(pi0, params, cfg.horizon, cfg.epsilon, need_seed(cfg));

    std::string csv = "time,blocks,partition\n";
    auto add_row = [&](double t, const TypedPartition& pi) {
        csv += fmt(t);
        csv += ',' + std::to_string(pi.block_count());
        csv += ',' + csv_quote(pi.serialize());
        csv += '\n';
    };
    std::string events;
    add_row(0.0, pi0);
    long long mergers = 0;
    long long switches = 0;
    long long changed = 0;
    for (const CoalescentEvent& ev : traj.events) {
        ojson line;
        line["time"] = ev.time;
        if (ev.merger) {
            ++mergers;
            line["kind"] = "merger";
            line["blocks"] = ints1(ev.participants);
            line["merged_type"] = ev.merged_type + 1;
        } else {
            ++switches;
            line["kind"] = "switch";
            line["new_types"] = ints1(ev.new_types);
        }
        line["changed"] = ev.changed;
        if (ev.changed) ++changed;
        line["state"] = ev.state.serialize();
        events += detail::dump_json17(line) + "\n";
        add_row(ev.time, ev.state);
    }
    add_row(traj.horizon, traj.final_state);

    Outcome o;
    o.metrics["elements"] = pi0.element_count();
    o.metrics["events"] = static_cast<std::int64_t>(traj.events.size());
    o.metrics["mergers"] = mergers;
    o.metrics["switches"] = switches;
    o.metrics["state_changing_events"] = changed;
    o.metrics["final_blocks"] = traj.final_state.block_count();
    o.metrics["final_partition"] = traj.final_state.serialize();
    o.summary = std::to_string(mergers) + " mergers and " + std::to_string(switches) +
                " type switches; " + std::to_string(traj.final_state.block_count()) +
                " blocks at horizon " + fmt(traj.horizon);
    o.extra.emplace_back("trajectory.csv", std::move(csv));
    o.extra.emplace_back("events.jsonl", std::move(events));
    return o;
}

Outcome run_coalescent_consistency(const ScenarioConfig& cfg) {
    CoalescentParams params{cfg.coal, cfg.params};
    TypedPartition pi0 = TypedPartition::parse(cfg.partition, cfg.params.d);
    DistributionTestReport rep = coalescent_consistency_test(pi0, params, cfg.m, cfg.horizon,
                                                             cfg.paths, need_seed(cfg),
                                                             cfg.epsilon);
    Outcome o;
    if (!rep.pass())
        o.verdict = Verdict::fail;
    else
        o.verdict = rep.power_warning ? Verdict::warn : Verdict::pass;
    o.metrics["m"] = cfg.m;
    o.metrics["paths"] = cfg.paths;
    o.metrics["p_threshold"] = rep.p_threshold;
    o.metrics["two_sample"] = chi2_json(rep.two_sample);
    if (rep.gof_a) o.metrics["gof_restricted"] = chi2_json(*rep.gof_a);
    if (rep.gof_b) o.metrics["gof_direct"] = chi2_json(*rep.gof_b);
    o.metrics["secondary_p"] = rep.secondary_p();
    o.metrics["power_warning"] = rep.power_warning;
    o.summary = "restriction consistency p = " + fmt(rep.two_sample.p_value) +
                " (threshold " + fmt(rep.p_threshold) + ")" +
                (rep.power_warning ? " [low-power warning]" : "");
    return o;
}

} // namespace

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::warn: return "warn";
    }
    return "fail";
}

bool scenario_uses_seed(const std::string& scenario) {
    return scenario == "simulate-dice" || scenario == "frequency-sde" ||
           scenario == "duality-check" || scenario == "convergence-check" ||
           scenario == "coalescent" || scenario == "coalescent-consistency";
}

int verdict_exit_code(Verdict v) {
    switch (v) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 1;
    case Verdict::warn: return 2;
    }
    return 1;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Outcome o;
    if (cfg.scenario == "verify-consistency")
        o = run_verify_consistency(cfg);
    else if (cfg.scenario == "verify-exchangeability")
        o = run_verify_exchangeability(cfg);
    else if (cfg.scenario == "simulate-dice")
        o = run_simulate_dice(cfg);
    else if (cfg.scenario == "frequency-sde")
        o = run_frequency_sde(cfg);
    else if (cfg.scenario == "duality-check")
        o = run_duality_check(cfg);
    else if (cfg.scenario == "convergence-check")
        o = run_convergence_check(cfg);
    else if (cfg.scenario == "coalescent")
        o = run_coalescent(cfg);
    else if (cfg.scenario == "coalescent-consistency")
        o = run_coalescent_consistency(cfg);
    else
        throw config_error("unknown scenario '" + cfg.scenario + "'");

    ojson rec;
    rec["schema"] = 1;
    rec["scenario"] = cfg.scenario;
    rec["verdict"] = verdict_name(o.verdict);
    rec["summary"] = o.summary;
    rec["scenario_hash"] = scenario_hash(cfg);
    if (cfg.seed) rec["seed"] = *cfg.seed;
    rec["metrics"] = std::move(o.metrics);
    ojson names = ojson::array();
    names.push_back("result.jsonl");
    for (const auto& a : o.extra) names.push_back(a.first);
    rec["artifacts"] = std::move(names);
    rec["config"] = detail::resolved_config(cfg);

    ScenarioResult out;
    out.verdict = o.verdict;
    out.summary = o.summary;
    out.artifacts.emplace_back("result.jsonl", detail::dump_json17(rec) + "\n");
    for (auto& a : o.extra) out.artifacts.push_back(std::move(a));
    return out;
}

std::vector<std::string> write_artifacts(const ScenarioResult& result,
                                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw resource_error("cannot create output directory '" + out_dir + "': " +
                                 ec.message());
    std::vector<std::string> paths;
    for (const auto& [name, content] : result.artifacts) {
        fs::path p = fs::path(out_dir) / name;
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw resource_error("cannot open '" + p.string() + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw resource_error("failed writing '" + p.string() + "'");
        paths.push_back(p.string());
    }
    return paths;
}

} // namespace dicekit
