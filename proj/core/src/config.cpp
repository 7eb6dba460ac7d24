#include "dicekit/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "dicekit/errors.hpp"
#include "json_io.hpp"

namespace dicekit {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw config_error("config key '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "must be an object");
    for (const auto& item : obj.items())
        if (allowed.find(item.key()) == allowed.end())
            throw config_error("unknown config key '" + join(path, item.key()) + "'");
}

double read_num(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "must be a number");
    return v.get<double>();
}

int read_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "must be an integer");
    return v.get<int>();
}

std::int64_t read_i64(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t read_u64(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0))
        fail(path, "must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string read_str(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "must be a string");
    return v.get<std::string>();
}

std::vector<double> read_num_vec(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(read_num(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> read_int_vec(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "must be an array of integers");
    std::vector<int> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(read_int(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

/// Row-major entries of a square matrix given as an array of d rows.
std::vector<double> read_square(const json& v, int d, const std::string& path) {
    if (!v.is_array() || static_cast<int>(v.size()) != d)
        fail(path, "must be an array of " + std::to_string(d) + " rows");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
        auto row = read_num_vec(v[static_cast<std::size_t>(i)],
                                path + "[" + std::to_string(i) + "]");
        if (static_cast<int>(row.size()) != d)
            fail(path + "[" + std::to_string(i) + "]",
                 "must have " + std::to_string(d) + " entries");
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

/// Config files index states from 1; internal indices are 0-based.
int read_state(const json& v, int d, const std::string& path) {
    int s = read_int(v, path);
    if (s < 1 || s > d)
        fail(path, "state " + std::to_string(s) + " is out of range 1.." + std::to_string(d));
    return s - 1;
}

std::vector<int> read_state_vec(const json& v, int d, const std::string& path) {
    if (!v.is_array()) fail(path, "must be an array of states");
    std::vector<int> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(read_state(v[i], d, path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<GroupWeight> read_groups(const json& v, int d, const std::string& path) {
    if (!v.is_array()) fail(path, "must be an array of groups");
    std::vector<GroupWeight> out;
    for (std::size_t g = 0; g < v.size(); ++g) {
        std::string p = path + "[" + std::to_string(g) + "]";
        check_keys(v[g], p, {"members", "weight"});
        GroupWeight gw;
        gw.members = read_state_vec(v[g].value("members", json::array()), d, p + ".members");
        std::sort(gw.members.begin(), gw.members.end());
        if (v[g].contains("weight")) gw.weight = read_num(v[g]["weight"], p + ".weight");
        out.push_back(std::move(gw));
    }
    return out;
}

CoordinationMeasure parse_measure(const json& v, int d, const std::string& path) {
    if (!v.is_object()) fail(path, "must be an object with a 'family' tag");
    if (!v.contains("family")) fail(join(path, "family"), "is required");
    const std::string family = read_str(v["family"], join(path, "family"));

    if (family == "zero") {
        check_keys(v, path, {"family"});
        return ZeroMeasure{};
    }
    if (family == "atomic") {
        check_keys(v, path, {"family", "atoms"});
        AtomicMeasure m;
        const json& atoms = v.value("atoms", json::array());
        if (!atoms.is_array()) fail(join(path, "atoms"), "must be an array");
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            std::string p = path + ".atoms[" + std::to_string(a) + "]";
            check_keys(atoms[a], p, {"weight", "matrix"});
            if (!atoms[a].contains("matrix")) fail(p + ".matrix", "is required");
            AtomicMeasure::Atom atom;
            atom.weight = read_num(atoms[a].value("weight", json(0.0)), p + ".weight");
            try {
                atom.matrix =
                    StochasticMatrix::from_rows(d, read_square(atoms[a]["matrix"], d, p + ".matrix"));
            } catch (const validation_error& e) {
                fail(p + ".matrix", e.what());
            }
            m.atoms.push_back(std::move(atom));
        }
        return m;
    }
    if (family == "totally-dependent") {
        check_keys(v, path, {"family", "terms"});
        TotallyDependent m;
        m.d = d;
        const json& terms = v.value("terms", json::array());
        if (!terms.is_array()) fail(join(path, "terms"), "must be an array");
        for (std::size_t t = 0; t < terms.size(); ++t) {
            std::string p = path + ".terms[" + std::to_string(t) + "]";
            check_keys(terms[t], p, {"weight", "map"});
            if (!terms[t].contains("map")) fail(p + ".map", "is required");
            TotallyDependent::Term term;
            term.map = read_state_vec(terms[t]["map"], d, p + ".map");
            if (static_cast<int>(term.map.size()) != d)
                fail(p + ".map", "must list an image for each of the " + std::to_string(d) +
                                     " states");
            term.weight = read_num(terms[t].value("weight", json(0.0)), p + ".weight");
            m.terms.push_back(std::move(term));
        }
        return m;
    }
    if (family == "stochastic-exchange") {
        check_keys(v, path, {"family", "atoms"});
        StochasticExchange m;
        m.d = d;
        const json& atoms = v.value("atoms", json::array());
        if (!atoms.is_array()) fail(join(path, "atoms"), "must be an array");
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            std::string p = path + ".atoms[" + std::to_string(a) + "]";
            check_keys(atoms[a], p, {"i", "j", "s", "v", "weight"});
            for (const char* key : {"i", "j"})
                if (!atoms[a].contains(key)) fail(p + "." + key, "is required");
            StochasticExchange::Atom atom;
            atom.i = read_state(atoms[a]["i"], d, p + ".i");
            atom.j = read_state(atoms[a]["j"], d, p + ".j");
            atom.s = read_num(atoms[a].value("s", json(1.0)), p + ".s");
            atom.v = read_num(atoms[a].value("v", json(1.0)), p + ".v");
            atom.weight = read_num(atoms[a].value("weight", json(0.0)), p + ".weight");
            m.atoms.push_back(atom);
        }
        return m;
    }

    auto read_eta = [&](const char* family_name) {
        if (!v.contains("eta")) fail(join(path, "eta"), "is required for " + std::string(family_name));
        auto eta = read_num_vec(v["eta"], join(path, "eta"));
        if (static_cast<int>(eta.size()) != d)
            fail(join(path, "eta"), "must have " + std::to_string(d) + " entries");
        return eta;
    };

    if (family == "multinomial-splitting" || family == "dirichlet-splitting") {
        check_keys(v, path, {"family", "eta", "groups"});
        auto eta = read_eta(family.c_str());
        auto groups = read_groups(v.value("groups", json::array()), d, join(path, "groups"));
        if (family == "multinomial-splitting")
            return MultinomialSplitting{d, std::move(eta), std::move(groups)};
        return DirichletSplitting{d, std::move(eta), std::move(groups)};
    }
    if (family == "harmonic-splitting") {
        check_keys(v, path, {"family", "eta", "components"});
        HarmonicSplitting m;
        m.d = d;
        m.eta = read_eta("harmonic-splitting");
        const json& comps = v.value("components", json::array());
        if (!comps.is_array()) fail(join(path, "components"), "must be an array");
        for (std::size_t c = 0; c < comps.size(); ++c) {
            std::string p = path + ".components[" + std::to_string(c) + "]";
            check_keys(comps[c], p, {"i", "targets", "weight"});
            if (!comps[c].contains("i")) fail(p + ".i", "is required");
            HarmonicSplitting::Component comp;
            comp.i = read_state(comps[c]["i"], d, p + ".i");
            comp.targets = read_state_vec(comps[c].value("targets", json::array()), d,
                                          p + ".targets");
            std::sort(comp.targets.begin(), comp.targets.end());
            comp.weight = read_num(comps[c].value("weight", json(0.0)), p + ".weight");
            m.components.push_back(std::move(comp));
        }
        return m;
    }
    if (family == "instant-exchange") {
        check_keys(v, path, {"family", "eta", "kappa", "groups"});
        InstantExchange m;
        m.d = d;
        m.eta = read_eta("instant-exchange");
        if (!v.contains("kappa")) fail(join(path, "kappa"), "is required");
        m.kappa = read_num(v["kappa"], join(path, "kappa"));
        m.groups = read_groups(v.value("groups", json::array()), d, join(path, "groups"));
        return m;
    }
    fail(join(path, "family"), "unknown measure family '" + family + "'");
}

CoalescenceSpec parse_coalescence(const json& v, int d, const std::string& path) {
    check_keys(v, path, {"rho", "q"});
    CoalescenceSpec spec;
    spec.rho.assign(static_cast<std::size_t>(d), 0.0);
    spec.q.assign(static_cast<std::size_t>(d), {});
    if (v.contains("rho")) {
        const json& rho = v["rho"];
        std::string p = join(path, "rho");
        if (rho.is_array() && !rho.empty() && rho[0].is_array()) {
            auto entries = read_square(rho, d, p);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    double val = entries[static_cast<std::size_t>(i) * d + k];
                    if (i != k && val != 0.0)
                        fail(p + "[" + std::to_string(i) + "][" + std::to_string(k) + "]",
                             "pairwise coalescence across types is not supported: every "
                             "merged pair shares one type, so rho must be diagonal");
                    if (i == k) spec.rho[static_cast<std::size_t>(i)] = val;
                }
        } else {
            auto diag = read_num_vec(rho, p);
            if (static_cast<int>(diag.size()) != d)
                fail(p, "must have " + std::to_string(d) + " entries");
            spec.rho = std::move(diag);
        }
    }
    if (v.contains("q")) {
        const json& q = v["q"];
        std::string p = join(path, "q");
        if (!q.is_array() || static_cast<int>(q.size()) != d)
            fail(p, "must be an array of " + std::to_string(d) + " atom lists, one per type");
        for (int i = 0; i < d; ++i) {
            const json& list = q[static_cast<std::size_t>(i)];
            std::string pi = p + "[" + std::to_string(i) + "]";
            if (!list.is_array()) fail(pi, "must be an array of atoms");
            for (std::size_t a = 0; a < list.size(); ++a) {
                std::string pa = pi + "[" + std::to_string(a) + "]";
                check_keys(list[a], pa, {"weight", "u"});
                if (!list[a].contains("u")) fail(pa + ".u", "is required");
                CoalescenceAtom atom;
                atom.weight = read_num(list[a].value("weight", json(0.0)), pa + ".weight");
                atom.u = read_num_vec(list[a]["u"], pa + ".u");
                if (static_cast<int>(atom.u.size()) != d)
                    fail(pa + ".u", "must have " + std::to_string(d) + " entries");
                spec.q[static_cast<std::size_t>(i)].push_back(std::move(atom));
            }
        }
    }
    return spec;
}

struct ScenarioKeys {
    std::set<std::string> extra;
};

const std::set<std::string> kCommonKeys = {"schema", "scenario", "d",   "a",
                                           "nu",     "seed",     "out", "epsilon"};

ScenarioKeys keys_for(const std::string& scenario) {
    if (scenario == "verify-consistency") return {{"n_max"}};
    if (scenario == "verify-exchangeability") return {{"n"}};
    if (scenario == "simulate-dice") return {{"x0", "horizon"}};
    if (scenario == "frequency-sde") return {{"r0", "horizon"}};
    if (scenario == "duality-check") return {{"r0", "b0", "horizon", "paths"}};
    if (scenario == "convergence-check") return {{"r0", "n_list", "horizon", "paths"}};
    if (scenario == "coalescent") return {{"coalescence", "partition", "horizon"}};
    if (scenario == "coalescent-consistency")
        return {{"coalescence", "partition", "m", "horizon", "paths"}};
    throw config_error("unknown scenario '" + scenario + "'");
}

ordered measure_to_json(const CoordinationMeasure& nu) {
    ordered out;
    struct Visitor {
        ordered& out;
        void operator()(const ZeroMeasure&) { out["family"] = "zero"; }
        void operator()(const AtomicMeasure& m) {
            out["family"] = "atomic";
            out["atoms"] = ordered::array();
            for (const auto& a : m.atoms) {
                ordered atom;
                atom["weight"] = a.weight;
                ordered rows = ordered::array();
                for (int i = 0; i < a.matrix.dim(); ++i) {
                    ordered row = ordered::array();
                    for (int j = 0; j < a.matrix.dim(); ++j) row.push_back(a.matrix(i, j));
                    rows.push_back(std::move(row));
                }
                atom["matrix"] = std::move(rows);
                out["atoms"].push_back(std::move(atom));
            }
        }
        void operator()(const TotallyDependent& m) {
            out["family"] = "totally-dependent";
            out["terms"] = ordered::array();
            for (const auto& t : m.terms) {
                ordered term;
                term["weight"] = t.weight;
                ordered map = ordered::array();
                for (int v : t.map) map.push_back(v + 1);
                term["map"] = std::move(map);
                out["terms"].push_back(std::move(term));
            }
        }
        void operator()(const StochasticExchange& m) {
            out["family"] = "stochastic-exchange";
            out["atoms"] = ordered::array();
            for (const auto& a : m.atoms) {
                ordered atom;
                atom["i"] = a.i + 1;
                atom["j"] = a.j + 1;
                atom["s"] = a.s;
                atom["v"] = a.v;
                atom["weight"] = a.weight;
                out["atoms"].push_back(std::move(atom));
            }
        }
        static ordered groups_json(const std::vector<GroupWeight>& groups) {
            ordered out = ordered::array();
            for (const auto& g : groups) {
                ordered gw;
                ordered members = ordered::array();
                for (int m : g.members) members.push_back(m + 1);
                gw["members"] = std::move(members);
                gw["weight"] = g.weight;
                out.push_back(std::move(gw));
            }
            return out;
        }
        void operator()(const MultinomialSplitting& m) {
            out["family"] = "multinomial-splitting";
            out["eta"] = m.eta;
            out["groups"] = groups_json(m.groups);
        }
        void operator()(const DirichletSplitting& m) {
            out["family"] = "dirichlet-splitting";
            out["eta"] = m.eta;
            out["groups"] = groups_json(m.groups);
        }
        void operator()(const HarmonicSplitting& m) {
            out["family"] = "harmonic-splitting";
            out["eta"] = m.eta;
            out["components"] = ordered::array();
            for (const auto& c : m.components) {
                ordered comp;
                comp["i"] = c.i + 1;
                ordered targets = ordered::array();
                for (int t : c.targets) targets.push_back(t + 1);
                comp["targets"] = std::move(targets);
                comp["weight"] = c.weight;
                out["components"].push_back(std::move(comp));
            }
        }
        void operator()(const InstantExchange& m) {
            out["family"] = "instant-exchange";
            out["eta"] = m.eta;
            out["kappa"] = m.kappa;
            out["groups"] = groups_json(m.groups);
        }
    };
    std::visit(Visitor{out}, nu);
    return out;
}

ordered build_resolved(const ScenarioConfig& cfg) {
    const int d = cfg.params.d;
    ordered out;
    out["schema"] = cfg.schema;
    out["scenario"] = cfg.scenario;
    out["d"] = d;
    ordered a = ordered::array();
    for (int i = 0; i < d; ++i) {
        ordered row = ordered::array();
        for (int j = 0; j < d; ++j) row.push_back(cfg.params.a(i, j));
        a.push_back(std::move(row));
    }
    out["a"] = std::move(a);
    out["nu"] = measure_to_json(cfg.params.nu);

    const auto extra = keys_for(cfg.scenario).extra;
    auto has = [&](const char* key) { return extra.find(key) != extra.end(); };
    if (has("n_max")) out["n_max"] = cfg.n_max;
    if (has("n")) out["n"] = cfg.n;
    if (has("m")) out["m"] = cfg.m;
    if (has("n_list")) out["n_list"] = cfg.n_list;
    if (has("x0")) {
        ordered x0 = ordered::array();
        for (int s : cfg.x0) x0.push_back(s + 1);
        out["x0"] = std::move(x0);
    }
    if (has("r0")) out["r0"] = cfg.r0;
    if (has("b0")) out["b0"] = cfg.b0;
    if (has("coalescence")) {
        ordered coal;
        coal["rho"] = cfg.coal.rho;
        ordered q = ordered::array();
        for (const auto& list : cfg.coal.q) {
            ordered atoms = ordered::array();
            for (const auto& atom : list) {
                ordered a_json;
                a_json["weight"] = atom.weight;
                a_json["u"] = atom.u;
                atoms.push_back(std::move(a_json));
            }
            q.push_back(std::move(atoms));
        }
        coal["q"] = std::move(q);
        out["coalescence"] = std::move(coal);
        out["partition"] = cfg.partition;
    }
    if (has("horizon")) out["horizon"] = cfg.horizon;
    if (has("paths")) out["paths"] = cfg.paths;
    out["epsilon"] = cfg.epsilon;
    if (cfg.seed) out["seed"] = *cfg.seed;
    return out;
}

} // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "verify-consistency", "verify-exchangeability", "simulate-dice",
        "frequency-sde",      "duality-check",          "convergence-check",
        "coalescent",         "coalescent-consistency"};
    return names;
}

ScenarioConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("config root must be a JSON object");

    ScenarioConfig cfg;
    if (doc.contains("schema")) {
        cfg.schema = read_int(doc["schema"], "schema");
        if (cfg.schema != 1)
            fail("schema", "unsupported schema version " + std::to_string(cfg.schema) +
                               " (this build reads version 1)");
    }
    if (!doc.contains("scenario")) fail("scenario", "is required");
    cfg.scenario = read_str(doc["scenario"], "scenario");

    const auto extra = keys_for(cfg.scenario).extra; // also validates the name
    std::set<std::string> allowed = kCommonKeys;
    allowed.insert(extra.begin(), extra.end());
    check_keys(doc, "", allowed);

    if (!doc.contains("d")) fail("d", "is required");
    const int d = read_int(doc["d"], "d");
    if (d < 1 || d > 64) fail("d", "must be between 1 and 64");
    cfg.params.d = d;

    if (doc.contains("a")) {
        try {
            cfg.params.a = RateMatrixA::from_entries(d, read_square(doc["a"], d, "a"));
        } catch (const validation_error& e) {
            fail("a", e.what());
        }
    } else {
        cfg.params.a = RateMatrixA(d);
    }
    if (doc.contains("nu")) cfg.params.nu = parse_measure(doc["nu"], d, "nu");

    if (doc.contains("seed")) cfg.seed = read_u64(doc["seed"], "seed");
    if (doc.contains("out")) {
        cfg.out_dir = read_str(doc["out"], "out");
        cfg.out_from_config = true;
    }
    if (doc.contains("epsilon")) cfg.epsilon = read_num(doc["epsilon"], "epsilon");

    auto has = [&](const char* key) { return extra.find(key) != extra.end(); };
    if (has("n_max") && doc.contains("n_max")) cfg.n_max = read_int(doc["n_max"], "n_max");
    if (has("n") && doc.contains("n")) cfg.n = read_int(doc["n"], "n");
    if (has("m") && doc.contains("m")) cfg.m = read_int(doc["m"], "m");
    if (has("n_list") && doc.contains("n_list"))
        cfg.n_list = read_int_vec(doc["n_list"], "n_list");
    if (has("horizon") && doc.contains("horizon"))
        cfg.horizon = read_num(doc["horizon"], "horizon");
    if (has("paths") && doc.contains("paths")) cfg.paths = read_i64(doc["paths"], "paths");
    if (has("x0")) {
        if (!doc.contains("x0")) fail("x0", "is required for simulate-dice");
        cfg.x0 = read_state_vec(doc["x0"], d, "x0");
    }
    if (has("r0")) {
        if (!doc.contains("r0")) fail("r0", "is required for " + cfg.scenario);
        cfg.r0 = read_num_vec(doc["r0"], "r0");
    }
    if (has("b0")) {
        if (!doc.contains("b0")) fail("b0", "is required for duality-check");
        cfg.b0 = read_int_vec(doc["b0"], "b0");
    }
    if (has("coalescence")) {
        if (!doc.contains("coalescence")) fail("coalescence", "is required for " + cfg.scenario);
        cfg.coal = parse_coalescence(doc["coalescence"], d, "coalescence");
        if (!doc.contains("partition")) fail("partition", "is required for " + cfg.scenario);
        cfg.partition = read_str(doc["partition"], "partition");
    }

    cfg.validate();
    return cfg;
}

void ScenarioConfig::validate() const {
    params.validate();
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        fail("epsilon", "must lie strictly between 0 and 1");
    if (!(horizon > 0.0)) fail("horizon", "must be positive");
    if (paths < 1) fail("paths", "must be at least 1");
    const int d = params.d;

    if (scenario == "verify-consistency") {
        if (n_max < 1) fail("n_max", "must be at least 1");
    } else if (scenario == "verify-exchangeability") {
        if (n < 1) fail("n", "must be at least 1");
        if (n > 8) fail("n", "permutation sweep is capped at n = 8");
    } else if (scenario == "simulate-dice") {
        if (x0.empty()) fail("x0", "needs at least one chain");
    } else if (scenario == "frequency-sde" || scenario == "duality-check" ||
               scenario == "convergence-check") {
        if (static_cast<int>(r0.size()) != d)
            fail("r0", "must have " + std::to_string(d) + " entries");
        FrequencyState r = r0;
        try {
            validate_frequency(r);
        } catch (const error& e) {
            fail("r0", e.what());
        }
        if (scenario == "duality-check") {
            if (static_cast<int>(b0.size()) != d)
                fail("b0", "must have " + std::to_string(d) + " entries");
            int total = 0;
            for (int v : b0) {
                if (v < 0) fail("b0", "entries must be nonnegative");
                total += v;
            }
            if (total < 1) fail("b0", "must count at least one dual particle");
        }
        if (scenario == "convergence-check") {
            if (n_list.empty()) fail("n_list", "must not be empty");
            for (std::size_t i = 0; i < n_list.size(); ++i) {
                if (n_list[i] < 1) fail("n_list", "entries must be positive");
                if (i > 0 && n_list[i] <= n_list[i - 1])
                    fail("n_list", "must be strictly increasing");
            }
        }
    } else if (scenario == "coalescent" || scenario == "coalescent-consistency") {
        CoalescentParams cp{coal, params};
        try {
            cp.validate();
        } catch (const error& e) {
            fail("coalescence", e.what());
        }
        TypedPartition pi0;
        try {
            pi0 = TypedPartition::parse(partition, d);
        } catch (const error& e) {
            fail("partition", e.what());
        }
        if (pi0.element_count() > kCoalescentElementCap)
            fail("partition", "at most " + std::to_string(kCoalescentElementCap) +
                                  " elements are supported");
        if (scenario == "coalescent-consistency") {
            if (m < 1) fail("m", "must be at least 1");
            if (m > pi0.element_count())
                fail("m", "cannot exceed the partition's element count");
        }
    } else {
        throw config_error("unknown scenario '" + scenario + "'");
    }
}

namespace detail {

namespace {

    // Round-trip-exact float formatting, applied uniformly to every artifact.
    struct Dumper {
        std::string out;
        void value(const ordered& j) {
            switch (j.type()) {
            case ordered::value_t::object: {
                out += '{';
                bool first = true;
                for (const auto& item : j.items()) {
                    if (!first) out += ',';
                    first = false;
                    string(item.key());
                    out += ':';
                    value(item.value());
                }
                out += '}';
                break;
            }
            case ordered::value_t::array: {
                out += '[';
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ',';
                    value(j[i]);
                }
                out += ']';
                break;
            }
            case ordered::value_t::string:
                string(j.get<std::string>());
                break;
            case ordered::value_t::boolean:
                out += j.get<bool>() ? "true" : "false";
                break;
            case ordered::value_t::number_float: {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
                out += buf;
                break;
            }
            case ordered::value_t::number_integer:
                out += std::to_string(j.get<std::int64_t>());
                break;
            case ordered::value_t::number_unsigned:
                out += std::to_string(j.get<std::uint64_t>());
                break;
            default:
                out += "null";
                break;
            }
        }
        void string(const std::string& s) {
            out += '"';
            for (char c : s) {
                switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
                }
            }
            out += '"';
        }
    };

} // namespace

std::string dump_json17(const ojson& j) {
    Dumper dumper;
    dumper.value(j);
    return std::move(dumper.out);
}

ojson resolved_config(const ScenarioConfig& cfg) { return build_resolved(cfg); }

} // namespace detail

std::string resolved_config_json(const ScenarioConfig& cfg) {
    return detail::dump_json17(detail::resolved_config(cfg));
}

std::string scenario_hash(const ScenarioConfig& cfg) {
    const std::string text = resolved_config_json(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace dicekit
