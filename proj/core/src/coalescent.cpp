#include "dicekit/coalescent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

int TypedPartition::element_count() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.size());
    return n;
}

void TypedPartition::canonicalize() {
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::vector<std::size_t> order(blocks.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [this](std::size_t x, std::size_t y) {
        return blocks[x].front() < blocks[y].front();
    });
    std::vector<std::vector<int>> nb;
    std::vector<int> nt;
    nb.reserve(blocks.size());
    nt.reserve(blocks.size());
    for (std::size_t idx : order) {
        nb.push_back(std::move(blocks[idx]));
        nt.push_back(types[idx]);
    }
    blocks = std::move(nb);
    types = std::move(nt);
}

void TypedPartition::validate(int d) const {
    if (blocks.size() != types.size())
        throw validation_error("typed partition: one type per block required");
    if (blocks.empty()) throw validation_error("typed partition: at least one block required");
    int n = element_count();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& b : blocks) {
        if (b.empty()) throw validation_error("typed partition: empty block");
        for (std::size_t e = 0; e < b.size(); ++e) {
            int v = b[e];
            if (v < 0 || v >= n)
                throw validation_error("typed partition: blocks must cover 1..n exactly");
            if (seen[static_cast<std::size_t>(v)])
                throw validation_error("typed partition: duplicate element");
            seen[static_cast<std::size_t>(v)] = 1;
            if (e > 0 && b[e] <= b[e - 1])
                throw validation_error("typed partition: block elements must be sorted");
        }
    }
    for (std::size_t k = 1; k < blocks.size(); ++k)
        if (blocks[k].front() <= blocks[k - 1].front())
            throw validation_error("typed partition: blocks must be ordered by least element");
    for (int t : types)
        if (t < 0 || t >= d) throw validation_error("typed partition: type out of range");
}

TypedPartition TypedPartition::singletons(const Config& element_types) {
    TypedPartition pi;
    pi.blocks.reserve(element_types.size());
    pi.types.reserve(element_types.size());
    for (std::size_t l = 0; l < element_types.size(); ++l) {
        pi.blocks.push_back({static_cast<int>(l)});
        pi.types.push_back(element_types[l]);
    }
    return pi;
}

std::string TypedPartition::serialize() const {
    std::string out;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k > 0) out += "|";
        for (std::size_t e = 0; e < blocks[k].size(); ++e) {
            if (e > 0) out += ",";
            out += std::to_string(blocks[k][e] + 1);
        }
        out += ":" + std::to_string(types[k] + 1);
    }
    return out;
}

TypedPartition TypedPartition::parse(const std::string& text, int d) {
    auto to_int = [](const std::string& s) {
        std::size_t used = 0;
        int v;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            throw validation_error("typed partition: bad integer '" + s + "'");
        }
        if (used != s.size())
            throw validation_error("typed partition: bad integer '" + s + "'");
        return v;
    };
    TypedPartition pi;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('|', pos);
        if (end == std::string::npos) end = text.size();
        std::string part = text.substr(pos, end - pos);
        std::size_t colon = part.rfind(':');
        if (colon == std::string::npos)
            throw validation_error("typed partition: block '" + part + "' lacks a :type suffix");
        std::vector<int> block;
        std::size_t p = 0;
        const std::string elems = part.substr(0, colon);
        while (p <= elems.size()) {
            std::size_t q = elems.find(',', p);
            if (q == std::string::npos) q = elems.size();
            block.push_back(to_int(elems.substr(p, q - p)) - 1);
            p = q + 1;
        }
        pi.blocks.push_back(std::move(block));
        pi.types.push_back(to_int(part.substr(colon + 1)) - 1);
        pos = end + 1;
        if (end == text.size()) break;
    }
    pi.canonicalize();
    pi.validate(d);
    return pi;
}

TypedPartition TypedPartition::restricted(int m) const {
    TypedPartition out;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        std::vector<int> kept;
        for (int e : blocks[k])
            if (e < m) kept.push_back(e);
        if (!kept.empty()) {
            out.blocks.push_back(std::move(kept));
            out.types.push_back(types[k]);
        }
    }
    out.canonicalize();
    return out;
}

void CoalescenceSpec::validate(int d) const {
    if (rho.size() != static_cast<std::size_t>(d))
        throw validation_error("coalescence spec: rho must have one entry per type (off-type "
                               "rho_ik are fixed to zero by convention)");
    for (double r : rho)
        if (!(r >= 0.0)) throw validation_error("coalescence spec: negative rho");
    if (q.size() != static_cast<std::size_t>(d))
        throw validation_error("coalescence spec: one atom list per target type required");
    for (const auto& atoms : q)
        for (const auto& atom : atoms) {
            if (!(atom.weight >= 0.0))
                throw validation_error("coalescence spec: negative atom weight");
            if (atom.u.size() != static_cast<std::size_t>(d))
                throw validation_error("coalescence spec: atom vector must have length d");
            bool all_zero = true;
            for (double v : atom.u) {
                if (!(v >= 0.0 && v <= 1.0))
                    throw validation_error("coalescence spec: atom entries must lie in [0,1]");
                if (v > 0.0) all_zero = false;
            }
            if (all_zero)
                throw validation_error("coalescence spec: the all-zero atom would merge "
                                       "nothing and is rejected");
        }
}

bool CoalescenceSpec::is_zero() const {
    for (double r : rho)
        if (r > 0.0) return false;
    for (const auto& atoms : q)
        for (const auto& atom : atoms)
            if (atom.weight > 0.0) return false;
    return true;
}

void CoalescentParams::validate() const {
    dice.validate();
    coal.validate(dice.d);
}

TypedPartition coal_apply(const TypedPartition& pi, const std::vector<int>& j, int type) {
    if (j.size() < 2) throw validation_error("coal_apply: a merger needs at least two blocks");
    std::vector<char> in_j(pi.blocks.size(), 0);
    for (int idx : j) {
        if (idx < 0 || idx >= pi.block_count())
            throw validation_error("coal_apply: block index out of range");
        if (in_j[static_cast<std::size_t>(idx)])
            throw validation_error("coal_apply: duplicate block index");
        in_j[static_cast<std::size_t>(idx)] = 1;
    }
    TypedPartition out;
    std::vector<int> merged;
    for (std::size_t k = 0; k < pi.blocks.size(); ++k) {
        if (in_j[k]) {
            merged.insert(merged.end(), pi.blocks[k].begin(), pi.blocks[k].end());
        } else {
            out.blocks.push_back(pi.blocks[k]);
            out.types.push_back(pi.types[k]);
        }
    }
    out.blocks.push_back(std::move(merged));
    out.types.push_back(type);
    out.canonicalize();
    return out;
}

TypedPartition muta_apply(const TypedPartition& pi, const std::vector<int>& new_types) {
    if (new_types.size() != pi.blocks.size())
        throw validation_error("muta_apply: need one type per block");
    TypedPartition out = pi;
    out.types = new_types;
    return out;
}

double coal_rate(const TypedPartition& pi, const std::vector<int>& j, int type,
                 const CoalescenceSpec& spec) {
    if (j.size() < 2) throw validation_error("coal_rate: mergers involve at least two blocks");
    int d = static_cast<int>(spec.rho.size());
    std::vector<int> participants(static_cast<std::size_t>(d), 0);
    std::vector<int> blocks_of_type(static_cast<std::size_t>(d), 0);
    for (int t : pi.types) ++blocks_of_type[static_cast<std::size_t>(t)];
    std::vector<char> seen(pi.blocks.size(), 0);
    for (int idx : j) {
        if (idx < 0 || idx >= pi.block_count())
            throw validation_error("coal_rate: block index out of range");
        if (seen[static_cast<std::size_t>(idx)])
            throw validation_error("coal_rate: duplicate block index");
        seen[static_cast<std::size_t>(idx)] = 1;
        ++participants[static_cast<std::size_t>(pi.types[static_cast<std::size_t>(idx)])];
    }
    NeumaierSum rate;
    if (j.size() == 2 && participants[static_cast<std::size_t>(type)] == 2)
        rate.add(spec.rho[static_cast<std::size_t>(type)]);
    for (const auto& atom : spec.q[static_cast<std::size_t>(type)]) {
        double v = atom.weight;
        for (int k = 0; k < d && v != 0.0; ++k) {
            int c = participants[static_cast<std::size_t>(k)];
            int outside = blocks_of_type[static_cast<std::size_t>(k)] - c;
            if (c > 0) v *= std::pow(atom.u[static_cast<std::size_t>(k)], c);
            if (outside > 0) v *= std::pow(1.0 - atom.u[static_cast<std::size_t>(k)], outside);
        }
        rate.add(v);
    }
    return rate.value();
}

double switch_rate(const TypedPartition& pi, const std::vector<int>& new_types,
                   const DiceParams& p) {
    if (new_types.size() != pi.blocks.size())
        throw validation_error("switch_rate: need one type per block");
    if (new_types == pi.types)
        throw validation_error("switch_rate: new types equal current types (not a transition)");
    return config_rate(p, pi.block_types(), Config(new_types.begin(), new_types.end()));
}

TypedPartition CoalescentTrajectory::at(double t) const {
    const TypedPartition* state = &pi0;
    for (const auto& e : events) {
        if (e.time > t) break;
        state = &e.state;
    }
    return *state;
}

namespace {

struct MergerTable {
    std::vector<std::vector<int>> subsets; // block index sets, |J| >= 2
    std::vector<int> target_type;
    std::vector<double> rates;
    double total = 0.0;

    void rebuild(const TypedPartition& pi, const CoalescenceSpec& spec, int d) {
        subsets.clear();
        target_type.clear();
        rates.clear();
        total = 0.0;
        if (spec.is_zero()) return;
        int blocks = pi.block_count();
        std::uint32_t full = 1u << blocks;
        for (std::uint32_t mask = 0; mask < full; ++mask) {
            if (std::popcount(mask) < 2) continue;
            std::vector<int> j;
            for (int k = 0; k < blocks; ++k)
                if (mask & (1u << k)) j.push_back(k);
            for (int i = 0; i < d; ++i) {
                double rate = coal_rate(pi, j, i, spec);
                if (rate > 0.0) {
                    subsets.push_back(j);
                    target_type.push_back(i);
                    rates.push_back(rate);
                    total += rate;
                }
            }
        }
    }
};

template <typename Sink>
TypedPartition run_coalescent(const TypedPartition& pi0, const CoalescentParams& params,
                              double horizon, double epsilon, std::uint64_t seed,
                              std::uint64_t stream, Sink&& sink) {
    params.validate();
    pi0.validate(params.dice.d);
    if (pi0.element_count() > kCoalescentElementCap)
        throw resource_error("simulate_coalescent: more than " +
                             std::to_string(kCoalescentElementCap) + " elements");
    if (!(horizon >= 0.0))
        throw validation_error("simulate_coalescent: horizon must be nonnegative");
    int d = params.dice.d;
    TruncatedMeasure truncated = truncate(params.dice.nu, d, epsilon);
    double coord_mass = truncated.mass();
    RngStream rng = RngStream::substream(seed, stream);

    TypedPartition pi = pi0;
    MergerTable mergers;
    mergers.rebuild(pi, params.coal, d);
    double t = 0.0;
    std::vector<double> row(static_cast<std::size_t>(d));

    while (true) {
        double ind_rate = 0.0;
        for (int type : pi.types) ind_rate += params.dice.a.row_out(type);
        double total = mergers.total + ind_rate + coord_mass;
        if (!(total > 0.0)) break;
        t += rng.exponential(total);
        if (t > horizon) break;

        double pick = rng.uniform() * total;
        if (pick < mergers.total) {
            std::size_t e = rng.categorical(mergers.rates, mergers.total);
            std::vector<int> j = mergers.subsets[e];
            int target = mergers.target_type[e];
            pi = coal_apply(pi, j, target);
            mergers.rebuild(pi, params.coal, d);
            sink.merger(t, std::move(j), target, pi);
        } else if (pick < mergers.total + ind_rate) {
            // Single-block switch: choose the block proportionally to its outflow.
            double acc = pick - mergers.total;
            int chosen = -1;
            for (std::size_t k = 0; k < pi.types.size(); ++k) {
                acc -= params.dice.a.row_out(pi.types[k]);
                if (acc < 0.0) {
                    chosen = static_cast<int>(k);
                    break;
                }
            }
            if (chosen < 0) chosen = static_cast<int>(pi.types.size()) - 1;
            int from = pi.types[static_cast<std::size_t>(chosen)];
            for (int jj = 0; jj < d; ++jj) row[static_cast<std::size_t>(jj)] = params.dice.a(from, jj);
            int to = static_cast<int>(rng.categorical(row, params.dice.a.row_out(from)));
            std::vector<int> nt = pi.types;
            nt[static_cast<std::size_t>(chosen)] = to;
            pi = muta_apply(pi, nt);
            bool changed = to != from;
            if (changed) mergers.rebuild(pi, params.coal, d);
            sink.switched(t, std::move(nt), changed, pi);
        } else {
            StochasticMatrix u = truncated.sample(rng);
            std::vector<int> nt(pi.types.size());
            bool changed = false;
            for (std::size_t k = 0; k < pi.types.size(); ++k) {
                int from = pi.types[k];
                for (int jj = 0; jj < d; ++jj)
                    row[static_cast<std::size_t>(jj)] = u(from, jj);
                nt[k] = static_cast<int>(rng.categorical(row, 1.0));
                if (nt[k] != from) changed = true;
            }
            pi = muta_apply(pi, nt);
            if (changed) mergers.rebuild(pi, params.coal, d);
            sink.switched(t, std::move(nt), changed, pi);
        }
    }
    return pi;
}

struct RecordingCoalSink {
    std::vector<CoalescentEvent>& events;
    void merger(double t, std::vector<int> j, int type, const TypedPartition& state) {
        CoalescentEvent e;
        e.time = t;
        e.merger = true;
        e.participants = std::move(j);
        e.merged_type = type;
        e.changed = true;
        e.state = state;
        events.push_back(std::move(e));
    }
    void switched(double t, std::vector<int> nt, bool changed, const TypedPartition& state) {
        CoalescentEvent e;
        e.time = t;
        e.merger = false;
        e.new_types = std::move(nt);
        e.changed = changed;
        e.state = state;
        events.push_back(std::move(e));
    }
};

struct DiscardingCoalSink {
    void merger(double, std::vector<int>&&, int, const TypedPartition&) {}
    void switched(double, std::vector<int>&&, bool, const TypedPartition&) {}
};

void enumerate_partitions_rec(int m, int element, std::vector<std::vector<int>>& blocks,
                              std::vector<std::vector<std::vector<int>>>& out) {
    if (element == m) {
        out.push_back(blocks);
        return;
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        blocks[k].push_back(element);
        enumerate_partitions_rec(m, element + 1, blocks, out);
        blocks[k].pop_back();
    }
    blocks.push_back({element});
    enumerate_partitions_rec(m, element + 1, blocks, out);
    blocks.pop_back();
}

} // namespace

CoalescentTrajectory simulate_coalescent(const TypedPartition& pi0,
                                         const CoalescentParams& params, double horizon,
                                         double epsilon, std::uint64_t seed,
                                         std::uint64_t stream) {
    CoalescentTrajectory traj;
    traj.pi0 = pi0;
    traj.horizon = horizon;
    traj.epsilon = epsilon;
    RecordingCoalSink sink{traj.events};
    traj.final_state = run_coalescent(pi0, params, horizon, epsilon, seed, stream, sink);
    return traj;
}

std::vector<TypedPartition> enumerate_typed_partitions(int m, int d) {
    if (m < 1 || m > kCoalescentElementCap)
        throw validation_error("enumerate_typed_partitions: m out of range");
    std::vector<std::vector<std::vector<int>>> partitions;
    std::vector<std::vector<int>> blocks;
    enumerate_partitions_rec(m, 0, blocks, partitions);
    std::vector<TypedPartition> out;
    for (auto& p : partitions) {
        auto b = static_cast<int>(p.size());
        std::vector<int> types(static_cast<std::size_t>(b), 0);
        while (true) {
            TypedPartition pi;
            pi.blocks = p;
            pi.types = types;
            pi.canonicalize();
            out.push_back(std::move(pi));
            int k = b - 1;
            while (k >= 0 && types[static_cast<std::size_t>(k)] == d - 1) {
                types[static_cast<std::size_t>(k)] = 0;
                --k;
            }
            if (k < 0) break;
            ++types[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

DistributionTestReport coalescent_consistency_test(
    const TypedPartition& pi0, const CoalescentParams& params, int m, double horizon,
    std::int64_t paths, std::uint64_t seed, double epsilon,
    const std::optional<CoalescentParams>& params_m) {
    params.validate();
    pi0.validate(params.dice.d);
    int n = pi0.element_count();
    if (m < 1 || m > n) throw validation_error("coalescent consistency: need 1 <= m <= n");
    if (paths < 1) throw validation_error("coalescent consistency: need at least one path");
    const CoalescentParams& pm = params_m ? *params_m : params;

    std::map<std::string, std::size_t> cell_of;
    for (const TypedPartition& pi : enumerate_typed_partitions(m, params.dice.d)) {
        std::size_t next = cell_of.size();
        cell_of.emplace(pi.serialize(), next);
    }
    std::vector<std::int64_t> counts_n(cell_of.size(), 0);
    std::vector<std::int64_t> counts_m(cell_of.size(), 0);
    TypedPartition pi0m = pi0.restricted(m);

    DiscardingCoalSink sink;
    for (std::int64_t path = 0; path < paths; ++path) {
        TypedPartition full = run_coalescent(pi0, params, horizon, epsilon, seed,
                                             static_cast<std::uint64_t>(2 * path), sink);
        ++counts_n[cell_of.at(full.restricted(m).serialize())];
        TypedPartition direct = run_coalescent(pi0m, pm, horizon, epsilon, seed,
                                               static_cast<std::uint64_t>(2 * path + 1), sink);
        ++counts_m[cell_of.at(direct.serialize())];
    }
    return compare_distributions(counts_n, counts_m, std::nullopt);
}

} // namespace dicekit
