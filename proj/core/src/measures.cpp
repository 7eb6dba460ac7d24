#include "dicekit/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

namespace {

constexpr double kRowSumKeepTol = 1e-12;
constexpr double kRowSumFixTol = 1e-9;

std::string ij_label(int i, int j) {
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

std::string group_label(const std::vector<int>& members) {
    std::string s = "{";
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (m > 0) s += ",";
        s += std::to_string(members[m] + 1);
    }
    return s + "}";
}

/// B(a, m) for integer m >= 1, as an exact product (no lgamma cancellation).
double beta_int(double a, int m) {
    double value = 1.0;
    for (int t = 1; t < m; ++t) value *= t;
    for (int t = 0; t < m; ++t) value /= a + t;
    return value;
}

} // namespace

StochasticMatrix StochasticMatrix::from_rows(int d, std::vector<double> entries) {
    if (d <= 0) throw validation_error("stochastic matrix: dimension must be positive");
    if (entries.size() != static_cast<std::size_t>(d) * d)
        throw validation_error("stochastic matrix: expected " + std::to_string(d * d) +
                               " entries, got " + std::to_string(entries.size()));
    for (int i = 0; i < d; ++i) {
        double sum = 0.0;
        for (int j = 0; j < d; ++j) {
            double& u = entries[static_cast<std::size_t>(i) * d + j];
            if (u < 0.0) {
                if (u < -1e-15)
                    throw validation_error("stochastic matrix: negative entry at " + ij_label(i, j));
                u = 0.0;
            }
            sum += u;
        }
        double err = std::abs(sum - 1.0);
        if (err > kRowSumKeepTol) {
            if (err > kRowSumFixTol) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6g", sum);
                throw validation_error("stochastic matrix: row " + std::to_string(i + 1) +
                                       " sums to " + buf);
            }
            for (int j = 0; j < d; ++j) entries[static_cast<std::size_t>(i) * d + j] /= sum;
        }
    }
    StochasticMatrix u;
    u.d_ = d;
    u.a_ = std::move(entries);
    return u;
}

StochasticMatrix StochasticMatrix::identity(int d) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i) * d + i] = 1.0;
    return from_rows(d, std::move(e));
}

bool StochasticMatrix::is_doubly_stochastic(double tol) const {
    for (int j = 0; j < d_; ++j) {
        double sum = 0.0;
        for (int i = 0; i < d_; ++i) sum += (*this)(i, j);
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

StochasticMatrix StochasticMatrix::transposed_checked() const {
    std::vector<double> e(a_.size());
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) e[static_cast<std::size_t>(j) * d_ + i] = (*this)(i, j);
    return from_rows(d_, std::move(e));
}

double StochasticMatrix::min_diagonal() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d_; ++i) m = std::min(m, (*this)(i, i));
    return m;
}

double StochasticMatrix::diagonal_deficit() const {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += 1.0 - (*this)(i, i);
    return s;
}

double StochasticMatrix::monomial(const CountMatrix& k) const {
    if (k.dim() != d_) throw validation_error("monomial: dimension mismatch");
    double value = 1.0;
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
            int e = k(i, j);
            if (e > 0) value *= std::pow((*this)(i, j), e);
        }
    return value;
}

RateMatrixA RateMatrixA::from_entries(int d, const std::vector<double>& entries) {
    if (d <= 0) throw validation_error("rate matrix: dimension must be positive");
    if (entries.size() != static_cast<std::size_t>(d) * d)
        throw validation_error("rate matrix: expected " + std::to_string(d * d) + " entries");
    RateMatrixA a(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            double v = entries[static_cast<std::size_t>(i) * d + j];
            if (!(v >= 0.0))
                throw validation_error("rate matrix: negative rate at " + ij_label(i, j));
            a.a_[static_cast<std::size_t>(i) * d + j] = v;
        }
    return a;
}

void RateMatrixA::set(int i, int j, double v) {
    if (i < 0 || j < 0 || i >= d_ || j >= d_ || i == j)
        throw validation_error("rate matrix: bad index " + ij_label(i, j));
    if (!(v >= 0.0)) throw validation_error("rate matrix: negative rate at " + ij_label(i, j));
    a_[static_cast<std::size_t>(i) * d_ + j] = v;
}

double RateMatrixA::row_out(int i) const {
    double s = 0.0;
    for (int j = 0; j < d_; ++j)
        if (j != i) s += (*this)(i, j);
    return s;
}

bool RateMatrixA::is_balanced(double tol) const {
    for (int i = 0; i < d_; ++i) {
        double net = 0.0;
        for (int j = 0; j < d_; ++j)
            if (j != i) net += (*this)(i, j) - (*this)(j, i);
        if (std::abs(net) > tol) return false;
    }
    return true;
}

namespace {

void check_eta(const std::vector<double>& eta, int d, const char* family) {
    if (eta.size() != static_cast<std::size_t>(d))
        throw validation_error(std::string(family) + ": eta must have length d");
    for (int i = 0; i < d; ++i)
        if (!(eta[i] > 0.0))
            throw validation_error(std::string(family) + ": eta[" + std::to_string(i + 1) +
                                   "] must be positive (the mass of this component is infinite "
                                   "otherwise)");
}

void check_group(const std::vector<int>& members, int d, const char* family) {
    if (members.size() < 2)
        throw validation_error(std::string(family) + ": group " + group_label(members) +
                               " needs at least two members");
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (members[m] < 0 || members[m] >= d)
            throw validation_error(std::string(family) + ": group member out of range");
        if (m > 0 && members[m] <= members[m - 1])
            throw validation_error(std::string(family) + ": group " + group_label(members) +
                                   " must be sorted with distinct members");
    }
}

void check_weight(double w, const char* family) {
    if (!(w >= 0.0)) throw validation_error(std::string(family) + ": negative weight");
}

struct ValidateVisitor {
    int d;

    void operator()(const ZeroMeasure&) const {}

    void operator()(const AtomicMeasure& m) const {
        for (const auto& atom : m.atoms) {
            check_weight(atom.weight, "atomic measure");
            if (atom.matrix.dim() != d)
                throw validation_error("atomic measure: atom dimension mismatch");
        }
    }

    void operator()(const TotallyDependent& m) const {
        if (m.d != d) throw validation_error("totally dependent: dimension mismatch");
        for (const auto& term : m.terms) {
            check_weight(term.weight, "totally dependent");
            if (term.map.size() != static_cast<std::size_t>(d))
                throw validation_error("totally dependent: map must have length d");
            for (int v : term.map)
                if (v < 0 || v >= d)
                    throw validation_error("totally dependent: map value out of range");
        }
    }

    void operator()(const StochasticExchange& m) const {
        if (m.d != d) throw validation_error("stochastic exchange: dimension mismatch");
        for (const auto& atom : m.atoms) {
            check_weight(atom.weight, "stochastic exchange");
            if (atom.i < 0 || atom.j < 0 || atom.i >= d || atom.j >= d || atom.i == atom.j)
                throw validation_error("stochastic exchange: atom needs distinct states in range");
            if (!(atom.s >= 0.0 && atom.s <= 1.0 && atom.v >= 0.0 && atom.v <= 1.0))
                throw validation_error("stochastic exchange: retention probabilities must lie "
                                       "in [0,1]");
        }
    }

    void operator()(const MultinomialSplitting& m) const {
        if (m.d != d) throw validation_error("multinomial splitting: dimension mismatch");
        check_eta(m.eta, d, "multinomial splitting");
        for (const auto& g : m.groups) {
            check_group(g.members, d, "multinomial splitting");
            check_weight(g.weight, "multinomial splitting");
        }
    }

    void operator()(const DirichletSplitting& m) const {
        if (m.d != d) throw validation_error("dirichlet splitting: dimension mismatch");
        check_eta(m.eta, d, "dirichlet splitting");
        for (const auto& g : m.groups) {
            check_group(g.members, d, "dirichlet splitting");
            check_weight(g.weight, "dirichlet splitting");
        }
    }

    void operator()(const HarmonicSplitting& m) const {
        if (m.d != d) throw validation_error("harmonic splitting: dimension mismatch");
        check_eta(m.eta, d, "harmonic splitting");
        for (const auto& c : m.components) {
            check_weight(c.weight, "harmonic splitting");
            if (c.i < 0 || c.i >= d)
                throw validation_error("harmonic splitting: source state out of range");
            if (c.targets.empty())
                throw validation_error("harmonic splitting: component at state " +
                                       std::to_string(c.i + 1) + " needs a nonempty target set");
            for (std::size_t t = 0; t < c.targets.size(); ++t) {
                int j = c.targets[t];
                if (j < 0 || j >= d)
                    throw validation_error("harmonic splitting: target out of range");
                if (j == c.i)
                    throw validation_error("harmonic splitting: targets must exclude the source");
                if (t > 0 && j <= c.targets[t - 1])
                    throw validation_error("harmonic splitting: targets must be sorted and "
                                           "distinct");
            }
        }
    }

    void operator()(const InstantExchange& m) const {
        if (m.d != d) throw validation_error("instant exchange: dimension mismatch");
        check_eta(m.eta, d, "instant exchange");
        double eta_min = *std::min_element(m.eta.begin(), m.eta.end());
        if (!(m.kappa > 0.0 && m.kappa < eta_min))
            throw validation_error("instant exchange: kappa must lie in (0, min eta)");
        for (const auto& g : m.groups) {
            check_group(g.members, d, "instant exchange");
            check_weight(g.weight, "instant exchange");
        }
    }
};

double eta_total(const std::vector<double>& eta, const std::vector<int>& members) {
    double s = 0.0;
    for (int i : members) s += eta[i];
    return s;
}

StochasticMatrix td_matrix(int d, const std::vector<int>& map) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i) * d + map[i]] = 1.0;
    return StochasticMatrix::from_rows(d, std::move(e));
}

StochasticMatrix se_matrix(int d, const StochasticExchange::Atom& a) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int l = 0; l < d; ++l) e[static_cast<std::size_t>(l) * d + l] = 1.0;
    e[static_cast<std::size_t>(a.i) * d + a.i] = a.s;
    e[static_cast<std::size_t>(a.i) * d + a.j] = 1.0 - a.s;
    e[static_cast<std::size_t>(a.j) * d + a.i] = 1.0 - a.v;
    e[static_cast<std::size_t>(a.j) * d + a.j] = a.v;
    return StochasticMatrix::from_rows(d, std::move(e));
}

StochasticMatrix msp_matrix(int d, const std::vector<double>& eta, const std::vector<int>& members) {
    double total = eta_total(eta, members);
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int l = 0; l < d; ++l) e[static_cast<std::size_t>(l) * d + l] = 1.0;
    for (int i : members) {
        e[static_cast<std::size_t>(i) * d + i] = 0.0;
        for (int j : members) e[static_cast<std::size_t>(i) * d + j] = eta[j] / total;
    }
    return StochasticMatrix::from_rows(d, std::move(e));
}

/// Rows in `members` all equal to the probability vector s over the group.
StochasticMatrix shared_row_matrix(int d, const std::vector<int>& members,
                                   const std::vector<double>& s) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int l = 0; l < d; ++l) e[static_cast<std::size_t>(l) * d + l] = 1.0;
    for (int i : members) {
        e[static_cast<std::size_t>(i) * d + i] = 0.0;
        for (std::size_t t = 0; t < members.size(); ++t)
            e[static_cast<std::size_t>(i) * d + members[t]] = s[t];
    }
    return StochasticMatrix::from_rows(d, std::move(e));
}

StochasticMatrix hsp_matrix(int d, int i, const std::vector<int>& targets, double s) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int l = 0; l < d; ++l) e[static_cast<std::size_t>(l) * d + l] = 1.0;
    e[static_cast<std::size_t>(i) * d + i] = s;
    double share = (1.0 - s) / static_cast<double>(targets.size());
    for (int j : targets) e[static_cast<std::size_t>(i) * d + j] = share;
    return StochasticMatrix::from_rows(d, std::move(e));
}

/// Per-row Dirichlet parameters of the instant-exchange family, in group order.
std::vector<double> iem_alpha_row(const InstantExchange& m, const std::vector<int>& members,
                                  int i) {
    auto n = static_cast<double>(members.size());
    std::vector<double> alpha(members.size());
    for (std::size_t t = 0; t < members.size(); ++t) {
        int j = members[t];
        alpha[t] = (j == i) ? m.eta[i] - m.kappa * (n - 1.0) / n : m.kappa / n;
    }
    return alpha;
}

/// Zero iff row l of k has any off-diagonal support outside the allowed set.
bool row_support_within(const CountMatrix& k, int l, const std::vector<int>& allowed) {
    int d = k.dim();
    for (int j = 0; j < d; ++j) {
        if (j == l || k(l, j) == 0) continue;
        if (std::find(allowed.begin(), allowed.end(), j) == allowed.end()) return false;
    }
    return true;
}

bool rows_outside_group_diagonal(const CountMatrix& k, const std::vector<int>& members) {
    int d = k.dim();
    for (int l = 0; l < d; ++l) {
        if (std::find(members.begin(), members.end(), l) != members.end()) continue;
        for (int j = 0; j < d; ++j)
            if (j != l && k(l, j) != 0) return false;
    }
    return true;
}

struct MonomialVisitor {
    const CountMatrix& k;

    double operator()(const ZeroMeasure&) const { return 0.0; }

    double operator()(const AtomicMeasure& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms) sum.add(atom.weight * atom.matrix.monomial(k));
        return sum.value();
    }

    double operator()(const TotallyDependent& m) const {
        int d = k.dim();
        NeumaierSum sum;
        for (const auto& term : m.terms) {
            bool compatible = true;
            for (int i = 0; i < d && compatible; ++i)
                for (int j = 0; j < d; ++j)
                    if (k(i, j) > 0 && term.map[i] != j) {
                        compatible = false;
                        break;
                    }
            if (compatible) sum.add(term.weight);
        }
        return sum.value();
    }

    double operator()(const StochasticExchange& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms)
            sum.add(atom.weight * se_matrix(m.d, atom).monomial(k));
        return sum.value();
    }

    double operator()(const MultinomialSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups)
            sum.add(g.weight * msp_matrix(m.d, m.eta, g.members).monomial(k));
        return sum.value();
    }

    double operator()(const DirichletSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            if (!rows_outside_group_diagonal(k, g.members)) continue;
            bool compatible = true;
            std::vector<int> exponents(g.members.size(), 0);
            for (std::size_t t = 0; t < g.members.size() && compatible; ++t) {
                int i = g.members[t];
                compatible = row_support_within(k, i, g.members);
                if (!compatible) break;
                for (std::size_t u = 0; u < g.members.size(); ++u)
                    exponents[u] += k(i, g.members[u]);
            }
            if (!compatible) continue;
            std::vector<double> alpha(g.members.size());
            for (std::size_t u = 0; u < g.members.size(); ++u) alpha[u] = m.eta[g.members[u]];
            sum.add(g.weight * dirichlet_moment(alpha, exponents));
        }
        return sum.value();
    }

    double operator()(const HarmonicSplitting& m) const {
        NeumaierSum sum;
        for (const auto& c : m.components) {
            if (c.weight == 0.0) continue;
            bool compatible = true;
            int d = k.dim();
            for (int l = 0; l < d && compatible; ++l) {
                if (l == c.i) continue;
                for (int j = 0; j < d; ++j)
                    if (j != l && k(l, j) != 0) {
                        compatible = false;
                        break;
                    }
            }
            if (!compatible) continue;
            if (!row_support_within(k, c.i, c.targets)) continue;
            int moved = 0;
            for (int j : c.targets) moved += k(c.i, j);
            if (moved == 0)
                throw numeric_error("monomial integral diverges: harmonic splitting component at "
                                    "state " + std::to_string(c.i + 1) +
                                    " has infinite mass on near-diagonal matrices");
            double share = 1.0 / static_cast<double>(c.targets.size());
            sum.add(c.weight * std::pow(share, moved) *
                    beta_int(m.eta[c.i] + k(c.i, c.i), moved));
        }
        return sum.value();
    }

    double operator()(const InstantExchange& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            if (!rows_outside_group_diagonal(k, g.members)) continue;
            bool compatible = true;
            double value = g.weight;
            for (int i : g.members) {
                compatible = row_support_within(k, i, g.members);
                if (!compatible) break;
                std::vector<int> exponents(g.members.size());
                for (std::size_t u = 0; u < g.members.size(); ++u)
                    exponents[u] = k(i, g.members[u]);
                value *= dirichlet_moment(iem_alpha_row(m, g.members, i), exponents);
            }
            if (compatible) sum.add(value);
        }
        return sum.value();
    }
};

struct IntegrabilityVisitor {
    double operator()(const ZeroMeasure&) const { return 0.0; }

    double operator()(const AtomicMeasure& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms) sum.add(atom.weight * atom.matrix.diagonal_deficit());
        return sum.value();
    }

    double operator()(const TotallyDependent& m) const {
        NeumaierSum sum;
        for (const auto& term : m.terms) {
            int moved = 0;
            for (int i = 0; i < m.d; ++i)
                if (term.map[i] != i) ++moved;
            sum.add(term.weight * moved);
        }
        return sum.value();
    }

    double operator()(const StochasticExchange& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms) sum.add(atom.weight * (2.0 - atom.s - atom.v));
        return sum.value();
    }

    double operator()(const MultinomialSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            double total = eta_total(m.eta, g.members);
            for (int i : g.members) sum.add(g.weight * (1.0 - m.eta[i] / total));
        }
        return sum.value();
    }

    double operator()(const DirichletSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            double total = eta_total(m.eta, g.members);
            for (int i : g.members) sum.add(g.weight * (1.0 - m.eta[i] / total));
        }
        return sum.value();
    }

    double operator()(const HarmonicSplitting& m) const {
        NeumaierSum sum;
        for (const auto& c : m.components) sum.add(c.weight / m.eta[c.i]);
        return sum.value();
    }

    double operator()(const InstantExchange& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            auto n = static_cast<double>(g.members.size());
            for (int i : g.members)
                sum.add(g.weight * m.kappa * (n - 1.0) / (n * m.eta[i]));
        }
        return sum.value();
    }
};

struct DeficiencyVisitor {
    const CountVec& b;

    double diag_power(const StochasticMatrix& u) const {
        double p = 1.0;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (b[i] > 0) p *= std::pow(u(static_cast<int>(i), static_cast<int>(i)), b[i]);
        return p;
    }

    double operator()(const ZeroMeasure&) const { return 0.0; }

    double operator()(const AtomicMeasure& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms) sum.add(atom.weight * (diag_power(atom.matrix) - 1.0));
        return sum.value();
    }

    double operator()(const TotallyDependent& m) const {
        NeumaierSum sum;
        for (const auto& term : m.terms) {
            bool fixes = true;
            for (std::size_t i = 0; i < b.size(); ++i)
                if (b[i] > 0 && term.map[i] != static_cast<int>(i)) {
                    fixes = false;
                    break;
                }
            if (!fixes) sum.add(-term.weight);
        }
        return sum.value();
    }

    double operator()(const StochasticExchange& m) const {
        NeumaierSum sum;
        for (const auto& atom : m.atoms)
            sum.add(atom.weight *
                    (std::pow(atom.s, b[atom.i]) * std::pow(atom.v, b[atom.j]) - 1.0));
        return sum.value();
    }

    double operator()(const MultinomialSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            double total = eta_total(m.eta, g.members);
            double p = 1.0;
            for (int i : g.members) p *= std::pow(m.eta[i] / total, b[i]);
            sum.add(g.weight * (p - 1.0));
        }
        return sum.value();
    }

    double operator()(const DirichletSplitting& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            std::vector<double> alpha(g.members.size());
            std::vector<int> exponents(g.members.size());
            for (std::size_t t = 0; t < g.members.size(); ++t) {
                alpha[t] = m.eta[g.members[t]];
                exponents[t] = b[g.members[t]];
            }
            sum.add(g.weight * (dirichlet_moment(alpha, exponents) - 1.0));
        }
        return sum.value();
    }

    double operator()(const HarmonicSplitting& m) const {
        NeumaierSum sum;
        for (const auto& c : m.components) {
            double inner = 0.0;
            for (int t = 0; t < b[c.i]; ++t) inner += 1.0 / (m.eta[c.i] + t);
            sum.add(-c.weight * inner);
        }
        return sum.value();
    }

    double operator()(const InstantExchange& m) const {
        NeumaierSum sum;
        for (const auto& g : m.groups) {
            double p = 1.0;
            for (int i : g.members) {
                auto alpha = iem_alpha_row(m, g.members, i);
                std::size_t self = 0;
                while (g.members[self] != i) ++self;
                p *= beta_moment(alpha[self], m.eta[i] - alpha[self], b[i]);
            }
            sum.add(g.weight * (p - 1.0));
        }
        return sum.value();
    }
};

struct DoublyStochasticVisitor {
    double tol;

    bool operator()(const ZeroMeasure&) const { return true; }

    bool operator()(const AtomicMeasure& m) const {
        for (const auto& atom : m.atoms)
            if (atom.weight > 0.0 && !atom.matrix.is_doubly_stochastic(tol)) return false;
        return true;
    }

    bool operator()(const TotallyDependent& m) const {
        for (const auto& term : m.terms) {
            if (term.weight == 0.0) continue;
            std::vector<char> hit(m.d, 0);
            for (int v : term.map) hit[v] = 1;
            for (char h : hit)
                if (!h) return false;
        }
        return true;
    }

    bool operator()(const StochasticExchange& m) const {
        for (const auto& atom : m.atoms)
            if (atom.weight > 0.0 && std::abs(atom.s - atom.v) > tol) return false;
        return true;
    }

    bool operator()(const MultinomialSplitting& m) const {
        for (const auto& g : m.groups) {
            if (g.weight == 0.0) continue;
            double first = m.eta[g.members.front()];
            for (int i : g.members)
                if (std::abs(m.eta[i] - first) > tol * std::max(1.0, std::abs(first)))
                    return false;
        }
        return true;
    }

    bool operator()(const DirichletSplitting& m) const {
        for (const auto& g : m.groups)
            if (g.weight > 0.0) return false;
        return true;
    }

    bool operator()(const HarmonicSplitting& m) const {
        for (const auto& c : m.components)
            if (c.weight > 0.0) return false;
        return true;
    }

    bool operator()(const InstantExchange& m) const {
        for (const auto& g : m.groups)
            if (g.weight > 0.0) return false;
        return true;
    }
};

struct AtomsVisitor {
    int d;

    AtomicMeasure operator()(const ZeroMeasure&) const { return {}; }

    AtomicMeasure operator()(const AtomicMeasure& m) const { return m; }

    AtomicMeasure operator()(const TotallyDependent& m) const {
        AtomicMeasure out;
        for (const auto& term : m.terms)
            out.atoms.push_back({term.weight, td_matrix(m.d, term.map)});
        return out;
    }

    AtomicMeasure operator()(const StochasticExchange& m) const {
        AtomicMeasure out;
        for (const auto& atom : m.atoms) out.atoms.push_back({atom.weight, se_matrix(m.d, atom)});
        return out;
    }

    AtomicMeasure operator()(const MultinomialSplitting& m) const {
        AtomicMeasure out;
        for (const auto& g : m.groups)
            out.atoms.push_back({g.weight, msp_matrix(m.d, m.eta, g.members)});
        return out;
    }

    template <typename T>
    AtomicMeasure operator()(const T&) const {
        throw unsupported_error("measure has no finite atomic representation");
    }
};

} // namespace

void validate_measure(const CoordinationMeasure& nu, int d) {
    std::visit(ValidateVisitor{d}, nu);
}

double integrability_value(const CoordinationMeasure& nu) {
    return std::visit(IntegrabilityVisitor{}, nu);
}

double monomial_integral(const CoordinationMeasure& nu, const CountMatrix& k) {
    return std::visit(MonomialVisitor{k}, nu);
}

double diag_deficiency(const CoordinationMeasure& nu, const CountVec& b) {
    return std::visit(DeficiencyVisitor{b}, nu);
}

bool is_doubly_stochastic_supported(const CoordinationMeasure& nu, double tol) {
    return std::visit(DoublyStochasticVisitor{tol}, nu);
}

bool is_atomic_representable(const CoordinationMeasure& nu) {
    return std::holds_alternative<ZeroMeasure>(nu) || std::holds_alternative<AtomicMeasure>(nu) ||
           std::holds_alternative<TotallyDependent>(nu) ||
           std::holds_alternative<StochasticExchange>(nu) ||
           std::holds_alternative<MultinomialSplitting>(nu);
}

AtomicMeasure to_atoms(const CoordinationMeasure& nu, int d) {
    validate_measure(nu, d);
    return std::visit(AtomsVisitor{d}, nu);
}

AtomicMeasure transpose_pushforward(const CoordinationMeasure& nu, int d) {
    if (!is_doubly_stochastic_supported(nu))
        throw validation_error("transpose pushforward requires a measure supported on doubly "
                               "stochastic matrices");
    AtomicMeasure atoms = to_atoms(nu, d);
    for (auto& atom : atoms.atoms) atom.matrix = atom.matrix.transposed_checked();
    return atoms;
}

std::vector<double> mean_jump_matrix(const CoordinationMeasure& nu, int d) {
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        double out = 0.0;
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            CountMatrix unit(d);
            unit(i, j) = 1;
            double v = monomial_integral(nu, unit);
            c[static_cast<std::size_t>(i) * d + j] = v;
            out += v;
        }
        c[static_cast<std::size_t>(i) * d + i] = -out;
    }
    return c;
}

StochasticMatrix TruncatedMeasure::sample(RngStream& rng) const {
    if (empty()) throw validation_error("cannot sample from an empty truncated measure");
    std::size_t idx = rng.categorical(comp_masses_, mass_);
    return comps_[idx].draw(rng);
}

StochasticMatrix sample_truncated(const TruncatedMeasure& t, RngStream& rng) {
    return t.sample(rng);
}

namespace {

constexpr std::uint64_t kMaxRejectionAttempts = 1u << 24;

/// Inverse CDF of c * s^(eta-1)/(1-s) ds restricted to [0, 1-eps], by bisection
/// on the partial integral.
double hsp_inverse_cdf(double eta, double cap, double total, double u) {
    double target = u * total;
    double lo = 0.0;
    double hi = cap;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (harmonic_partial_integral(eta, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct TruncateVisitor {
    int d;
    double eps;
    std::vector<TruncatedMeasure::Component>& comps;
    double& tail;

    void add_atom(double weight, const StochasticMatrix& u) const {
        if (weight <= 0.0) return;
        if (u.min_diagonal() < 1.0 - eps) {
            comps.push_back({weight, [u](RngStream&) { return u; }});
        } else {
            tail += weight * u.diagonal_deficit();
        }
    }

    void operator()(const ZeroMeasure&) const {}

    void operator()(const AtomicMeasure& m) const {
        for (const auto& atom : m.atoms) add_atom(atom.weight, atom.matrix);
    }

    void operator()(const TotallyDependent& m) const {
        for (const auto& term : m.terms) add_atom(term.weight, td_matrix(m.d, term.map));
    }

    void operator()(const StochasticExchange& m) const {
        for (const auto& atom : m.atoms) add_atom(atom.weight, se_matrix(m.d, atom));
    }

    void operator()(const MultinomialSplitting& m) const {
        for (const auto& g : m.groups) add_atom(g.weight, msp_matrix(m.d, m.eta, g.members));
    }

    void operator()(const DirichletSplitting& m) const {
        for (const auto& g : m.groups) {
            if (g.weight <= 0.0) continue;
            double cap = 1.0 - eps;
            auto members = g.members;
            std::vector<double> alpha(members.size());
            for (std::size_t t = 0; t < members.size(); ++t) alpha[t] = m.eta[members[t]];
            int dim = d;
            if (static_cast<double>(members.size()) * cap > 1.0) {
                // Some coordinate is always below 1 - eps: the whole group mass survives.
                comps.push_back(
                    {g.weight, [dim, members, alpha](RngStream& rng) {
                         std::vector<double> s(alpha.size());
                         rng.dirichlet(alpha, s);
                         return shared_row_matrix(dim, members, s);
                     }});
            } else if (members.size() == 2) {
                // P(both coordinates >= cap) = P(cap <= s_1 <= 1 - cap).
                double excluded =
                    reg_inc_beta(alpha[0], alpha[1], 1.0 - cap) - reg_inc_beta(alpha[0], alpha[1], cap);
                excluded = std::clamp(excluded, 0.0, 1.0);
                double keep = 1.0 - excluded;
                tail += g.weight * excluded; // deficit is identically 1 on a two-member group
                if (keep <= 0.0) continue;
                comps.push_back(
                    {g.weight * keep, [dim, members, alpha, cap](RngStream& rng) {
                         std::vector<double> s(alpha.size());
                         for (std::uint64_t a = 0; a < kMaxRejectionAttempts; ++a) {
                             rng.dirichlet(alpha, s);
                             if (s[0] < cap || s[1] < cap)
                                 return shared_row_matrix(dim, members, s);
                         }
                         throw resource_error("dirichlet splitting: rejection sampler failed to "
                                              "land in the truncation region");
                     }});
            } else {
                throw unsupported_error(
                    "dirichlet splitting: truncation with eps >= 1 - 1/|J| and |J| > 2 is not "
                    "supported; choose a smaller eps");
            }
        }
    }

    void operator()(const HarmonicSplitting& m) const {
        for (const auto& c : m.components) {
            if (c.weight <= 0.0) continue;
            double cap = 1.0 - eps;
            double eta = m.eta[c.i];
            double total = harmonic_partial_integral(eta, cap);
            // Excluded part: integral over (cap, 1) of (1-s) * s^(eta-1)/(1-s) ds.
            tail += c.weight * (1.0 - std::pow(cap, eta)) / eta;
            if (total <= 0.0) continue;
            int dim = d;
            int src = c.i;
            auto targets = c.targets;
            comps.push_back(
                {c.weight * total, [dim, src, targets, eta, cap, total](RngStream& rng) {
                     double s = hsp_inverse_cdf(eta, cap, total, rng.uniform_pos());
                     return hsp_matrix(dim, src, targets, s);
                 }});
        }
    }

    void operator()(const InstantExchange& m) const {
        for (const auto& g : m.groups) {
            if (g.weight <= 0.0) continue;
            double cap = 1.0 - eps;
            auto members = g.members;
            std::vector<std::vector<double>> alphas;
            alphas.reserve(members.size());
            for (int i : members) alphas.push_back(iem_alpha_row(m, members, i));
            // P(row i keeps its own state with probability >= cap) per row, and the
            // expected diagonal deficit on the fully-excluded event.
            double excluded = 1.0;
            std::vector<double> stay_hi(members.size());
            std::vector<double> deficit_hi(members.size());
            for (std::size_t t = 0; t < members.size(); ++t) {
                int i = members[t];
                double a = alphas[t][t];
                double bpar = m.eta[i] - a;
                double p_hi = 1.0 - reg_inc_beta(a, bpar, cap);
                p_hi = std::clamp(p_hi, 0.0, 1.0);
                stay_hi[t] = p_hi;
                double mean = a / m.eta[i];
                double mean_hi = mean * (1.0 - reg_inc_beta(a + 1.0, bpar, cap));
                deficit_hi[t] = p_hi - mean_hi;
                excluded *= p_hi;
            }
            if (excluded > 0.0) {
                double tail_term = 0.0;
                for (std::size_t t = 0; t < members.size(); ++t) {
                    double rest = 1.0;
                    for (std::size_t u = 0; u < members.size(); ++u)
                        if (u != t) rest *= stay_hi[u];
                    tail_term += deficit_hi[t] * rest;
                }
                tail += g.weight * tail_term;
            }
            double keep = std::clamp(1.0 - excluded, 0.0, 1.0);
            if (keep <= 0.0) continue;
            int dim = d;
            comps.push_back(
                {g.weight * keep, [dim, members, alphas, cap](RngStream& rng) {
                     std::vector<std::vector<double>> rows(members.size(),
                                                           std::vector<double>(members.size()));
                     for (std::uint64_t a = 0; a < kMaxRejectionAttempts; ++a) {
                         bool inside = false;
                         for (std::size_t t = 0; t < members.size(); ++t) {
                             rng.dirichlet(alphas[t], rows[t]);
                             if (rows[t][t] < cap) inside = true;
                         }
                         if (!inside) continue;
                         std::vector<double> e(static_cast<std::size_t>(dim) * dim, 0.0);
                         for (int l = 0; l < dim; ++l)
                             e[static_cast<std::size_t>(l) * dim + l] = 1.0;
                         for (std::size_t t = 0; t < members.size(); ++t) {
                             int i = members[t];
                             e[static_cast<std::size_t>(i) * dim + i] = 0.0;
                             for (std::size_t u = 0; u < members.size(); ++u)
                                 e[static_cast<std::size_t>(i) * dim + members[u]] = rows[t][u];
                         }
                         return StochasticMatrix::from_rows(dim, std::move(e));
                     }
                     throw resource_error("instant exchange: rejection sampler failed to land in "
                                          "the truncation region");
                 }});
        }
    }
};

} // namespace

TruncatedMeasure truncate(const CoordinationMeasure& nu, int d, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw validation_error("truncation level must lie in (0, 1)");
    validate_measure(nu, d);
    TruncatedMeasure t;
    t.eps_ = eps;
    std::visit(TruncateVisitor{d, eps, t.comps_, t.tail_}, nu);
    NeumaierSum total;
    t.comp_masses_.reserve(t.comps_.size());
    for (const auto& c : t.comps_) {
        t.comp_masses_.push_back(c.mass);
        total.add(c.mass);
    }
    t.mass_ = total.value();
    return t;
}

} // namespace dicekit
