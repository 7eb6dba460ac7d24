#include "dicekit/generator.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

GeneratorMatrix build_generator(const DiceParams& p, int n) {
    p.validate();
    if (n < 1) throw validation_error("build_generator: n must be at least 1");
    std::int64_t states = 1;
    for (int l = 0; l < n; ++l) {
        states *= p.d;
        if (states > kGeneratorStateCap)
            throw resource_error("build_generator: d^n exceeds the " +
                                 std::to_string(kGeneratorStateCap) + "-state cap");
    }
    GeneratorMatrix g;
    g.d = p.d;
    g.n = n;
    g.configs = enumerate_configs(n, p.d);
    auto size = static_cast<Eigen::Index>(states);
    g.q = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index row = 0; row < size; ++row) {
        NeumaierSum out;
        for (Eigen::Index col = 0; col < size; ++col) {
            if (col == row) continue;
            double rate = config_rate(p, g.configs[row], g.configs[col]);
            g.q(row, col) = rate;
            out.add(rate);
        }
        g.q(row, row) = -out.value();
    }
    return g;
}

ConsistencyReport consistency_residual(
    const std::function<double(const CountVec&, const CountMatrix&)>& gamma_fn, int d,
    int n_max) {
    if (d < 1 || n_max < 1)
        throw validation_error("consistency check: d and n_max must be at least 1");
    ConsistencyReport report;
    for (int total = 1; total <= n_max; ++total) {
        for (const CountVec& b : enumerate_compositions(total, d)) {
            CountVec bj = b;
            for (const CountMatrix& k : enumerate_transition_matrices(b)) {
                for (int j = 0; j < d; ++j) {
                    double lhs = gamma_fn(b, k);
                    NeumaierSum rhs;
                    bj[j] += 1;
                    for (int l = 0; l < d; ++l) {
                        CountMatrix kjl = k;
                        kjl(j, l) += 1;
                        rhs.add(gamma_fn(bj, kjl));
                    }
                    bj[j] -= 1;
                    double residual = std::abs(lhs - rhs.value());
                    ++report.checked;
                    if (residual > report.max_residual) {
                        report.max_residual = residual;
                        report.worst_b = b;
                        report.worst_k = k;
                        report.worst_j = j;
                    }
                }
            }
        }
    }
    return report;
}

ConsistencyReport check_consistency_equation(const DiceParams& p, int n_max) {
    p.validate();
    return consistency_residual(
        [&p](const CountVec& b, const CountMatrix& k) { return gamma_rate(p, b, k); }, p.d,
        n_max);
}

GeneratorMatrix lumped_generator(const GeneratorMatrix& q, int m, double tol) {
    if (m < 1 || m >= q.n)
        throw validation_error("lumped_generator: need 1 <= m < n");
    int d = q.d;
    auto projected_states = static_cast<Eigen::Index>(enumerate_configs(m, d).size());
    GeneratorMatrix g;
    g.d = d;
    g.n = m;
    g.configs = enumerate_configs(m, d);
    g.q = Eigen::MatrixXd::Zero(projected_states, projected_states);

    // With the lexicographic config order (first coordinate most significant),
    // configs sharing a length-m prefix occupy a contiguous run of rows.
    std::int64_t ext = 1;
    for (int l = m; l < q.n; ++l) ext *= d;

    for (Eigen::Index xp = 0; xp < projected_states; ++xp) {
        Eigen::RowVectorXd reference;
        for (std::int64_t e = 0; e < ext; ++e) {
            Eigen::Index row = static_cast<Eigen::Index>(xp * ext + e);
            Eigen::RowVectorXd lumped = Eigen::RowVectorXd::Zero(projected_states);
            for (Eigen::Index yp = 0; yp < projected_states; ++yp) {
                if (yp == xp) continue;
                NeumaierSum sum;
                for (std::int64_t w = 0; w < ext; ++w)
                    sum.add(q.q(row, static_cast<Eigen::Index>(yp * ext + w)));
                lumped(yp) = sum.value();
            }
            if (e == 0) {
                reference = lumped;
            } else {
                double dev = (lumped - reference).cwiseAbs().maxCoeff();
                if (dev > tol) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.3e", dev);
                    throw lumpability_error(
                        "projection is not lumpable: extensions of configuration " +
                        config_to_string(g.configs[xp]) + " disagree by " + buf);
                }
            }
        }
        NeumaierSum out;
        for (Eigen::Index yp = 0; yp < projected_states; ++yp) {
            if (yp == xp) continue;
            g.q(xp, yp) = reference(yp);
            out.add(reference(yp));
        }
        g.q(xp, xp) = -out.value();
    }
    return g;
}

double check_permutation_commutation(
    const GeneratorMatrix& q, const Permutation& sigma,
    const std::optional<std::vector<std::vector<int>>>& initial_partition) {
    sigma.validate();
    if (sigma.size() != static_cast<std::size_t>(q.n))
        throw validation_error("permutation commutation: sigma must act on n labels");
    if (initial_partition) {
        std::vector<int> cls(static_cast<std::size_t>(q.n), -1);
        for (std::size_t c = 0; c < initial_partition->size(); ++c)
            for (int l : (*initial_partition)[c]) {
                if (l < 0 || l >= q.n)
                    throw validation_error("permutation commutation: partition label out of "
                                           "range");
                cls[static_cast<std::size_t>(l)] = static_cast<int>(c);
            }
        for (std::size_t l = 0; l < cls.size(); ++l) {
            if (cls[l] < 0)
                throw validation_error("permutation commutation: partition must cover all "
                                       "labels");
            if (cls[l] != cls[static_cast<std::size_t>(sigma.sigma[l])])
                throw validation_error("permutation commutation: sigma does not preserve the "
                                       "initial partition");
        }
    }
    auto size = static_cast<Eigen::Index>(q.configs.size());
    std::vector<Eigen::Index> image(static_cast<std::size_t>(size));
    for (Eigen::Index s = 0; s < size; ++s)
        image[static_cast<std::size_t>(s)] =
            static_cast<Eigen::Index>(q.index_of(apply_permutation(q.configs[s], sigma)));
    double worst = 0.0;
    for (Eigen::Index x = 0; x < size; ++x)
        for (Eigen::Index y = 0; y < size; ++y) {
            if (x == y) continue;
            double residual = std::abs(q.q(image[static_cast<std::size_t>(x)],
                                           image[static_cast<std::size_t>(y)]) -
                                       q.q(x, y));
            worst = std::max(worst, residual);
        }
    return worst;
}

Eigen::VectorXd transient_distribution(const Eigen::MatrixXd& q, const Eigen::VectorXd& p0,
                                       double t) {
    if (q.rows() != q.cols() || p0.size() != q.rows())
        throw validation_error("transient distribution: shape mismatch");
    if (t < 0.0) throw validation_error("transient distribution: t must be nonnegative");
    Eigen::MatrixXd tq = (t * q).transpose();
    Eigen::MatrixXd e = tq.exp();
    Eigen::VectorXd p = e * p0;
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::max(p(i), 0.0);
    double total = p.sum();
    if (total > 0.0) p /= total;
    return p;
}

std::string generator_to_csv(const GeneratorMatrix& q) {
    std::string out = "config";
    for (const Config& c : q.configs) out += ",\"" + config_to_string(c) + "\"";
    out += "\n";
    char buf[40];
    for (Eigen::Index row = 0; row < q.q.rows(); ++row) {
        out += "\"" + config_to_string(q.configs[static_cast<std::size_t>(row)]) + "\"";
        for (Eigen::Index col = 0; col < q.q.cols(); ++col) {
            std::snprintf(buf, sizeof buf, ",%.17g", q.q(row, col));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace dicekit
