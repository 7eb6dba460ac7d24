#include "dicekit/combinatorics.hpp"

#include <algorithm>
#include <sstream>

#include "dicekit/errors.hpp"

namespace dicekit {

CountVec CountMatrix::row_sums() const {
    CountVec b(d_, 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) b[i] += (*this)(i, j);
    return b;
}

CountVec CountMatrix::col_sums() const {
    CountVec c(d_, 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) c[j] += (*this)(i, j);
    return c;
}

CountMatrix CountMatrix::transposed() const {
    CountMatrix t(d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool CountMatrix::is_diagonal() const {
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (i != j && (*this)(i, j) != 0) return false;
    return true;
}

CountMatrix diag_matrix(const CountVec& b) {
    CountMatrix k(static_cast<int>(b.size()));
    for (int i = 0; i < k.dim(); ++i) k(i, i) = b[i];
    return k;
}

void Permutation::validate() const {
    const int n = static_cast<int>(sigma.size());
    std::vector<bool> seen(n, false);
    for (int v : sigma) {
        if (v < 0 || v >= n || seen[v])
            throw validation_error("Permutation: mapping is not a bijection on 0..n-1");
        seen[v] = true;
    }
}

Permutation Permutation::inverse() const {
    validate();
    Permutation inv;
    inv.sigma.assign(sigma.size(), 0);
    for (std::size_t i = 0; i < sigma.size(); ++i) inv.sigma[sigma[i]] = static_cast<int>(i);
    return inv;
}

Permutation Permutation::identity(int n) {
    Permutation p;
    p.sigma.resize(n);
    for (int i = 0; i < n; ++i) p.sigma[i] = i;
    return p;
}

bool is_valid_config(const Config& x, int d) {
    for (int v : x)
        if (v < 0 || v >= d) return false;
    return true;
}

CountVec counts_of(const Config& x, int d) {
    if (!is_valid_config(x, d)) throw validation_error("counts_of: entry outside 0..d-1");
    CountVec b(d, 0);
    for (int v : x) ++b[v];
    return b;
}

namespace {

void compositions_rec(int remaining, int pos, int d, CountVec& cur,
                      std::vector<CountVec>& out) {
    if (pos == d - 1) {
        cur[pos] = remaining;
        out.push_back(cur);
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        cur[pos] = v;
        compositions_rec(remaining - v, pos + 1, d, cur, out);
    }
}

} // namespace

std::vector<CountVec> enumerate_compositions(int n, int d) {
    if (d < 1) throw validation_error("enumerate_compositions: dimension must be >= 1");
    if (n < 0) throw validation_error("enumerate_compositions: total must be >= 0");
    std::vector<CountVec> out;
    CountVec cur(d, 0);
    compositions_rec(n, 0, d, cur, out);
    return out;
}

std::vector<CountMatrix> enumerate_transition_matrices(const CountVec& b,
                                                       bool include_diagonal) {
    const int d = static_cast<int>(b.size());
    if (d < 1) throw validation_error("enumerate_transition_matrices: empty count vector");
    for (int v : b)
        if (v < 0) throw validation_error("enumerate_transition_matrices: negative count");

    std::vector<std::vector<CountVec>> row_choices(d);
    for (int i = 0; i < d; ++i) row_choices[i] = enumerate_compositions(b[i], d);

    std::vector<CountMatrix> out;
    const CountMatrix diag = diag_matrix(b);
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        CountMatrix k(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) k(i, j) = row_choices[i][idx[i]][j];
        if (include_diagonal || !(k == diag)) out.push_back(std::move(k));
        // Odometer increment over the row choices, last row fastest.
        int pos = d - 1;
        while (pos >= 0) {
            if (++idx[pos] < row_choices[pos].size()) break;
            idx[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

std::pair<CountVec, CountMatrix> counts_from_configs(const Config& x, const Config& y, int d) {
    if (x.size() != y.size())
        throw validation_error("counts_from_configs: configurations differ in length");
    if (!is_valid_config(x, d) || !is_valid_config(y, d))
        throw validation_error("counts_from_configs: entry outside 0..d-1");
    CountVec b(d, 0);
    CountMatrix k(d);
    for (std::size_t l = 0; l < x.size(); ++l) {
        ++b[x[l]];
        ++k(x[l], y[l]);
    }
    return {std::move(b), std::move(k)};
}

long long target_multiplicity(const CountMatrix& k) {
    const int d = k.dim();
    long long result = 1;
    for (int i = 0; i < d; ++i) {
        // Multinomial coefficient of row i, computed incrementally to stay exact.
        int placed = 0;
        for (int j = 0; j < d; ++j) {
            for (int m = 1; m <= k(i, j); ++m) {
                ++placed;
                result = result * placed / m; // always divisible at this point
            }
        }
    }
    return result;
}

Config apply_permutation(const Config& x, const Permutation& sigma) {
    if (x.size() != sigma.size())
        throw validation_error("apply_permutation: size mismatch");
    sigma.validate();
    Config y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[sigma.sigma[i]];
    return y;
}

bool preserves_induced_partition(const Config& x, const Permutation& sigma) {
    if (x.size() != sigma.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[sigma.sigma[i]] != x[i]) return false;
    return true;
}

std::vector<std::vector<int>> induced_partition(const Config& x, int d) {
    if (!is_valid_config(x, d)) throw validation_error("induced_partition: entry outside 0..d-1");
    std::vector<std::vector<int>> blocks(d);
    for (std::size_t l = 0; l < x.size(); ++l) blocks[x[l]].push_back(static_cast<int>(l));
    return blocks;
}

std::vector<Config> enumerate_configs(int n, int d) {
    if (d < 1) throw validation_error("enumerate_configs: dimension must be >= 1");
    if (n < 0) throw validation_error("enumerate_configs: size must be >= 0");
    std::vector<Config> out;
    Config cur(n, 0);
    for (;;) {
        out.push_back(cur);
        int pos = n - 1;
        while (pos >= 0) {
            if (++cur[pos] < d) break;
            cur[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

std::int64_t config_index(const Config& x, int d) {
    if (!is_valid_config(x, d)) throw validation_error("config_index: entry outside 0..d-1");
    std::int64_t idx = 0;
    for (int v : x) idx = idx * d + v;
    return idx;
}

std::string config_to_string(const Config& x) {
    std::ostringstream os;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ',';
        os << (x[i] + 1);
    }
    return os.str();
}

Config config_from_string(const std::string& s, int d) {
    Config x;
    if (s.empty()) return x;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        std::size_t pos = 0;
        int v;
        try {
            v = std::stoi(tok, &pos);
        } catch (const std::exception&) {
            throw validation_error("config_from_string: bad token '" + tok + "'");
        }
        if (pos != tok.size() || v < 1 || v > d)
            throw validation_error("config_from_string: type '" + tok + "' outside 1.." +
                                   std::to_string(d));
        x.push_back(v - 1);
    }
    return x;
}

} // namespace dicekit
