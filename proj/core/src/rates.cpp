#include "dicekit/rates.hpp"

#include <cmath>
#include <string>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

void DiceParams::validate() const {
    if (d <= 0) throw validation_error("dice params: dimension must be positive");
    if (a.dim() != d) throw validation_error("dice params: rate matrix dimension mismatch");
    validate_measure(nu, d);
    double mass = integrability_value(nu);
    if (!std::isfinite(mass))
        throw validation_error("dice params: coordination measure fails the integrability "
                               "condition");
}

namespace {

/// If k = diag(b) - E_ii + E_ij for some i != j, return that (i, j).
std::pair<int, int> single_move_of(const CountVec& b, const CountMatrix& k) {
    int d = k.dim();
    int minus_row = -1;
    int plus_row = -1;
    int plus_col = -1;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            int expected = (i == j) ? b[i] : 0;
            int diff = k(i, j) - expected;
            if (diff == 0) continue;
            if (i == j && diff == -1 && minus_row < 0) {
                minus_row = i;
            } else if (i != j && diff == 1 && plus_row < 0) {
                plus_row = i;
                plus_col = j;
            } else {
                return {-1, -1};
            }
        }
    if (minus_row >= 0 && minus_row == plus_row) return {plus_row, plus_col};
    return {-1, -1};
}

} // namespace

double gamma_rate(const DiceParams& p, const CountVec& b, const CountMatrix& k) {
    if (k.dim() != p.d || b.size() != static_cast<std::size_t>(p.d))
        throw validation_error("gamma: dimension mismatch");
    CountVec rows = k.row_sums();
    if (rows != b) throw validation_error("gamma: row sums of K must equal b");
    if (k == diag_matrix(b))
        throw validation_error("gamma: K = diag(b) is not a change");
    double rate = monomial_integral(p.nu, k);
    auto [i, j] = single_move_of(b, k);
    if (i >= 0) rate += p.a(i, j);
    return rate;
}

double config_rate(const DiceParams& p, const Config& x, const Config& y) {
    if (x.size() != y.size())
        throw validation_error("config rate: configurations must have equal length");
    if (x == y) throw validation_error("config rate: x and y must differ");
    auto [b, k] = counts_from_configs(x, y, p.d);
    return gamma_rate(p, b, k);
}

double total_outflow(const DiceParams& p, const Config& x) {
    CountVec b = counts_of(x, p.d);
    NeumaierSum sum;
    for (int i = 0; i < p.d; ++i)
        if (b[i] > 0) sum.add(b[i] * p.a.row_out(i));
    sum.add(-diag_deficiency(p.nu, b));
    return sum.value();
}

} // namespace dicekit
