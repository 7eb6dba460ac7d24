#include "dicekit/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dicekit/errors.hpp"
#include "dicekit/numerics.hpp"

namespace dicekit {

ChiSquareResult chi2_two_sample(const std::vector<std::int64_t>& a,
                                const std::vector<std::int64_t>& b) {
    if (a.size() != b.size())
        throw validation_error("two-sample chi-square: cell vectors must have equal length");
    double na = 0.0;
    double nb = 0.0;
    for (std::int64_t v : a) na += static_cast<double>(v);
    for (std::int64_t v : b) nb += static_cast<double>(v);
    if (na <= 0.0 || nb <= 0.0)
        throw validation_error("two-sample chi-square: both samples must be nonempty");
    double n = na + nb;
    ChiSquareResult r;
    r.min_expected = std::numeric_limits<double>::infinity();
    int cells = 0;
    NeumaierSum stat;
    for (std::size_t c = 0; c < a.size(); ++c) {
        double pooled = static_cast<double>(a[c] + b[c]);
        if (pooled == 0.0) continue;
        ++cells;
        double ea = na * pooled / n;
        double eb = nb * pooled / n;
        double da = static_cast<double>(a[c]) - ea;
        double db = static_cast<double>(b[c]) - eb;
        stat.add(da * da / ea);
        stat.add(db * db / eb);
        r.min_expected = std::min(r.min_expected, std::min(ea, eb));
    }
    r.statistic = stat.value();
    r.dof = std::max(cells - 1, 0);
    r.p_value = r.dof == 0 ? 1.0 : chi2_sf(r.statistic, r.dof);
    if (cells == 0) r.min_expected = 0.0;
    return r;
}

ChiSquareResult chi2_goodness_of_fit(const std::vector<std::int64_t>& counts,
                                     const std::vector<double>& probs) {
    if (counts.size() != probs.size())
        throw validation_error("goodness of fit: counts and probabilities must have equal "
                               "length");
    double n = 0.0;
    for (std::int64_t v : counts) n += static_cast<double>(v);
    if (n <= 0.0) throw validation_error("goodness of fit: empty sample");
    ChiSquareResult r;
    r.min_expected = std::numeric_limits<double>::infinity();
    int cells = 0;
    NeumaierSum stat;
    bool impossible = false;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (probs[c] < 0.0)
            throw validation_error("goodness of fit: negative cell probability");
        if (probs[c] == 0.0) {
            if (counts[c] > 0) impossible = true;
            continue;
        }
        ++cells;
        double e = n * probs[c];
        double diff = static_cast<double>(counts[c]) - e;
        stat.add(diff * diff / e);
        r.min_expected = std::min(r.min_expected, e);
    }
    r.statistic = stat.value();
    r.dof = std::max(cells - 1, 0);
    if (impossible) {
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
    } else {
        r.p_value = r.dof == 0 ? 1.0 : chi2_sf(r.statistic, r.dof);
    }
    if (cells == 0) r.min_expected = 0.0;
    return r;
}

bool DistributionTestReport::pass() const {
    return two_sample.p_value > p_threshold && secondary_p() > p_threshold;
}

double DistributionTestReport::secondary_p() const {
    double p = 1.0;
    int tests = (gof_a ? 1 : 0) + (gof_b ? 1 : 0);
    if (gof_a) p = std::min(p, std::min(1.0, gof_a->p_value * tests));
    if (gof_b) p = std::min(p, std::min(1.0, gof_b->p_value * tests));
    return p;
}

DistributionTestReport compare_distributions(const std::vector<std::int64_t>& a,
                                             const std::vector<std::int64_t>& b,
                                             const std::optional<std::vector<double>>& exact) {
    DistributionTestReport report;
    report.two_sample = chi2_two_sample(a, b);
    if (exact) {
        report.gof_a = chi2_goodness_of_fit(a, *exact);
        report.gof_b = chi2_goodness_of_fit(b, *exact);
    }
    report.power_warning = report.two_sample.min_expected < 100.0;
    return report;
}

} // namespace dicekit
