#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace dicekit {

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    double min_expected = 0.0;
};

/// 2 x C contingency chi-square on two vectors of cell counts. Cells whose
/// pooled count is zero are dropped.
ChiSquareResult chi2_two_sample(const std::vector<std::int64_t>& a,
                                const std::vector<std::int64_t>& b);

/// Goodness of fit of observed counts against a probability vector. Positive
/// counts in zero-probability cells force p = 0.
ChiSquareResult chi2_goodness_of_fit(const std::vector<std::int64_t>& counts,
                                     const std::vector<double>& probs);

/// Two-sample comparison plus per-side goodness-of-fit checks against an exact
/// marginal; the secondary checks are Bonferroni-corrected as a pair.
struct DistributionTestReport {
    ChiSquareResult two_sample;
    std::optional<ChiSquareResult> gof_a;
    std::optional<ChiSquareResult> gof_b;
    bool power_warning = false;
    double p_threshold = 1e-3;

    bool pass() const;
    /// min over the Bonferroni-corrected secondary p-values, 1 if absent.
    double secondary_p() const;
};

DistributionTestReport compare_distributions(const std::vector<std::int64_t>& a,
                                             const std::vector<std::int64_t>& b,
                                             const std::optional<std::vector<double>>& exact);

} // namespace dicekit
