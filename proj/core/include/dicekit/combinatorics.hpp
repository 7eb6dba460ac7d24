#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dicekit {

/// A configuration assigns one of d types to each of n labelled coordinates.
/// Types are stored 0-based; user-facing formats ("1,2,1") are 1-based, with
/// conversion confined to the I/O boundary.
using Config = std::vector<int>;

/// Per-type occupation counts b (length d, nonnegative).
using CountVec = std::vector<int>;

/// Transition count matrix K: entry (i,j) is the number of coordinates that
/// moved from type i to type j; row i sums to b_i.
class CountMatrix {
public:
    CountMatrix() = default;
    explicit CountMatrix(int d) : d_(d), a_(static_cast<std::size_t>(d) * d, 0) {}

    int dim() const { return d_; }
    int operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * d_ + j]; }
    int& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * d_ + j]; }

    CountVec row_sums() const;
    CountVec col_sums() const;
    CountMatrix transposed() const;
    bool is_diagonal() const;
    /// True iff this equals diag(b) for b = row_sums().
    bool is_diag_of_row_sums() const { return is_diagonal(); }

    bool operator==(const CountMatrix&) const = default;

private:
    int d_ = 0;
    std::vector<int> a_;
};

/// diag(b) as a CountMatrix.
CountMatrix diag_matrix(const CountVec& b);

/// A permutation of the labels {0, ..., n-1}.
struct Permutation {
    std::vector<int> sigma; // image list: sigma[i] = where position i reads from

    std::size_t size() const { return sigma.size(); }
    /// Throws validation_error unless sigma is a bijection on 0..n-1.
    void validate() const;
    Permutation inverse() const;
    static Permutation identity(int n);
};

bool is_valid_config(const Config& x, int d);

/// Occupation counts of x: b_i = #{l : x_l = i}.
CountVec counts_of(const Config& x, int d);

/// All b in N_0^d with sum(b) = n, in ascending lexicographic order.
/// Throws validation_error for d < 1 or n < 0.
std::vector<CountVec> enumerate_compositions(int n, int d);

/// All K with row sums b; K = diag(b) is excluded unless include_diagonal.
/// Rows enumerate in the composition order above, row-major lexicographic.
std::vector<CountMatrix> enumerate_transition_matrices(const CountVec& b,
                                                       bool include_diagonal = false);

/// (b, K) for the pair (x, y): b_i = #{l : x_l = i}, k_ij = #{l : x_l=i, y_l=j}.
/// Throws validation_error on length mismatch.
std::pair<CountVec, CountMatrix> counts_from_configs(const Config& x, const Config& y, int d);

/// Number of distinct targets y realizing K from a fixed source x with counts
/// b = row sums: prod_i b_i! / prod_ij k_ij!. Exact for |b| <= 20.
long long target_multiplicity(const CountMatrix& k);

/// (x_sigma)_i = x_{sigma(i)}. Throws validation_error if sizes mismatch.
Config apply_permutation(const Config& x, const Permutation& sigma);

/// Whether sigma maps each block of the partition induced by x into itself.
bool preserves_induced_partition(const Config& x, const Permutation& sigma);

/// Blocks A_i = {l : x_l = i} for i = 0..d-1 (possibly empty), 0-based indices.
std::vector<std::vector<int>> induced_partition(const Config& x, int d);

/// All of [d]^n in lexicographic order (first coordinate most significant).
std::vector<Config> enumerate_configs(int n, int d);

/// Rank of x in the enumerate_configs order.
std::int64_t config_index(const Config& x, int d);

/// 1-based comma-separated rendering, e.g. "1,2,1"; "" for n = 0.
std::string config_to_string(const Config& x);

/// Parse the 1-based rendering; validates entries against d.
Config config_from_string(const std::string& s, int d);

} // namespace dicekit
