#pragma once

#include <cstdint>
#include <vector>

namespace dicekit {

/// Deterministic random stream: xoshiro256++ seeded through splitmix64.
///
/// Streams are derived from (root seed, stream index) so that per-path
/// substreams are stable: adding paths never reshuffles earlier ones, and
/// results do not depend on how paths are scheduled across threads. All
/// samplers are implemented in-repo because the standard library leaves
/// distribution output implementation-defined, and the trajectory format
/// promises byte-for-byte reproducibility per seed.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    /// Derive the substream for a path index from a root seed.
    static RngStream substream(std::uint64_t seed, std::uint64_t stream) {
        return RngStream(seed, stream);
    }

    std::uint64_t next_u64();

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform();
    /// Uniform on (0,1); never returns 0.
    double uniform_pos();
    /// Uniform integer in {0, ..., n-1}.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate);
    /// Standard normal (Marsaglia polar, cached pair).
    double normal();
    /// Gamma with given shape, unit scale (Marsaglia-Tsang).
    double gamma(double shape);
    /// Beta(a, b) via two gamma draws.
    double beta(double a, double b);
    /// Dirichlet(alpha) written into out (resized to alpha.size()).
    void dirichlet(const std::vector<double>& alpha, std::vector<double>& out);
    /// Index sampled proportionally to nonnegative weights with known total.
    std::size_t categorical(const std::vector<double>& weights, double total);

private:
    std::uint64_t s_[4];
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

} // namespace dicekit
