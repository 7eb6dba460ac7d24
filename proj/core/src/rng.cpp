#include "dicekit/rng.hpp"

#include <cmath>

#include "dicekit/errors.hpp"

namespace dicekit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
    // Mix the stream index into the seed with an odd multiplier so that
    // (seed, k) and (seed, k+1) land in unrelated splitmix64 chains.
    std::uint64_t x = seed ^ (0xd1b54a32d192ed03ull * (stream + 0x632be59bd9b4e019ull));
    s_[0] = splitmix64(x);
    s_[1] = splitmix64(x);
    s_[2] = splitmix64(x);
    s_[3] = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1; // forbidden all-zero state
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    double u;
    do {
        u = uniform();
    } while (u <= 0.0);
    return u;
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
    if (n == 0) throw validation_error("uniform_below: n must be positive");
    // Rejection below the largest multiple of n keeps the draw exactly uniform.
    const std::uint64_t limit = n * (~0ull / n);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw validation_error("exponential: rate must be positive");
    return -std::log(uniform_pos()) / rate;
}

double RngStream::normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    double u, v, q;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_normal_ = v * f;
    has_spare_normal_ = true;
    return u * f;
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw validation_error("gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back (Marsaglia-Tsang small-shape trick).
        const double u = uniform_pos();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RngStream::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
}

void RngStream::dirichlet(const std::vector<double>& alpha, std::vector<double>& out) {
    out.resize(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        out[i] = gamma(alpha[i]);
        total += out[i];
    }
    if (total <= 0.0) {
        // Degenerate underflow (tiny shapes): fall back to the max component.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < out.size(); ++i)
            if (out[i] > out[arg]) arg = i;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (i == arg) ? 1.0 : 0.0;
        return;
    }
    for (double& v : out) v /= total;
}

std::size_t RngStream::categorical(const std::vector<double>& weights, double total) {
    if (weights.empty() || !(total > 0.0))
        throw validation_error("categorical: empty support or nonpositive total");
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // Rounding at the top end: return the last positive-weight index.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

} // namespace dicekit
