#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bundlechoice {

/// splitmix64 step; used to derive independent seeds from (base, index)
/// so that replication k draws the same sample whether run alone or in a batch.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ (index + 1));
}

/// Seeded generator with fixed draw algorithms. Distributions are implemented
/// here (inverse CDF / Box-Muller / order statistics) rather than via
/// std::*_distribution so the draw sequence is a stable contract of this
/// library, not of the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0,1), endpoints excluded.
    double uniform() {
        // 53-bit mantissa, shifted into the open interval
        const std::uint64_t u = engine_();
        return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cosine branch only; fixed consumption
    /// of two uniforms per draw).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Logistic(0,1) by inverse CDF.
    double logistic() {
        const double u = uniform();
        return std::log(u / (1.0 - u));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Beta(2,2): the median of three independent uniforms.
    double beta22() {
        double a = uniform(), b = uniform(), c = uniform();
        const double lo = std::min(a, std::min(b, c));
        const double hi = std::max(a, std::max(b, c));
        return a + b + c - lo - hi;
    }

    std::uint64_t next_index(std::uint64_t n) {
        // rejection-free modulo is biased for tiny n ranges; use Lemire-style
        // rejection to keep resampling exact
        const std::uint64_t threshold = (-n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace bundlechoice
