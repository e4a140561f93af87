#pragma once

#include <cstdint>
#include <random>

// Deterministic randomness helpers. All sampling goes through these rather
// than std::*_distribution, whose outputs are implementation-defined.

namespace mdiqkd::detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Substream seed for a batch: mixes the master seed with the batch index so
// results are independent of how batches are distributed over threads.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xA0761D6478BD642FULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return (next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_unit() < p; }

    int coin() { return static_cast<int>(next_u64() & 1u); }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586477 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

// Poisson sample by inversion; intended for small means (< ~50).
inline std::uint64_t sample_poisson_small(Rng& rng, double mean) {
    const double u = rng.next_unit();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 4096) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

// Binomial sample, exact for tiny n, Poisson / normal limits otherwise.
// Statistical fidelity at the 1e-3 relative level is all callers need.
inline std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);
    const double mean = static_cast<double>(n) * p;
    if (n <= 64) {
        std::uint64_t k = 0;
        for (std::uint64_t i = 0; i < n; ++i) k += rng.bernoulli(p) ? 1 : 0;
        return k;
    }
    if (mean < 32.0) {
        const std::uint64_t k = sample_poisson_small(rng, mean);
        return k > n ? n : k;
    }
    const double sd = std::sqrt(mean * (1.0 - p));
    const double draw = mean + sd * rng.normal();
    if (draw <= 0.0) return 0;
    const auto k = static_cast<std::uint64_t>(draw + 0.5);
    return k > n ? n : k;
}

}  // namespace mdiqkd::detail
