#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace wildfire::rng {

// All randomness in the toolkit flows through this engine. std::mt19937_64's
// bit stream is fixed by the standard, and every distribution below is our
// own, so identical seeds give identical draws on any platform.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (no cached spare, keeps state minimal).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Knuth's product method; adequate for the small intensities used here.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

// FNV-1a over the component name, mixed with the root seed. Sub-streams for
// independent components (zones, scan repeats, ...) derive from here.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view component) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : component) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ULL;
    }
    h ^= root + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view component, std::uint64_t index) {
    return derive_seed(derive_seed(root, component) ^ (index * 0x9e3779b97f4a7c15ULL), component);
}

}  // namespace wildfire::rng
