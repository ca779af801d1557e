#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fairindex/errors.hpp"

namespace fairindex {

namespace detail {

/// splitmix64 step; used to spread (seed, stream) pairs over the full
/// 64-bit space before seeding the main engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0xda942042e4dd58b5ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

} // namespace detail

/// Deterministic random source. Sampling is implemented directly on the
/// engine output (not via std distributions, whose algorithms vary by
/// standard library), so results are reproducible across toolchains.
/// The (seed, stream) constructor gives independent streams for the
/// same seed; simulation derives stream = path index, which makes the
/// output independent of how paths are distributed over workers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(detail::mix_seed(seed, 0)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(detail::mix_seed(seed, stream)) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        if (hi < lo) throw OutOfRangeError("empty integer range");
        const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    bool coin(double p = 0.5) { return uniform() < p; }

    /// Index sampled proportionally to the given nonnegative weights.
    std::size_t pick_weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw OutOfRangeError("weights must have positive total");
        double x = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            x -= weights[i];
            if (x < 0.0) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fairindex
