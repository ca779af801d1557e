#pragma once

#include <cstdint>
#include <thread>
#include <vector>

#include "fairindex/ledger.hpp"
#include "fairindex/rng.hpp"
#include "fairindex/scenario.hpp"

namespace fairindex {

/// Draws market paths from a model. Path p is a pure function of
/// (model, seed, p): the sampler owns no mutable state, so any subset
/// of paths can be drawn in any order, on any number of workers, with
/// identical results.
class PathSampler {
public:
    PathSampler(PathModel model, std::uint64_t seed) : model_(std::move(model)), seed_(seed) {
        model_.validate();
        cumulative_.reserve(model_.outcomes.size());
        double acc = 0.0;
        for (const auto& o : model_.outcomes) {
            acc += o.probability;
            cumulative_.push_back(acc);
        }
        // Guard against the total landing a hair under 1.
        cumulative_.back() = 1.0;
    }

    const PathModel& model() const { return model_; }
    std::uint64_t seed() const { return seed_; }

    MarketPath at(std::uint64_t path_index) const {
        Rng rng(seed_, path_index);
        MarketPath p;
        p.asset_ids = model_.asset_ids;
        p.prices.reserve(static_cast<std::size_t>(model_.horizon) + 1);
        p.prices.push_back(model_.initial_prices);
        for (Time t = 1; t <= model_.horizon; ++t) {
            const JointOutcome& o = model_.outcomes[draw(rng)];
            std::vector<double> row(p.prices.back());
            for (std::size_t j = 0; j < row.size(); ++j) row[j] *= o.factors[j];
            p.prices.push_back(std::move(row));
        }
        return p;
    }

private:
    std::size_t draw(Rng& rng) const {
        const double x = rng.uniform();
        for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i)
            if (x < cumulative_[i]) return i;
        return cumulative_.size() - 1;
    }

    PathModel model_;
    std::uint64_t seed_;
    std::vector<double> cumulative_;
};

namespace detail {

/// Runs fn(p) for p in [0, n) across the given number of workers,
/// splitting the range into contiguous slices. fn must only write to
/// per-p slots, which keeps the result independent of the split.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t p = 0; p < n; ++p) fn(p);
        return;
    }
    const std::size_t n_workers = std::min<std::size_t>(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        const std::size_t lo = n * w / n_workers;
        const std::size_t hi = n * (w + 1) / n_workers;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t p = lo; p < hi; ++p) fn(p);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

/// Materializes n_paths sampled paths. Output is identical for any
/// worker count, since path p depends on (seed, p) only.
inline std::vector<MarketPath> simulate_paths(const PathModel& model, std::uint64_t seed,
                                              std::size_t n_paths, unsigned workers = 1) {
    if (n_paths < 1) throw OutOfRangeError("at least one path is required");
    PathSampler sampler(model, seed);
    std::vector<MarketPath> out(n_paths);
    detail::parallel_for(n_paths, workers, [&](std::size_t p) { out[p] = sampler.at(p); });
    return out;
}

/// Streaming mean/variance accumulation with deterministic order:
/// per-path values are reduced chunk by chunk in index order, so the
/// result does not depend on the worker count that produced them.
struct MomentAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }

    double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double v = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }

    double std_error() const {
        return n == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
    }
};

} // namespace fairindex
