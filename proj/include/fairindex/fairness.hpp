#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/indices.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/rng.hpp"
#include "fairindex/scenario.hpp"
#include "fairindex/simulate.hpp"
#include "fairindex/strategy.hpp"

namespace fairindex {

/// Outcome of exact index-process verification on a scenario tree.
struct FairnessVerdict {
    IndexKind kind = IndexKind::RA;
    ProcessClassification drift;
    int n_nodes = 0;
    Time horizon = 0;
    double tol = 0.0;

    ProcessClass classification() const { return drift.process_class; }
    double max_violation() const { return drift.max_abs_drift; }
    int witness_node() const { return drift.witness; }
};

/// Evolves the group under the strategy, computes the index anchored at
/// the root along every node, and classifies the resulting process by
/// exact conditional expectations.
inline FairnessVerdict verify_fairness_exact(const ScenarioTree& tree, const GroupHistory& initial,
                                             const StrategySpec& strategy, IndexKind kind,
                                             double tol = 1e-9) {
    tree.validate();
    const EvolvedGroup evolved = evolve_funds(tree, initial, strategy);
    const std::vector<double> x = index_process(tree, evolved, kind);
    FairnessVerdict v;
    v.kind = kind;
    v.drift = classify_process(tree, x, tol);
    v.n_nodes = tree.n_nodes();
    v.horizon = tree.horizon;
    v.tol = tol;
    return v;
}

/// Residuals of the one-step identity E[w(t+1)/w(t+) | node] = 1, the
/// pivot of the exact verification: with martingale prices it holds for
/// every fund at every interior node no matter the strategy.
struct UnitRatioReport {
    std::vector<std::string> fund_ids;
    std::vector<double> per_fund_max; // max |E[ratio] - 1| over interior nodes
    double max_residual = 0.0;
    int witness_node = -1;
    int witness_fund = -1;
};

inline UnitRatioReport unit_ratio_check(const ScenarioTree& tree, const EvolvedGroup& evolved) {
    if (evolved.states.size() != static_cast<std::size_t>(tree.n_nodes()))
        throw OutOfRangeError("evolved group does not match the tree");
    UnitRatioReport report;
    report.fund_ids = evolved.fund_ids;
    report.per_fund_max.assign(evolved.fund_ids.size(), 0.0);
    for (int v = 0; v < tree.n_nodes(); ++v) {
        const TreeNode& n = tree.node(v);
        if (n.children.empty()) continue;
        for (std::size_t i = 0; i < evolved.fund_ids.size(); ++i) {
            const FundState& s = evolved.states[static_cast<std::size_t>(v)][i];
            double e = 0.0;
            for (int c : n.children)
                e += tree.node(c).probability *
                     (evolved.states[static_cast<std::size_t>(c)][i].value / s.post_value);
            const double residual = std::abs(e - 1.0);
            if (residual > report.per_fund_max[i]) report.per_fund_max[i] = residual;
            if (residual > report.max_residual) {
                report.max_residual = residual;
                report.witness_node = v;
                report.witness_fund = static_cast<int>(i);
            }
        }
    }
    return report;
}

inline UnitRatioReport verify_unit_ratio_identity(const ScenarioTree& tree,
                                                  const GroupHistory& initial,
                                                  const StrategySpec& strategy) {
    return unit_ratio_check(tree, evolve_funds(tree, initial, strategy));
}

/// Monte Carlo estimate of the unconditional one-step drift of the
/// index process (a necessary martingale condition): mean, standard
/// error and z-score of X(t+1) - X(t) per period.
struct McFairnessReport {
    IndexKind kind = IndexKind::RA;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> mean_increment;
    std::vector<double> std_error;
    std::vector<double> z; // mean / std_error, 0 when both vanish
    double max_abs_z = 0.0;
};

/// Per-path strategy source: called with an Rng derived from (seed,
/// path) so a randomized strategy stays reproducible; independent of
/// the path's own prices, hence adapted.
using RuleFactory = std::function<StrategyRule(Rng&)>;

inline McFairnessReport mc_fairness_test(const PathModel& model, const GroupHistory& initial,
                                         const RuleFactory& make_rule, IndexKind kind,
                                         std::size_t n_paths, std::uint64_t seed,
                                         unsigned workers = 1) {
    if (n_paths < 100) throw OutOfRangeError("at least 100 paths are required");
    PathSampler sampler(model, seed);
    const auto T = static_cast<std::size_t>(model.horizon);

    // Fixed-size chunks with per-chunk partial sums, combined in chunk
    // order: the reduction is identical for every worker count.
    constexpr std::size_t chunk_size = 4096;
    const std::size_t n_chunks = (n_paths + chunk_size - 1) / chunk_size;
    std::vector<std::vector<MomentAccumulator>> partial(
        n_chunks, std::vector<MomentAccumulator>(T));

    detail::parallel_for(n_chunks, workers, [&](std::size_t chunk) {
        const std::size_t lo = chunk * chunk_size;
        const std::size_t hi = std::min(lo + chunk_size, n_paths);
        for (std::size_t p = lo; p < hi; ++p) {
            const MarketPath path = sampler.at(p);
            Rng strategy_rng(seed ^ 0x5bf03635d0d3ae4dULL, p);
            const StrategyRule rule = make_rule ? make_rule(strategy_rng) : StrategyRule{};
            const GroupHistory h = evolve_along_path(path, initial, rule);
            const IndexSeries series = index_series(h, kind, 0, model.horizon);
            for (std::size_t t = 0; t < T; ++t)
                partial[chunk][t].add(series.values[t + 1] - series.values[t]);
        }
    });

    McFairnessReport report;
    report.kind = kind;
    report.n_paths = n_paths;
    report.seed = seed;
    for (std::size_t t = 0; t < T; ++t) {
        MomentAccumulator acc;
        for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
            acc.sum += partial[chunk][t].sum;
            acc.sum_sq += partial[chunk][t].sum_sq;
            acc.n += partial[chunk][t].n;
        }
        const double mean = acc.mean();
        const double se = acc.std_error();
        report.mean_increment.push_back(mean);
        report.std_error.push_back(se);
        const double z = se > 0.0 ? mean / se : (mean == 0.0 ? 0.0 : std::copysign(1e300, mean));
        report.z.push_back(z);
        report.max_abs_z = std::max(report.max_abs_z, std::abs(z));
    }
    return report;
}

inline McFairnessReport mc_fairness_test(const PathModel& model, const GroupHistory& initial,
                                         const StrategyRule& rule, IndexKind kind,
                                         std::size_t n_paths, std::uint64_t seed,
                                         unsigned workers = 1) {
    return mc_fairness_test(
        model, initial, [&rule](Rng&) { return rule; }, kind, n_paths, seed, workers);
}

/// One realization of all funds' unit values at the comparison time,
/// with its probability.
struct ValueOutcome {
    std::vector<double> values;
    double probability = 0.0;
};

/// Product law over independent per-fund unit-value distributions.
inline std::vector<ValueOutcome> product_law(const std::vector<FactorLaw>& marginals) {
    for (const auto& law : marginals) law.validate();
    std::size_t count = 1;
    for (const auto& law : marginals) {
        count *= law.factors.size();
        if (count > 1'000'000)
            throw BudgetExceededError("product law would exceed 1e6 outcomes");
    }
    std::vector<ValueOutcome> out;
    out.reserve(count);
    std::vector<std::size_t> pick(marginals.size(), 0);
    for (std::size_t n = 0; n < count; ++n) {
        ValueOutcome o;
        o.probability = 1.0;
        o.values.reserve(marginals.size());
        for (std::size_t i = 0; i < marginals.size(); ++i) {
            o.values.push_back(marginals[i].factors[pick[i]]);
            o.probability *= marginals[i].probabilities[pick[i]];
        }
        out.push_back(std::move(o));
        for (std::size_t i = marginals.size(); i-- > 0;) {
            if (++pick[i] < marginals[i].factors.size()) break;
            pick[i] = 0;
        }
    }
    return out;
}

struct BiasDemoResult {
    double expected_rpl = 0.0;     // E of the endpoint-weighted mean index
    double expected_ra = 0.0;      // E of the chain-linked index (always 0 here)
    bool strict = false;           // some outcome has unequal unit values
    double equal_probability = 0.0; // P(all funds share one value)
};

/// Exact expectation of the endpoint-weighted index in the equal-start
/// buy-and-hold setting: every fund begins with unit value 1 and equal
/// unit counts, each fund's unit value at the comparison time has mean
/// 1, so fair pricing gives zero expected return. The closed form
///
///   rpl = (1/2n) sum_i w_i - 1 + (1/2) sum_i w_i^2 / sum_i w_i
///
/// then shows E[rpl] >= 0 with equality only when all unit values agree
/// almost surely, while the chain-linked index has mean exactly 0.
inline BiasDemoResult rpl_bias_demo(const std::vector<ValueOutcome>& law, double tol = 1e-9) {
    if (law.empty()) throw SettingViolatedError("empty unit-value law");
    const std::size_t n = law.front().values.size();
    if (n == 0) throw SettingViolatedError("unit-value law has no funds");

    double total_prob = 0.0;
    std::vector<double> means(n, 0.0);
    for (const auto& o : law) {
        if (o.values.size() != n)
            throw SettingViolatedError("unit-value outcomes have inconsistent fund counts");
        if (!(o.probability >= 0.0) || !std::isfinite(o.probability))
            throw SettingViolatedError("probabilities must be nonnegative");
        total_prob += o.probability;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(o.values[i] > 0.0) || !std::isfinite(o.values[i]))
                throw SettingViolatedError("unit values must be positive and finite");
            means[i] += o.probability * o.values[i];
        }
    }
    if (std::abs(total_prob - 1.0) > prob_sum_tol)
        throw SettingViolatedError("probabilities must sum to one");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(means[i] - 1.0) > tol)
            throw SettingViolatedError("fund " + std::to_string(i + 1) +
                                       " has expected unit value " + std::to_string(means[i]) +
                                       ", the setting requires 1");

    BiasDemoResult result;
    for (const auto& o : law) {
        double s = 0.0, sq = 0.0;
        bool all_equal = true;
        for (std::size_t i = 0; i < n; ++i) {
            s += o.values[i];
            sq += o.values[i] * o.values[i];
            all_equal = all_equal && o.values[i] == o.values[0];
        }
        const double rpl = s / (2.0 * static_cast<double>(n)) - 1.0 + 0.5 * sq / s;
        const double ra = s / static_cast<double>(n) - 1.0;
        result.expected_rpl += o.probability * rpl;
        result.expected_ra += o.probability * ra;
        if (all_equal) result.equal_probability += o.probability;
    }
    result.strict = result.equal_probability < 1.0 - prob_sum_tol;
    return result;
}

inline BiasDemoResult rpl_bias_demo(const std::vector<FactorLaw>& per_fund_laws,
                                    double tol = 1e-9) {
    return rpl_bias_demo(product_law(per_fund_laws), tol);
}

/// Monte Carlo check of the sampling interpretation: draw a fund at
/// random each period with probability equal to its asset share, and
/// compound that fund's one-period return. The expectation of the
/// compounded return is the chain-linked index.
struct SamplingCheck {
    double exact = 0.0;    // index over [s, t]
    double estimate = 0.0; // mean compounded randomized-fund return
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;

    double deviation() const { return estimate - exact; }
    bool within(double n_std_errors) const {
        return std::abs(deviation()) <= n_std_errors * std_error ||
               std::abs(deviation()) <= 1e-15;
    }
};

inline SamplingCheck sampling_interpretation_check(const GroupHistory& h, Time s, Time t,
                                                   std::size_t n_samples, std::uint64_t seed,
                                                   unsigned workers = 1) {
    if (n_samples < 100) throw OutOfRangeError("at least 100 samples are required");
    detail::require_window(h, s, t);

    // Per period: fund-pick cumulative weights and growth factors.
    const auto n_periods = static_cast<std::size_t>(t - s);
    const std::size_t n = h.funds.size();
    std::vector<std::vector<double>> cumulative(n_periods), growth(n_periods);
    for (std::size_t step = 0; step < n_periods; ++step) {
        const Time u = s + static_cast<Time>(step);
        const AssetSnapshot snap = assets(h, u);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += snap.weights[i];
            cumulative[step].push_back(acc);
            growth[step].push_back(detail::unit_value_factor(h.funds[i], u));
        }
        cumulative[step].back() = 1.0;
    }

    constexpr std::size_t chunk_size = 8192;
    const std::size_t n_chunks = (n_samples + chunk_size - 1) / chunk_size;
    std::vector<MomentAccumulator> partial(n_chunks);

    detail::parallel_for(n_chunks, workers, [&](std::size_t chunk) {
        const std::size_t lo = chunk * chunk_size;
        const std::size_t hi = std::min(lo + chunk_size, n_samples);
        for (std::size_t p = lo; p < hi; ++p) {
            Rng rng(seed, p);
            double acc = 1.0;
            for (std::size_t step = 0; step < n_periods; ++step) {
                const double x = rng.uniform();
                std::size_t i = 0;
                while (i + 1 < n && x >= cumulative[step][i]) ++i;
                acc *= growth[step][i];
            }
            partial[chunk].add(acc - 1.0);
        }
    });

    MomentAccumulator acc;
    for (const auto& part : partial) {
        acc.sum += part.sum;
        acc.sum_sq += part.sum_sq;
        acc.n += part.n;
    }

    SamplingCheck check;
    check.exact = index_ra(h, s, t);
    check.estimate = acc.mean();
    check.std_error = acc.std_error();
    check.n_samples = n_samples;
    check.seed = seed;
    return check;
}

} // namespace fairindex
