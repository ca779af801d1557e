#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairindex/indices.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/rng.hpp"
#include "fairindex/scenario.hpp"
#include "fairindex/strategy.hpp"

namespace fairindex {

/// Shape of randomly drawn fund histories.
struct HistoryOptions {
    int min_funds = 1;
    int max_funds = 5;
    Time min_horizon = 2;
    Time max_horizon = 6;
    double min_initial_value = 0.5;
    double max_initial_value = 50.0;
    double min_factor = 0.7;  // one-period unit-value factor range
    double max_factor = 1.4;
    double min_units = 1e2;
    double max_units = 1e6;
    double flow_probability = 0.5;  // chance of a unit-count change per fund-period
    double min_flow_factor = 0.75;
    double max_flow_factor = 1.3;
    double split_probability = 0.15;  // chance of a split per fund at times 1..T-1
    bool record_flows = false;        // also fill the net_flows column
};

/// Draws a group history with random value paths, unit-count flows and
/// splits. With record_flows the net flow column is filled from the
/// unit-count changes (all flows treated as client money), so the
/// aggregate flow identity holds by construction.
inline GroupHistory random_history(Rng& rng, const HistoryOptions& opt = {}) {
    GroupHistory h;
    const int n = rng.uniform_int(opt.min_funds, opt.max_funds);
    const Time T = static_cast<Time>(rng.uniform_int(opt.min_horizon, opt.max_horizon));
    for (int i = 0; i < n; ++i) {
        FundLedger f;
        f.id = "F" + std::to_string(i + 1);
        f.values.push_back(rng.uniform(opt.min_initial_value, opt.max_initial_value));
        f.units.push_back(rng.uniform(opt.min_units, opt.max_units));
        for (Time t = 1; t <= T; ++t) {
            f.values.push_back(f.values.back() * rng.uniform(opt.min_factor, opt.max_factor));
            double k = f.units.back();
            if (auto it = f.post.find(t - 1); it != f.post.end()) k = it->second.units;
            if (rng.coin(opt.flow_probability))
                k *= rng.uniform(opt.min_flow_factor, opt.max_flow_factor);
            f.units.push_back(k);
            if (t < T && rng.coin(opt.split_probability)) {
                static constexpr double split_choices[] = {2.0, 3.0, 0.5, 1.25};
                const double factor = split_choices[rng.uniform_int(0, 3)];
                const double post_units = f.units.back() * factor;
                f.post[t] = SplitState{post_units, f.values.back() / factor};
            }
        }
        if (opt.record_flows) {
            f.net_flows.assign(static_cast<std::size_t>(T) + 1, 0.0);
            for (Time t = 1; t <= T; ++t) {
                const auto ts = static_cast<std::size_t>(t);
                f.net_flows[ts] = f.values[ts] * (f.units[ts] - f.post_units_at(t - 1));
            }
        }
        h.funds.push_back(std::move(f));
    }
    h.validate_rectangular();
    return h;
}

/// Uniformly drawn partition of the group's funds into B nonempty
/// blocks, B itself uniform on [1, n]. Fund order within blocks is
/// shuffled.
inline GroupingPlan random_partition(Rng& rng, const GroupHistory& h) {
    std::vector<std::string> ids;
    for (const auto& f : h.funds) ids.push_back(f.id);
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    const int n = static_cast<int>(ids.size());
    const int n_blocks = rng.uniform_int(1, n);
    GroupingPlan plan;
    plan.blocks.assign(static_cast<std::size_t>(n_blocks), {});
    for (int i = 0; i < n; ++i) {
        // The first n_blocks funds seed one block each so none is empty.
        const int b = i < n_blocks ? i : rng.uniform_int(0, n_blocks - 1);
        plan.blocks[static_cast<std::size_t>(b)].push_back(ids[static_cast<std::size_t>(i)]);
    }
    plan.validate_against(h);
    return plan;
}

/// Shape of randomly drawn scenario models.
struct ModelOptions {
    int min_assets = 1;
    int max_assets = 4;
    int min_branching = 2;
    int max_branching = 3;
    Time min_horizon = 1;
    Time max_horizon = 4;
    double min_factor = 0.5;
    double max_factor = 1.6;
    /// When set, every asset's factor law is rescaled so its mean hits
    /// this value (1.0 gives driftless prices).
    std::optional<double> mean_target = 1.0;
    double zero_branch_probability = 0.1;  // chance of one extra zero-probability outcome
};

/// Draws a one-period joint factor table shared by all periods, with
/// per-asset means rescaled onto the requested target.
inline PathModel random_model(Rng& rng, const ModelOptions& opt = {}) {
    PathModel model;
    const int n_assets = rng.uniform_int(opt.min_assets, opt.max_assets);
    for (int j = 0; j < n_assets; ++j) {
        model.asset_ids.push_back("A" + std::to_string(j + 1));
        model.initial_prices.push_back(rng.uniform(0.5, 100.0));
    }
    model.horizon = static_cast<Time>(rng.uniform_int(opt.min_horizon, opt.max_horizon));

    int n_outcomes = rng.uniform_int(opt.min_branching, opt.max_branching);
    const bool add_zero_branch = rng.coin(opt.zero_branch_probability);
    if (add_zero_branch) ++n_outcomes;

    std::vector<double> raw(static_cast<std::size_t>(n_outcomes));
    double total = 0.0;
    for (int b = 0; b < n_outcomes; ++b) {
        const bool zero = add_zero_branch && b == n_outcomes - 1;
        raw[static_cast<std::size_t>(b)] = zero ? 0.0 : rng.uniform(0.1, 1.0);
        total += raw[static_cast<std::size_t>(b)];
    }

    model.outcomes.resize(static_cast<std::size_t>(n_outcomes));
    for (int b = 0; b < n_outcomes; ++b) {
        auto& o = model.outcomes[static_cast<std::size_t>(b)];
        o.probability = raw[static_cast<std::size_t>(b)] / total;
        o.factors.resize(static_cast<std::size_t>(n_assets));
        for (int j = 0; j < n_assets; ++j)
            o.factors[static_cast<std::size_t>(j)] = rng.uniform(opt.min_factor, opt.max_factor);
    }

    if (opt.mean_target) {
        for (int j = 0; j < n_assets; ++j) {
            double mean = 0.0;
            for (const auto& o : model.outcomes)
                mean += o.probability * o.factors[static_cast<std::size_t>(j)];
            const double scale = *opt.mean_target / mean;
            for (auto& o : model.outcomes) o.factors[static_cast<std::size_t>(j)] *= scale;
        }
    }
    model.validate();
    return model;
}

/// Starting group state for an evolution: a single observation at time
/// 0 with random unit counts and values.
inline GroupHistory random_initial_group(Rng& rng, int n_funds) {
    GroupHistory h;
    for (int i = 0; i < n_funds; ++i) {
        FundLedger f;
        f.id = "F" + std::to_string(i + 1);
        f.units.push_back(rng.uniform(1e2, 1e5));
        f.values.push_back(rng.uniform(0.5, 50.0));
        h.funds.push_back(std::move(f));
    }
    h.validate_rectangular();
    return h;
}

/// Shape of randomly drawn strategies.
struct StrategyOptions {
    double weight_probability = 0.7;    // chance a fund re-targets weights at a node
    double withdraw_probability = 0.4;  // chance a fund redeems into the pool
    double max_withdraw_fraction = 0.4;
    double external_probability = 0.4;  // chance of client money in or out
    double min_external_fraction = -0.15;
    double max_external_fraction = 0.25;
    double split_probability = 0.08;
    double skip_node_probability = 0.2;  // nodes left at the hold-positions default
};

namespace detail {

inline std::vector<double> random_weights(Rng& rng, std::size_t n_assets) {
    std::vector<double> w(n_assets);
    double total = 0.0;
    for (auto& x : w) {
        x = rng.uniform(0.05, 1.0);
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

inline std::vector<FundAction> random_actions(Rng& rng, std::size_t n_funds,
                                              std::size_t n_assets, bool root,
                                              const StrategyOptions& opt) {
    std::vector<FundAction> actions(n_funds);
    std::vector<double> shares(n_funds);
    double share_total = 0.0;
    for (std::size_t i = 0; i < n_funds; ++i) {
        shares[i] = rng.uniform(0.1, 1.0);
        share_total += shares[i];
    }
    for (std::size_t i = 0; i < n_funds; ++i) {
        FundAction& a = actions[i];
        if (rng.coin(opt.weight_probability)) a.weights = random_weights(rng, n_assets);
        if (!root) {
            if (rng.coin(opt.withdraw_probability))
                a.withdraw_fraction = rng.uniform(0.0, opt.max_withdraw_fraction);
            a.reinvest_share = shares[i] / share_total;
            if (rng.coin(opt.external_probability))
                a.external_flow_fraction =
                    rng.uniform(opt.min_external_fraction, opt.max_external_fraction);
        }
        if (rng.coin(opt.split_probability)) a.split_factor = rng.uniform(0.3, 3.0);
    }
    return actions;
}

} // namespace detail

/// Node-keyed strategy over the tree: most nodes get random weights and
/// flows, some are skipped (hold positions). Root actions carry weights
/// only. Adapted by construction, since every key is a node id.
inline StrategySpec random_strategy(Rng& rng, const ScenarioTree& tree, std::size_t n_funds,
                                    const StrategyOptions& opt = {}) {
    StrategySpec spec;
    const std::size_t n_assets = tree.asset_ids.size();
    spec.actions[0] = detail::random_actions(rng, n_funds, n_assets, true, opt);
    for (int v = 1; v < tree.n_nodes(); ++v) {
        if (rng.coin(opt.skip_node_probability)) continue;
        spec.actions[v] = detail::random_actions(rng, n_funds, n_assets, false, opt);
    }
    return spec;
}

/// Time-keyed rule for evolution along sampled paths: one base action
/// set applied every period, plus random per-time overrides.
inline StrategyRule random_rule(Rng& rng, std::size_t n_funds, std::size_t n_assets,
                                Time horizon, const StrategyOptions& opt = {}) {
    StrategyRule rule;
    rule.per_fund = detail::random_actions(rng, n_funds, n_assets, false, opt);
    for (Time t = 1; t <= horizon; ++t)
        if (rng.coin(0.3))
            rule.overrides[t] = detail::random_actions(rng, n_funds, n_assets, false, opt);
    return rule;
}

} // namespace fairindex
