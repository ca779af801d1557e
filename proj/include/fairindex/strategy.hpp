#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/indices.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/scenario.hpp"

namespace fairindex {

/// Management decisions applied when a fund settles at a new time.
///
/// Flows are expressed relative to the fund's pre-flow value (unit
/// count carried in, times the new unit value), which keeps any choice
/// of fractions feasible regardless of how prices moved:
///
///   withdraw_fraction       share of the fund's value redeemed into the
///                           group's internal reallocation pool
///   reinvest_share          this fund's share of that pool (shares sum
///                           to one over the group)
///   external_flow_fraction  net client money in (+) or out (-)
///
/// weights, when present, are portfolio targets over the market's
/// assets (summing to one) the fund trades to after flows settle;
/// otherwise positions are scaled in proportion to the unit count.
/// split_factor, when present, multiplies the unit count after
/// settlement, rescaling the unit value to conserve fund assets.
struct FundAction {
    std::optional<std::vector<double>> weights;
    double withdraw_fraction = 0.0;
    double reinvest_share = 0.0;
    double external_flow_fraction = 0.0;
    std::optional<double> split_factor;
};

/// Per-node decisions on a scenario tree. actions[v] holds one action
/// per fund, applied on settlement at node v; nodes without an entry
/// default to holding positions with no flows. Keying decisions by node
/// makes the strategy adapted by construction; a key that is not a node
/// of the tree is rejected as referencing unavailable information.
///
/// At the root only weights and split_factor act (there is no prior
/// period for flows to settle against); root flows must be zero.
struct StrategySpec {
    std::map<int, std::vector<FundAction>> actions;

    const std::vector<FundAction>* at(int node_id) const {
        auto it = actions.find(node_id);
        return it == actions.end() ? nullptr : &it->second;
    }
};

/// Time-keyed counterpart of StrategySpec for evolution along a single
/// sampled path: per_fund applies every period, entries in overrides
/// replace it at specific times. Decisions depend on time only, so the
/// rule is trivially adapted.
struct StrategyRule {
    std::vector<FundAction> per_fund;
    std::map<Time, std::vector<FundAction>> overrides;

    const std::vector<FundAction>& at(Time t) const {
        auto it = overrides.find(t);
        return it == overrides.end() ? per_fund : it->second;
    }
};

/// One fund's full state at one node or time.
struct FundState {
    double units = 0.0;
    double value = 0.0;
    double post_units = 0.0; // after any same-time split
    double post_value = 0.0;
    std::vector<double> holdings;
    double unit_withdrawn = 0.0; // kW: units redeemed into the pool at settlement
    double unit_invested = 0.0;  // kI: units created out of the pool
    double net_flow = 0.0;       // d: external client money settled here
};

namespace detail {

inline void check_weights(const std::vector<double>& w, std::size_t n_assets,
                          const std::string& where) {
    if (w.size() != n_assets)
        throw InfeasibleStrategyError(where + ": weight vector width does not match asset count");
    double total = 0.0;
    for (double x : w) {
        if (!std::isfinite(x)) throw InfeasibleStrategyError(where + ": weight is not finite");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InfeasibleStrategyError(where + ": portfolio weights must sum to one");
}

inline std::vector<double> holdings_for(double fund_value, const std::vector<double>& weights,
                                        const std::vector<double>& prices) {
    std::vector<double> u(prices.size());
    for (std::size_t j = 0; j < prices.size(); ++j) u[j] = fund_value * weights[j] / prices[j];
    return u;
}

inline void apply_split_action(FundState& s, const std::optional<double>& factor,
                               const std::string& where) {
    s.post_units = s.units;
    s.post_value = s.value;
    if (factor) {
        if (!(*factor > 0.0) || !std::isfinite(*factor))
            throw InfeasibleStrategyError(where + ": split factor must be positive");
        s.post_units = s.units * *factor;
        s.post_value = s.value * s.units / s.post_units;
    }
}

/// Fund states at the start of the process: unit counts and values from
/// the recorded group, positions set from the action weights (equal
/// weights when none are given).
inline std::vector<FundState> initial_states(const GroupHistory& initial,
                                             const std::vector<double>& prices,
                                             const std::vector<FundAction>* actions) {
    initial.validate();
    if (actions && actions->size() != initial.funds.size())
        throw InfeasibleStrategyError("root actions do not cover every fund");
    std::vector<FundState> states;
    states.reserve(initial.funds.size());
    for (std::size_t i = 0; i < initial.funds.size(); ++i) {
        const FundLedger& f = initial.funds[i];
        const FundAction* a = actions ? &(*actions)[i] : nullptr;
        if (a && (a->withdraw_fraction != 0.0 || a->reinvest_share != 0.0 ||
                  a->external_flow_fraction != 0.0))
            throw InfeasibleStrategyError("fund '" + f.id +
                                          "': flows cannot settle at the start");
        FundState s;
        s.units = f.units_at(0);
        s.value = f.value_at(0);
        std::vector<double> w;
        if (a && a->weights) {
            check_weights(*a->weights, prices.size(), "fund '" + f.id + "'");
            w = *a->weights;
        } else {
            w.assign(prices.size(), 1.0 / static_cast<double>(prices.size()));
        }
        s.holdings = holdings_for(s.units * s.value, w, prices);
        apply_split_action(s, a ? a->split_factor : std::nullopt, "fund '" + f.id + "'");
        states.push_back(std::move(s));
    }
    return states;
}

/// Advances every fund one period: positions are marked at the new
/// prices to get the new unit value, flows settle at that value, funds
/// trade to their target weights, then any split rescales the units.
/// The withdrawal pool must be fully reinvested, and no unit count may
/// be driven to zero or below.
inline std::vector<FundState> evolve_step(const std::vector<FundState>& prev,
                                          const std::vector<double>& prices,
                                          const std::vector<FundAction>* actions,
                                          const std::vector<std::string>& fund_ids) {
    if (actions && actions->size() != prev.size())
        throw InfeasibleStrategyError("actions do not cover every fund");

    const std::size_t n = prev.size();
    std::vector<FundState> next(n);

    // Mark positions, settle internal and external flows.
    double pool = 0.0, share_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const FundAction* a = actions ? &(*actions)[i] : nullptr;
        double held = 0.0;
        for (std::size_t j = 0; j < prices.size(); ++j) held += prev[i].holdings[j] * prices[j];
        const double value = held / prev[i].post_units;
        if (!(value > 0.0) || !std::isfinite(value))
            throw InfeasibleStrategyError("fund '" + fund_ids[i] +
                                          "': unit value driven non-positive");
        next[i].value = value;

        const double wf = a ? a->withdraw_fraction : 0.0;
        const double ef = a ? a->external_flow_fraction : 0.0;
        if (wf < 0.0 || !std::isfinite(wf))
            throw InfeasibleStrategyError("fund '" + fund_ids[i] +
                                          "': withdraw fraction must be nonnegative");
        next[i].unit_withdrawn = wf * prev[i].post_units;
        next[i].net_flow = ef * held;
        pool += wf * held;
        share_total += a ? a->reinvest_share : 0.0;
    }
    if (pool > 0.0 && std::abs(share_total - 1.0) > 1e-9)
        throw InfeasibleStrategyError("reinvestment shares must sum to one when units are "
                                      "redeemed into the pool");

    for (std::size_t i = 0; i < n; ++i) {
        const FundAction* a = actions ? &(*actions)[i] : nullptr;
        const double share = a ? a->reinvest_share : 0.0;
        if (share < 0.0)
            throw InfeasibleStrategyError("fund '" + fund_ids[i] +
                                          "': reinvestment share must be nonnegative");
        next[i].unit_invested = share * pool / next[i].value;
        next[i].units = prev[i].post_units - next[i].unit_withdrawn + next[i].unit_invested +
                        next[i].net_flow / next[i].value;
        if (!(next[i].units > 0.0) || !std::isfinite(next[i].units))
            throw InfeasibleStrategyError("fund '" + fund_ids[i] +
                                          "': unit count driven non-positive");

        if (a && a->weights) {
            check_weights(*a->weights, prices.size(), "fund '" + fund_ids[i] + "'");
            next[i].holdings = holdings_for(next[i].units * next[i].value, *a->weights, prices);
        } else {
            next[i].holdings.resize(prices.size());
            const double scale = next[i].units / prev[i].post_units;
            for (std::size_t j = 0; j < prices.size(); ++j)
                next[i].holdings[j] = prev[i].holdings[j] * scale;
        }
        apply_split_action(next[i], a ? a->split_factor : std::nullopt,
                           "fund '" + fund_ids[i] + "'");
    }
    return next;
}

} // namespace detail

/// Fund states at every node of a scenario tree.
struct EvolvedGroup {
    std::vector<std::string> fund_ids;
    std::vector<std::vector<FundState>> states; // [node][fund]
};

/// Plays the strategy over the whole tree, starting from the recorded
/// group state at time 0. Strategy keys must be valid node ids. The
/// result satisfies the bookkeeping identities at every node by
/// construction, which validate_balance can confirm on any extracted
/// path history.
inline EvolvedGroup evolve_funds(const ScenarioTree& tree, const GroupHistory& initial,
                                 const StrategySpec& strategy) {
    if (tree.nodes.empty()) throw InvalidHistoryError("tree has no nodes");
    for (const auto& [node_id, acts] : strategy.actions) {
        if (node_id < 0 || node_id >= tree.n_nodes())
            throw NotAdaptedError("strategy references node " + std::to_string(node_id) +
                                  ", which is not part of the tree");
        if (acts.size() != initial.funds.size())
            throw NotAdaptedError("strategy at node " + std::to_string(node_id) +
                                  " does not cover every fund");
    }
    for (const auto& f : initial.funds)
        if (f.horizon() != 0)
            throw InvalidHistoryError("initial group must carry exactly the time-0 state");

    EvolvedGroup out;
    for (const auto& f : initial.funds) out.fund_ids.push_back(f.id);
    out.states.resize(static_cast<std::size_t>(tree.n_nodes()));
    out.states[0] = detail::initial_states(initial, tree.nodes[0].prices, strategy.at(0));
    for (int v = 1; v < tree.n_nodes(); ++v) {
        const TreeNode& n = tree.node(v);
        out.states[static_cast<std::size_t>(v)] =
            detail::evolve_step(out.states[static_cast<std::size_t>(n.parent)], n.prices,
                                strategy.at(v), out.fund_ids);
    }
    return out;
}

/// Plays the rule along one market path, returning a fully recorded
/// history (holdings, flows, splits) with the path attached.
inline GroupHistory evolve_along_path(const MarketPath& path, const GroupHistory& initial,
                                      const StrategyRule& rule) {
    path.validate();
    if (!rule.per_fund.empty() && rule.per_fund.size() != initial.funds.size())
        throw InfeasibleStrategyError("rule does not cover every fund");
    for (const auto& [t, acts] : rule.overrides) {
        if (t < 0 || t > path.horizon())
            throw NotAdaptedError("rule references time " + std::to_string(t) +
                                  " outside the path");
        if (acts.size() != initial.funds.size())
            throw NotAdaptedError("rule at time " + std::to_string(t) +
                                  " does not cover every fund");
    }

    const std::size_t n = initial.funds.size();
    const Time T = path.horizon();
    std::vector<std::vector<FundState>> states;
    states.reserve(static_cast<std::size_t>(T) + 1);

    const StrategyRule& r = rule;
    auto actions_at = [&](Time t) -> const std::vector<FundAction>* {
        const std::vector<FundAction>& acts = r.at(t);
        return acts.empty() ? nullptr : &acts;
    };

    std::vector<std::string> ids;
    for (const auto& f : initial.funds) ids.push_back(f.id);

    // A recurring rule has nothing to settle at time 0; only the
    // portfolio setup part of the action applies there.
    std::vector<FundAction> setup;
    if (const auto* first = actions_at(0)) {
        setup = *first;
        for (auto& a : setup) {
            a.withdraw_fraction = 0.0;
            a.reinvest_share = 0.0;
            a.external_flow_fraction = 0.0;
        }
    }
    states.push_back(
        detail::initial_states(initial, path.prices[0], setup.empty() ? nullptr : &setup));
    for (Time t = 1; t <= T; ++t)
        states.push_back(detail::evolve_step(states.back(), path.prices[static_cast<std::size_t>(t)],
                                             actions_at(t), ids));

    GroupHistory h;
    h.market = path;
    h.funds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        FundLedger& f = h.funds[i];
        f.id = ids[i];
        for (Time t = 0; t <= T; ++t) {
            const FundState& s = states[static_cast<std::size_t>(t)][i];
            f.units.push_back(s.units);
            f.values.push_back(s.value);
            f.holdings.push_back(s.holdings);
            f.net_flows.push_back(s.net_flow);
            f.unit_withdrawals.push_back(s.unit_withdrawn);
            f.unit_investments.push_back(s.unit_invested);
            if (s.post_units != s.units) f.post[t] = SplitState{s.post_units, s.post_value};
        }
    }
    h.validate_rectangular();
    return h;
}

/// Rebuilds the recorded history along the path from the root to the
/// given node, with the market prices seen on the way.
inline GroupHistory path_history(const ScenarioTree& tree, const EvolvedGroup& evolved,
                                 int node_id) {
    if (evolved.states.size() != static_cast<std::size_t>(tree.n_nodes()))
        throw OutOfRangeError("evolved group does not match the tree");
    const std::vector<int> path = tree.path_to(node_id);

    GroupHistory h;
    MarketPath m;
    m.asset_ids = tree.asset_ids;
    for (int v : path) m.prices.push_back(tree.node(v).prices);
    h.market = std::move(m);

    const std::size_t n = evolved.fund_ids.size();
    h.funds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        FundLedger& f = h.funds[i];
        f.id = evolved.fund_ids[i];
        for (std::size_t step = 0; step < path.size(); ++step) {
            const FundState& s = evolved.states[static_cast<std::size_t>(path[step])][i];
            f.units.push_back(s.units);
            f.values.push_back(s.value);
            f.holdings.push_back(s.holdings);
            f.net_flows.push_back(s.net_flow);
            f.unit_withdrawals.push_back(s.unit_withdrawn);
            f.unit_investments.push_back(s.unit_invested);
            if (s.post_units != s.units)
                f.post[static_cast<Time>(step)] = SplitState{s.post_units, s.post_value};
        }
    }
    h.validate_rectangular();
    return h;
}

/// The index anchored at the root, evaluated at every node. Equals
/// index_value(path_history(...), kind, 0, depth) at each node, but is
/// computed once over the whole tree.
inline std::vector<double> index_process(const ScenarioTree& tree, const EvolvedGroup& evolved,
                                         IndexKind kind) {
    if (evolved.states.size() != static_cast<std::size_t>(tree.n_nodes()))
        throw OutOfRangeError("evolved group does not match the tree");
    const std::size_t n = evolved.fund_ids.size();
    const auto n_nodes = static_cast<std::size_t>(tree.n_nodes());

    std::vector<double> x(n_nodes, 0.0);
    // Cumulative split factor per fund along the path to each node,
    // excluding any split at the node itself.
    std::vector<std::vector<double>> split_factor(n_nodes, std::vector<double>(n, 1.0));

    const std::vector<FundState>& root = evolved.states[0];
    double root_assets = 0.0;
    for (const FundState& s : root) root_assets += s.units * s.value;

    for (std::size_t v = 1; v < n_nodes; ++v) {
        const int parent = tree.node(static_cast<int>(v)).parent;
        const auto p = static_cast<std::size_t>(parent);
        for (std::size_t i = 0; i < n; ++i)
            split_factor[v][i] =
                split_factor[p][i] * (evolved.states[p][i].post_units / evolved.states[p][i].units);

        switch (kind) {
            case IndexKind::RA: {
                double total = 0.0, mean = 0.0;
                for (const FundState& s : evolved.states[p]) total += s.units * s.value;
                for (std::size_t i = 0; i < n; ++i) {
                    const FundState& sp = evolved.states[p][i];
                    const FundState& sv = evolved.states[v][i];
                    mean += (sp.units * sp.value / total) * (sv.value / sp.post_value - 1.0);
                }
                x[v] = (1.0 + x[p]) * (1.0 + mean) - 1.0;
                break;
            }
            case IndexKind::RPL: {
                double total = 0.0;
                for (const FundState& s : evolved.states[v]) total += s.units * s.value;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const FundState& s0 = root[i];
                    const FundState& sv = evolved.states[v][i];
                    const double r = sv.value * split_factor[v][i] / s0.value - 1.0;
                    acc += 0.5 * r *
                           (s0.units * s0.value / root_assets + sv.units * sv.value / total);
                }
                x[v] = acc;
                break;
            }
            case IndexKind::RV: {
                double log_sum = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    log_sum +=
                        std::log(evolved.states[v][i].value * split_factor[v][i] / root[i].value);
                x[v] = std::exp(log_sum / static_cast<double>(n)) - 1.0;
                break;
            }
        }
    }
    return x;
}

} // namespace fairindex
