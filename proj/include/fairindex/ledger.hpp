#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"

namespace fairindex {

/// Discrete observation times 0, 1, ..., T.
using Time = int;

namespace detail {

inline void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x))
        throw InvalidHistoryError(what + " is not finite");
}

inline void require_positive(double x, const std::string& what) {
    require_finite(x, what);
    if (x <= 0.0)
        throw InvalidHistoryError(what + " must be positive");
}

} // namespace detail

/// Asset prices on the shared time grid: prices[t][j] is the price of
/// asset j at time t. All prices are positive.
struct MarketPath {
    std::vector<std::string> asset_ids;
    std::vector<std::vector<double>> prices;

    int n_assets() const { return static_cast<int>(asset_ids.size()); }
    Time horizon() const { return static_cast<Time>(prices.size()) - 1; }

    double price(Time t, std::size_t j) const {
        if (t < 0 || t > horizon())
            throw OutOfRangeError("price time " + std::to_string(t) + " outside [0," +
                                  std::to_string(horizon()) + "]");
        return prices[static_cast<std::size_t>(t)].at(j);
    }

    std::size_t asset_index(const std::string& id) const {
        auto it = std::find(asset_ids.begin(), asset_ids.end(), id);
        if (it == asset_ids.end())
            throw MissingDataError("unknown asset id '" + id + "'");
        return static_cast<std::size_t>(it - asset_ids.begin());
    }

    void validate() const {
        if (asset_ids.empty())
            throw InvalidHistoryError("market path has no assets");
        if (prices.empty())
            throw InvalidHistoryError("market path has no observation times");
        for (std::size_t t = 0; t < prices.size(); ++t) {
            if (prices[t].size() != asset_ids.size())
                throw InvalidHistoryError("price row at time " + std::to_string(t) +
                                          " has wrong width");
            for (std::size_t j = 0; j < prices[t].size(); ++j)
                detail::require_positive(prices[t][j], "price of '" + asset_ids[j] +
                                                           "' at time " + std::to_string(t));
        }
    }
};

/// Post-event state (k(t+), w(t+)) recorded when a unit split or merger
/// changes the unit count between an observation and the following period.
struct SplitState {
    double units = 0.0;
    double value = 0.0;
};

/// One fund's bookkeeping over the time grid.
///
/// units[t]  = k(t), unit count at time t (before any same-time split)
/// values[t] = w(t), value of one unit at time t
/// post[t]   = (k(t+), w(t+)) when a split occurs at t; conservation
///             k(t+) w(t+) = k(t) w(t) is enforced on construction.
///
/// Optional columns. holdings[t] is either empty (not recorded at t) or
/// holds asset unit counts u_j(t) matching a market path. net_flows[t]
/// is the net client flow d(t) settled at time t (index 0 unused);
/// unit_withdrawals / unit_investments split the unit-count flow k(t) -
/// k((t-1)+) into redeemed and newly created units when an evolution
/// recorded them. Empty vectors mean "not recorded".
struct FundLedger {
    std::string id;
    std::vector<double> units;
    std::vector<double> values;
    std::map<Time, SplitState> post;
    std::vector<std::vector<double>> holdings;
    std::vector<double> net_flows;
    std::vector<double> unit_withdrawals;
    std::vector<double> unit_investments;

    Time horizon() const { return static_cast<Time>(units.size()) - 1; }

    bool covers(Time t) const { return t >= 0 && t <= horizon(); }

    void require_covers(Time t) const {
        if (!covers(t))
            throw OutOfRangeError("fund '" + id + "' has no data at time " + std::to_string(t));
    }

    double units_at(Time t) const {
        require_covers(t);
        return units[static_cast<std::size_t>(t)];
    }

    double value_at(Time t) const {
        require_covers(t);
        return values[static_cast<std::size_t>(t)];
    }

    bool has_split(Time t) const { return post.count(t) != 0; }

    /// k(t+): the unit count carried into period (t, t+1].
    double post_units_at(Time t) const {
        require_covers(t);
        auto it = post.find(t);
        return it == post.end() ? units[static_cast<std::size_t>(t)] : it->second.units;
    }

    /// w(t+): the unit value carried into period (t, t+1].
    double post_value_at(Time t) const {
        require_covers(t);
        auto it = post.find(t);
        return it == post.end() ? values[static_cast<std::size_t>(t)] : it->second.value;
    }

    /// A_i(t) = k_i(t) w_i(t). Splits conserve it.
    double assets_at(Time t) const { return units_at(t) * value_at(t); }

    /// Split factor f(t) = k(t+)/k(t); 1 when no split occurs at t.
    double split_factor(Time t) const { return post_units_at(t) / units_at(t); }

    /// Product of split factors over [0, t). Multiplying w(t) by this
    /// puts unit values from different times on a common unit basis.
    double cumulative_split_factor(Time t) const {
        require_covers(t);
        double f = 1.0;
        for (const auto& [v, state] : post) {
            if (v >= t) break;
            f *= state.units / units[static_cast<std::size_t>(v)];
        }
        return f;
    }

    /// w(t) expressed in time-0 units: w(t) * prod_{v<t} f(v).
    double adjusted_value(Time t) const { return value_at(t) * cumulative_split_factor(t); }

    bool has_net_flows() const { return !net_flows.empty(); }

    bool has_holdings_at(Time t) const {
        return covers(t) && static_cast<std::size_t>(t) < holdings.size() &&
               !holdings[static_cast<std::size_t>(t)].empty();
    }

    /// Relative tolerance for the split conservation check; splits are
    /// recorded with finite precision, so exact equality is not required.
    static constexpr double split_conservation_tol = 1e-9;

    void validate() const {
        if (id.empty())
            throw InvalidHistoryError("fund with empty id");
        if (units.empty())
            throw InvalidHistoryError("fund '" + id + "' has no observations");
        if (values.size() != units.size())
            throw InvalidHistoryError("fund '" + id + "': units/values length mismatch");
        for (std::size_t t = 0; t < units.size(); ++t) {
            detail::require_positive(units[t], "fund '" + id + "' units at time " + std::to_string(t));
            detail::require_positive(values[t], "fund '" + id + "' unit value at time " + std::to_string(t));
        }
        for (const auto& [t, state] : post) {
            if (!covers(t))
                throw InvalidHistoryError("fund '" + id + "': split recorded outside grid at time " +
                                          std::to_string(t));
            detail::require_positive(state.units, "fund '" + id + "' post-split units at time " +
                                                      std::to_string(t));
            detail::require_positive(state.value, "fund '" + id + "' post-split value at time " +
                                                      std::to_string(t));
            const double before = units[static_cast<std::size_t>(t)] * values[static_cast<std::size_t>(t)];
            const double after = state.units * state.value;
            if (std::abs(after - before) > split_conservation_tol * std::abs(before))
                throw InvalidHistoryError("fund '" + id + "': split at time " + std::to_string(t) +
                                          " does not conserve value (" + std::to_string(before) +
                                          " -> " + std::to_string(after) + ")");
        }
        if (!net_flows.empty() && net_flows.size() != units.size())
            throw InvalidHistoryError("fund '" + id + "': net flow column length mismatch");
        if (!holdings.empty() && holdings.size() != units.size())
            throw InvalidHistoryError("fund '" + id + "': holdings column length mismatch");
        if (unit_withdrawals.size() != unit_investments.size())
            throw InvalidHistoryError("fund '" + id + "': unit flow columns length mismatch");
        if (!unit_withdrawals.empty() && unit_withdrawals.size() != units.size())
            throw InvalidHistoryError("fund '" + id + "': unit flow column length mismatch");
    }
};

/// A group of funds on a shared grid, optionally with the market path
/// their holdings refer to. Funds normally share the same horizon; a
/// fund series may end early only when a recorded merger absorbs it,
/// which apply_merger consumes to produce an equal-length history.
/// merger_times records where apply_merger rebased unit counts.
struct GroupHistory {
    std::vector<FundLedger> funds;
    std::optional<MarketPath> market;
    std::vector<Time> merger_times;

    int n_funds() const { return static_cast<int>(funds.size()); }

    /// Largest time any fund covers.
    Time horizon() const {
        Time t = -1;
        for (const auto& f : funds) t = std::max(t, f.horizon());
        return t;
    }

    bool all_cover(Time t) const {
        return std::all_of(funds.begin(), funds.end(),
                           [t](const FundLedger& f) { return f.covers(t); });
    }

    std::size_t fund_index(const std::string& id) const {
        for (std::size_t i = 0; i < funds.size(); ++i)
            if (funds[i].id == id) return i;
        throw UnknownFundError("unknown fund id '" + id + "'");
    }

    const FundLedger& fund(const std::string& id) const { return funds[fund_index(id)]; }

    void validate() const {
        if (funds.empty())
            throw InvalidHistoryError("history has no funds");
        for (const auto& f : funds) f.validate();
        for (std::size_t i = 0; i < funds.size(); ++i)
            for (std::size_t j = i + 1; j < funds.size(); ++j)
                if (funds[i].id == funds[j].id)
                    throw InvalidHistoryError("duplicate fund id '" + funds[i].id + "'");
        if (market) {
            market->validate();
            if (market->horizon() < horizon())
                throw InvalidHistoryError("market path shorter than fund grid");
            for (const auto& f : funds)
                for (std::size_t t = 0; t < f.holdings.size(); ++t)
                    if (!f.holdings[t].empty() && f.holdings[t].size() != market->asset_ids.size())
                        throw InvalidHistoryError("fund '" + f.id + "': holdings row at time " +
                                                  std::to_string(t) + " has wrong width");
        }
    }

    /// Equal-length validation used after ingestion or merger application.
    void validate_rectangular() const {
        validate();
        const Time T = horizon();
        for (const auto& f : funds)
            if (f.horizon() != T)
                throw InvalidHistoryError("fund '" + f.id + "' ends at time " +
                                          std::to_string(f.horizon()) + " but the group runs to " +
                                          std::to_string(T));
    }
};

/// Per-fund assets, group total and normalized weights at one time.
struct AssetSnapshot {
    Time time = 0;
    std::vector<double> fund_assets; // A_i(t)
    double total = 0.0;              // A(t)
    std::vector<double> weights;     // A_i(t) / A(t)
};

/// A_i(t) = k_i(t) w_i(t) for every fund, the total, and weights.
/// Every fund must cover t and the total must be positive.
inline AssetSnapshot assets(const GroupHistory& h, Time t) {
    if (h.funds.empty())
        throw InvalidHistoryError("history has no funds");
    AssetSnapshot snap;
    snap.time = t;
    snap.fund_assets.reserve(h.funds.size());
    for (const auto& f : h.funds) snap.fund_assets.push_back(f.assets_at(t));
    for (double a : snap.fund_assets) snap.total += a;
    if (!(snap.total > 0.0))
        throw ZeroTotalAssetsError("total group assets are not positive at time " +
                                   std::to_string(t));
    snap.weights.reserve(snap.fund_assets.size());
    for (double a : snap.fund_assets) snap.weights.push_back(a / snap.total);
    return snap;
}

/// Records a unit split for one fund at time t: the unit count becomes
/// new_units and the unit value is rescaled so k(t+) w(t+) = k(t) w(t).
/// Returns the modified copy.
inline GroupHistory apply_split(GroupHistory h, const std::string& fund_id, Time t,
                                double new_units) {
    FundLedger& f = h.funds[h.fund_index(fund_id)];
    f.require_covers(t);
    if (!(new_units > 0.0) || !std::isfinite(new_units))
        throw NonPositiveUnitsError("post-split unit count for fund '" + fund_id +
                                    "' must be positive");
    if (f.has_split(t))
        throw InvalidEventError("fund '" + fund_id + "' already has a split at time " +
                                std::to_string(t));
    const double k = f.units_at(t);
    const double w = f.value_at(t);
    f.post[t] = SplitState{new_units, w * k / new_units};
    return h;
}

/// One fund absorbing another at a given time. post_units is the unit
/// count of the surviving fund immediately after absorption; its unit
/// value follows from conservation of combined assets.
struct MergerEvent {
    std::string absorbed;
    std::string survivor;
    Time time = 0;
    double post_units = 0.0;
};

/// Net client flow settled at time t across the whole group:
///   d(t) = sum_i w_i(t) * (k_i(t) - k_i((t-1)+)).
/// This is the money that entered (positive) or left (negative) between
/// t-1 and t, valued at time-t unit values. Requires t >= 1 and full
/// coverage of t-1 and t.
inline double aggregate_flows(const GroupHistory& h, Time t) {
    if (t < 1)
        throw OutOfRangeError("aggregate flow is defined for t >= 1, got " + std::to_string(t));
    double d = 0.0;
    for (const auto& f : h.funds) {
        f.require_covers(t);
        d += f.value_at(t) * (f.units_at(t) - f.post_units_at(t - 1));
    }
    return d;
}

namespace detail {

/// One-period growth factor of a fund's unit value, measured on the
/// post-split basis: w(u+1) / w(u+).
inline double unit_value_factor(const FundLedger& f, Time u) {
    f.require_covers(u + 1);
    return f.values[static_cast<std::size_t>(u + 1)] / f.post_value_at(u);
}

} // namespace detail

/// Replaces the absorbed and surviving funds with a single fund covering
/// the whole grid, so that chain-linked statistics of the returned
/// history treat the pair as one entity throughout.
///
/// Before the merger time the combined fund's unit value compounds the
/// asset-weighted average of the pair's one-period value factors, and
/// its unit count is chosen to reproduce the pair's combined assets.
/// At the merger time the recorded post_units rebases the unit count,
/// with the unit value set by conservation of combined assets. From
/// then on the survivor's own records are used unchanged.
///
/// Holdings are summed while both funds exist (when both recorded them)
/// and net flows likewise; otherwise those columns are left unrecorded.
inline GroupHistory apply_merger(GroupHistory h, const MergerEvent& ev) {
    if (ev.absorbed == ev.survivor)
        throw InvalidEventError("fund '" + ev.absorbed + "' cannot absorb itself");
    const std::size_t ia = h.fund_index(ev.absorbed);
    const std::size_t is = h.fund_index(ev.survivor);
    const FundLedger& fa = h.funds[ia];
    const FundLedger& fs = h.funds[is];
    const Time tau = ev.time;
    const Time T = fs.horizon();

    if (tau < 1 || tau >= T)
        throw OutOfRangeError("merger time " + std::to_string(tau) + " outside [1," +
                              std::to_string(T - 1) + "]");
    if (!(ev.post_units > 0.0) || !std::isfinite(ev.post_units))
        throw NonPositiveUnitsError("post-merger unit count must be positive");
    fa.require_covers(tau);
    if (fa.has_split(tau))
        throw InvalidEventError("fund '" + fa.id + "' has a split at the merger time");
    if (fs.has_split(tau))
        throw InvalidEventError("fund '" + fs.id + "' has a split at the merger time");

    FundLedger merged;
    merged.id = fs.id;
    const std::size_t n_steps = static_cast<std::size_t>(T) + 1;
    merged.units.resize(n_steps);
    merged.values.resize(n_steps);

    // Combined unit value before the merger: start from the survivor's
    // level and compound asset-weighted one-period factors of the pair.
    double w = fs.value_at(0);
    for (Time t = 0; t <= tau; ++t) {
        const double assets_a = fa.assets_at(t);
        const double assets_s = fs.assets_at(t);
        const double combined = assets_a + assets_s;
        merged.values[static_cast<std::size_t>(t)] = w;
        merged.units[static_cast<std::size_t>(t)] = combined / w;
        if (t < tau) {
            const double factor = (assets_s * detail::unit_value_factor(fs, t) +
                                   assets_a * detail::unit_value_factor(fa, t)) /
                                  combined;
            w *= factor;
        }
    }

    // Rebase at the merger: recorded post_units, value by conservation.
    const double combined_at_tau = fa.assets_at(tau) + fs.assets_at(tau);
    merged.post[tau] = SplitState{ev.post_units, combined_at_tau / ev.post_units};

    for (Time t = tau + 1; t <= T; ++t) {
        merged.units[static_cast<std::size_t>(t)] = fs.units_at(t);
        merged.values[static_cast<std::size_t>(t)] = fs.value_at(t);
    }
    for (const auto& [t, state] : fs.post)
        if (t > tau) merged.post[t] = state;

    // Optional columns survive only where they stay well defined.
    bool both_holdings = true;
    for (Time t = 0; t <= tau && both_holdings; ++t)
        both_holdings = fa.has_holdings_at(t) && fs.has_holdings_at(t);
    if (both_holdings && fs.holdings.size() == n_steps) {
        merged.holdings.resize(n_steps);
        for (Time t = 0; t <= T; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            if (t <= tau) {
                merged.holdings[ts] = fs.holdings[ts];
                for (std::size_t j = 0; j < merged.holdings[ts].size(); ++j)
                    merged.holdings[ts][j] += fa.holdings[ts].at(j);
            } else {
                merged.holdings[ts] = fs.holdings[ts];
            }
        }
    }
    if (fa.has_net_flows() && fs.has_net_flows()) {
        merged.net_flows.resize(n_steps, 0.0);
        for (Time t = 0; t <= T; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            merged.net_flows[ts] = fs.net_flows[ts];
            if (t <= tau) merged.net_flows[ts] += fa.net_flows[ts];
        }
    }

    GroupHistory out;
    out.market = h.market;
    out.merger_times = h.merger_times;
    out.merger_times.push_back(tau);
    out.funds.reserve(h.funds.size() - 1);
    for (std::size_t i = 0; i < h.funds.size(); ++i) {
        if (i == ia) continue;
        if (i == is)
            out.funds.push_back(merged);
        else
            out.funds.push_back(h.funds[i]);
    }
    out.validate();
    return out;
}

} // namespace fairindex
