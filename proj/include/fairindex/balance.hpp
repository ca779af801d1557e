#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"

namespace fairindex {

/// The bookkeeping identities a recorded history can be audited
/// against. Differences written f(t) - f((t-1)+) take the post-split
/// state as the baseline, matching how the ledger stores events.
///
/// portfolio_value     k(t) w(t) = sum_j u_j(t) c_j(t)
/// split_conservation  k(t+) w(t+) = k(t) w(t)
/// holding_gain        k(t+) (w(t+1) - w(t+)) = sum_j u_j(t) (c_j(t+1) - c_j(t))
/// unit_flow           w(t) (k(t) - k((t-1)+)) = (kI(t) - kW(t)) w(t) + d(t)
/// rebalance           w(t) (k(t) - k((t-1)+)) = sum_j c_j(t) (u_j(t) - u_j(t-1))
/// aggregate_flow      sum_i w_i(t) (k_i(t) - k_i((t-1)+)) = sum_i d_i(t)
enum class BalanceCheck {
    PortfolioValue,
    SplitConservation,
    HoldingGain,
    UnitFlow,
    Rebalance,
    AggregateFlow,
};

inline const char* to_string(BalanceCheck c) {
    switch (c) {
        case BalanceCheck::PortfolioValue: return "portfolio_value";
        case BalanceCheck::SplitConservation: return "split_conservation";
        case BalanceCheck::HoldingGain: return "holding_gain";
        case BalanceCheck::UnitFlow: return "unit_flow";
        case BalanceCheck::Rebalance: return "rebalance";
        case BalanceCheck::AggregateFlow: return "aggregate_flow";
    }
    return "?";
}

struct BalanceChecks {
    bool portfolio_value = true;
    bool split_conservation = true;
    bool holding_gain = true;
    bool unit_flow = true;
    bool rebalance = true;
    bool aggregate_flow = true;
    /// With no recorded net flows, treat the group flow identity as the
    /// definition of d(t) instead of a check against recorded values.
    bool infer_flows = false;

    static BalanceChecks all() { return {}; }

    static BalanceChecks none() {
        BalanceChecks c;
        c.portfolio_value = c.split_conservation = c.holding_gain = false;
        c.unit_flow = c.rebalance = c.aggregate_flow = false;
        return c;
    }

    /// Checks that need only units, values and recorded splits.
    static BalanceChecks ledger_only() {
        BalanceChecks c = none();
        c.split_conservation = true;
        return c;
    }

    /// The subset of checks the recorded columns can support.
    static BalanceChecks available_for(const GroupHistory& h);
};

/// A single identity whose residual exceeded the tolerance.
/// fund is empty for group-level checks.
struct BalanceViolation {
    BalanceCheck check = BalanceCheck::SplitConservation;
    std::string fund;
    Time time = 0;
    double residual = 0.0;
};

struct ValidationReport {
    double tol = 0.0;
    std::vector<BalanceCheck> checks_run;
    std::size_t comparisons = 0;
    std::vector<BalanceViolation> violations;
    double max_residual = 0.0; // largest |residual| over all comparisons
    BalanceViolation worst;    // where max_residual occurred
    std::vector<double> inferred_flows; // group d(t) from unit movements, t >= 1

    bool passed() const { return violations.empty(); }
};

namespace detail {

/// Difference identities compare near-cancelling products, so the
/// residual is normalized by the money scale of the books involved,
/// not only by the (possibly tiny) compared values themselves.
inline double relative_residual(double lhs, double rhs, double scale_hint) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::abs(scale_hint), 1.0});
    return (lhs - rhs) / scale;
}

inline bool fund_has_unit_flows(const FundLedger& f) {
    return !f.unit_withdrawals.empty() && !f.unit_investments.empty();
}

inline bool fund_has_all_holdings(const FundLedger& f) {
    for (Time t = 0; t <= f.horizon(); ++t)
        if (!f.has_holdings_at(t)) return false;
    return true;
}

} // namespace detail

inline BalanceChecks BalanceChecks::available_for(const GroupHistory& h) {
    BalanceChecks c = none();
    c.split_conservation = true;
    const bool holdings = h.market.has_value() &&
                          std::all_of(h.funds.begin(), h.funds.end(), detail::fund_has_all_holdings);
    c.portfolio_value = holdings;
    c.holding_gain = holdings;
    c.rebalance = holdings;
    const bool unit_flows =
        std::all_of(h.funds.begin(), h.funds.end(), detail::fund_has_unit_flows);
    const bool net_flows = std::all_of(h.funds.begin(), h.funds.end(),
                                       [](const FundLedger& f) { return f.has_net_flows(); });
    c.unit_flow = unit_flows && net_flows;
    c.aggregate_flow = net_flows;
    return c;
}

/// Audits the recorded history against the selected identities.
/// Residuals are relative to the larger of the compared quantities and
/// the fund's (or group's) asset value at that time; every comparison
/// feeds max_residual, and those beyond tol are listed as violations.
/// Requesting a check whose data is not recorded throws
/// MissingDataError.
inline ValidationReport validate_balance(const GroupHistory& h, double tol,
                                         const BalanceChecks& checks = BalanceChecks::all()) {
    h.validate();
    if (!(tol >= 0.0))
        throw OutOfRangeError("tolerance must be nonnegative");

    ValidationReport report;
    report.tol = tol;

    auto record = [&](BalanceCheck check, const std::string& fund, Time t, double lhs,
                      double rhs, double scale_hint) {
        const double r = detail::relative_residual(lhs, rhs, scale_hint);
        ++report.comparisons;
        if (std::abs(r) > report.max_residual) {
            report.max_residual = std::abs(r);
            report.worst = BalanceViolation{check, fund, t, r};
        }
        if (std::abs(r) > tol)
            report.violations.push_back(BalanceViolation{check, fund, t, r});
    };

    const auto need = [](bool ok, const std::string& what) {
        if (!ok) throw MissingDataError(what);
    };

    const bool flows_recorded = std::all_of(h.funds.begin(), h.funds.end(),
                                            [](const FundLedger& f) { return f.has_net_flows(); });

    // Group-level identities run over times every fund covers.
    Time min_T = h.horizon();
    for (const auto& f : h.funds) min_T = std::min(min_T, f.horizon());

    if (checks.portfolio_value || checks.holding_gain || checks.rebalance) {
        need(h.market.has_value(), "holdings checks requested but no market path is attached");
        const MarketPath& m = *h.market;
        for (const auto& f : h.funds) {
            for (Time t = 0; t <= f.horizon(); ++t) {
                need(f.has_holdings_at(t),
                     "fund '" + f.id + "' has no holdings at time " + std::to_string(t));
                const auto& u = f.holdings[static_cast<std::size_t>(t)];
                if (checks.portfolio_value) {
                    double held = 0.0;
                    for (std::size_t j = 0; j < u.size(); ++j) held += u[j] * m.price(t, j);
                    record(BalanceCheck::PortfolioValue, f.id, t, held, f.assets_at(t),
                           f.assets_at(t));
                }
                if (checks.holding_gain && t < f.horizon()) {
                    double gain = 0.0;
                    for (std::size_t j = 0; j < u.size(); ++j)
                        gain += u[j] * (m.price(t + 1, j) - m.price(t, j));
                    record(BalanceCheck::HoldingGain, f.id, t,
                           f.post_units_at(t) * (f.value_at(t + 1) - f.post_value_at(t)), gain,
                           f.assets_at(t));
                }
                if (checks.rebalance && t >= 1) {
                    const auto& prev = f.holdings[static_cast<std::size_t>(t - 1)];
                    double traded = 0.0;
                    for (std::size_t j = 0; j < u.size(); ++j)
                        traded += m.price(t, j) * (u[j] - prev[j]);
                    record(BalanceCheck::Rebalance, f.id, t,
                           f.value_at(t) * (f.units_at(t) - f.post_units_at(t - 1)), traded,
                           f.assets_at(t));
                }
            }
        }
    }

    if (checks.split_conservation) {
        for (const auto& f : h.funds)
            for (const auto& [t, state] : f.post)
                record(BalanceCheck::SplitConservation, f.id, t, state.units * state.value,
                       f.assets_at(t), f.assets_at(t));
    }

    if (checks.unit_flow) {
        for (const auto& f : h.funds) {
            need(detail::fund_has_unit_flows(f),
                 "fund '" + f.id + "' has no recorded unit withdrawals/investments");
            need(f.has_net_flows(), "fund '" + f.id + "' has no recorded net flows");
            for (Time t = 1; t <= f.horizon(); ++t) {
                const auto ts = static_cast<std::size_t>(t);
                const double w = f.value_at(t);
                record(BalanceCheck::UnitFlow, f.id, t,
                       w * (f.units_at(t) - f.post_units_at(t - 1)),
                       (f.unit_investments[ts] - f.unit_withdrawals[ts]) * w + f.net_flows[ts],
                       f.assets_at(t));
            }
        }
    }

    if (checks.aggregate_flow) {
        if (!checks.infer_flows)
            for (const auto& f : h.funds)
                need(f.has_net_flows(), "fund '" + f.id + "' has no recorded net flows");
        for (Time t = 1; t <= min_T; ++t) {
            const double moved = aggregate_flows(h, t);
            double recorded = moved;
            if (flows_recorded) {
                recorded = 0.0;
                for (const auto& f : h.funds) recorded += f.net_flows[static_cast<std::size_t>(t)];
            }
            record(BalanceCheck::AggregateFlow, "", t, moved, recorded, assets(h, t).total);
            report.inferred_flows.push_back(moved);
        }
    }

    if (checks.portfolio_value) report.checks_run.push_back(BalanceCheck::PortfolioValue);
    if (checks.split_conservation) report.checks_run.push_back(BalanceCheck::SplitConservation);
    if (checks.holding_gain) report.checks_run.push_back(BalanceCheck::HoldingGain);
    if (checks.unit_flow) report.checks_run.push_back(BalanceCheck::UnitFlow);
    if (checks.rebalance) report.checks_run.push_back(BalanceCheck::Rebalance);
    if (checks.aggregate_flow) report.checks_run.push_back(BalanceCheck::AggregateFlow);
    return report;
}

} // namespace fairindex
