#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"

namespace fairindex {

/// The three group-level return statistics.
///
/// RA   chain-linked asset-weighted mean of one-period unit-value returns
/// RPL  arithmetic mean of span returns with endpoint-averaged weights
/// RV   equal-weighted geometric mean of span growth factors
enum class IndexKind { RA, RPL, RV };

inline const char* to_string(IndexKind k) {
    switch (k) {
        case IndexKind::RA: return "ra";
        case IndexKind::RPL: return "rpl";
        case IndexKind::RV: return "rv";
    }
    return "?";
}

inline IndexKind index_kind_from_string(const std::string& s) {
    if (s == "ra") return IndexKind::RA;
    if (s == "rpl") return IndexKind::RPL;
    if (s == "rv") return IndexKind::RV;
    throw ParseError("unknown index kind '" + s + "' (expected ra, rpl or rv)");
}

/// One-period unit-value return (w(u+1) - w(u+)) / w(u+), measured on
/// the post-split basis so recorded splits do not register as returns.
inline double period_return(const FundLedger& f, Time u) {
    if (u < 0) throw OutOfRangeError("period start must be nonnegative");
    f.require_covers(u + 1);
    return detail::unit_value_factor(f, u) - 1.0;
}

/// Span return over [s, t] on a common unit basis: unit values are
/// multiplied by the cumulative split factor before comparing, which
/// reduces to (w(t) - w(s+)) / w(s+) when the only split is at s.
inline double span_return(const FundLedger& f, Time s, Time t) {
    if (s > t) throw OutOfRangeError("span start after end");
    f.require_covers(s);
    f.require_covers(t);
    if (s == t) return 0.0;
    const double base = f.adjusted_value(s);
    return (f.adjusted_value(t) - base) / base;
}

/// Growth factor form of span_return: (1 + r).
inline double span_growth(const FundLedger& f, Time s, Time t) {
    return 1.0 + span_return(f, s, t);
}

namespace detail {

inline void require_window(const GroupHistory& h, Time s, Time t) {
    if (s < 0) throw OutOfRangeError("window start must be nonnegative");
    if (s > t)
        throw OutOfRangeError("window start " + std::to_string(s) + " after end " +
                              std::to_string(t));
    for (const auto& f : h.funds) f.require_covers(t);
}

} // namespace detail

/// Asset-weighted mean of one-period returns across the group:
///   m(u) = sum_i A_i(u)/A(u) * r_i(u, u+1).
inline double ra_period_mean(const GroupHistory& h, Time u) {
    detail::require_window(h, u, u + 1);
    const AssetSnapshot snap = assets(h, u);
    double m = 0.0;
    for (std::size_t i = 0; i < h.funds.size(); ++i)
        m += snap.weights[i] * period_return(h.funds[i], u);
    return m;
}

/// Chain-linked asset-weighted index over [s, t]:
///   prod_{u=s}^{t-1} (1 + m(u)) - 1, and 0 when s == t.
inline double index_ra(const GroupHistory& h, Time s, Time t) {
    detail::require_window(h, s, t);
    double acc = 1.0;
    for (Time u = s; u < t; ++u) acc *= 1.0 + ra_period_mean(h, u);
    return acc - 1.0;
}

/// Mean of span returns weighted by the average of the start and end
/// asset shares:
///   sum_i 1/2 * r_i(s, t) * (A_i(s)/A(s) + A_i(t)/A(t)).
inline double index_rpl(const GroupHistory& h, Time s, Time t) {
    detail::require_window(h, s, t);
    if (s == t) return 0.0;
    const AssetSnapshot at_s = assets(h, s);
    const AssetSnapshot at_t = assets(h, t);
    double acc = 0.0;
    for (std::size_t i = 0; i < h.funds.size(); ++i)
        acc += 0.5 * span_return(h.funds[i], s, t) * (at_s.weights[i] + at_t.weights[i]);
    return acc;
}

/// Equal-weighted geometric mean of span growth factors:
///   (prod_i (1 + r_i(s, t)))^(1/n) - 1.
///
/// Refused when a recorded merger falls strictly inside the window,
/// because the fund count changes there and an equal per-fund weight
/// has no consistent meaning across the event.
inline double index_rv(const GroupHistory& h, Time s, Time t) {
    detail::require_window(h, s, t);
    for (Time tau : h.merger_times)
        if (s < tau && tau <= t)
            throw InvalidEventError("equal-weighted geometric index is undefined across the "
                                    "merger at time " +
                                    std::to_string(tau));
    if (s == t) return 0.0;
    double log_sum = 0.0;
    for (const auto& f : h.funds) log_sum += std::log(span_growth(f, s, t));
    return std::exp(log_sum / static_cast<double>(h.funds.size())) - 1.0;
}

inline double index_value(const GroupHistory& h, IndexKind kind, Time s, Time t) {
    switch (kind) {
        case IndexKind::RA: return index_ra(h, s, t);
        case IndexKind::RPL: return index_rpl(h, s, t);
        case IndexKind::RV: return index_rv(h, s, t);
    }
    throw OutOfRangeError("unknown index kind");
}

/// Chaining of consecutive returns: (1 + a)(1 + b) - 1.
inline double chain(double a, double b) { return (1.0 + a) * (1.0 + b) - 1.0; }

/// Index values anchored at s for every endpoint in [s, t].
struct IndexSeries {
    IndexKind kind = IndexKind::RA;
    Time start = 0;
    std::vector<double> values; // values[i] = index over [start, start + i]

    Time end() const { return start + static_cast<Time>(values.size()) - 1; }

    double at(Time t) const {
        if (t < start || t > end())
            throw OutOfRangeError("series has no value at time " + std::to_string(t));
        return values[static_cast<std::size_t>(t - start)];
    }
};

inline IndexSeries index_series(const GroupHistory& h, IndexKind kind, Time s, Time t) {
    detail::require_window(h, s, t);
    IndexSeries series;
    series.kind = kind;
    series.start = s;
    series.values.reserve(static_cast<std::size_t>(t - s) + 1);
    if (kind == IndexKind::RA) {
        double acc = 1.0;
        series.values.push_back(0.0);
        for (Time u = s; u < t; ++u) {
            acc *= 1.0 + ra_period_mean(h, u);
            series.values.push_back(acc - 1.0);
        }
    } else {
        for (Time u = s; u <= t; ++u) series.values.push_back(index_value(h, kind, s, u));
    }
    return series;
}

/// Per-period breakdown of the chain-linked index: each period's
/// weighted mean, each fund's contribution to it, and the running
/// chained value.
struct RaDecomposition {
    Time start = 0;
    std::vector<std::string> fund_ids;
    std::vector<double> period_means;                // one per period
    std::vector<std::vector<double>> contributions;  // [period][fund]
    std::vector<double> chained;                     // chained[i] = index over [start, start+i+1]
};

inline RaDecomposition decompose_ra(const GroupHistory& h, Time s, Time t) {
    detail::require_window(h, s, t);
    RaDecomposition d;
    d.start = s;
    for (const auto& f : h.funds) d.fund_ids.push_back(f.id);
    double acc = 1.0;
    for (Time u = s; u < t; ++u) {
        const AssetSnapshot snap = assets(h, u);
        std::vector<double> contrib(h.funds.size());
        double m = 0.0;
        for (std::size_t i = 0; i < h.funds.size(); ++i) {
            contrib[i] = snap.weights[i] * period_return(h.funds[i], u);
            m += contrib[i];
        }
        acc *= 1.0 + m;
        d.period_means.push_back(m);
        d.contributions.push_back(std::move(contrib));
        d.chained.push_back(acc - 1.0);
    }
    return d;
}

/// A partition of the group's fund ids into disjoint, exhaustive blocks.
struct GroupingPlan {
    std::vector<std::vector<std::string>> blocks;

    void validate_against(const GroupHistory& h) const {
        if (blocks.empty()) throw InvalidPartitionError("grouping plan has no blocks");
        std::set<std::string> seen;
        std::size_t covered = 0;
        for (const auto& block : blocks) {
            if (block.empty()) throw InvalidPartitionError("grouping plan has an empty block");
            for (const auto& id : block) {
                h.fund_index(id); // throws UnknownFundError
                if (!seen.insert(id).second)
                    throw InvalidPartitionError("fund '" + id + "' appears in two blocks");
                ++covered;
            }
        }
        if (covered != h.funds.size())
            throw InvalidPartitionError("grouping plan does not cover every fund");
    }
};

/// Result of computing an index recursively: first within each block,
/// then across blocks with each block treated as a single fund.
struct GroupedComparison {
    IndexKind kind = IndexKind::RA;
    Time from = 0;
    Time to = 0;
    std::vector<std::string> block_ids;
    std::vector<double> block_returns; // span return of each block over [from, to]
    GroupHistory block_history;        // synthetic one-fund-per-block history
    double grouped = 0.0;              // index of the block history
    double ungrouped = 0.0;            // index of the original funds
    double gap = 0.0;                  // grouped - ungrouped
};

namespace detail {

inline std::string block_id(const std::vector<std::string>& members) {
    std::string id;
    for (const auto& m : members) {
        if (!id.empty()) id += '+';
        id += m;
    }
    return id;
}

/// Synthetic ledger for one block under the chain-linked index: unit
/// value compounds the block's asset-weighted one-period factors and
/// the unit count reproduces the block's combined assets, matching the
/// combined-fund construction used for mergers.
inline FundLedger ra_block_fund(const GroupHistory& h, const std::vector<std::string>& members,
                                Time s, Time t) {
    FundLedger out;
    out.id = block_id(members);
    double w = 1.0;
    for (Time u = s; u <= t; ++u) {
        double combined = 0.0;
        for (const auto& id : members) combined += h.fund(id).assets_at(u);
        out.values.push_back(w);
        out.units.push_back(combined / w);
        if (u < t) {
            double grown = 0.0;
            for (const auto& id : members)
                grown += h.fund(id).assets_at(u) * unit_value_factor(h.fund(id), u);
            w *= grown / combined;
        }
    }
    return out;
}

/// Synthetic two-observation ledger carrying a given span return and
/// the block's combined assets at the window endpoints.
inline FundLedger span_block_fund(const GroupHistory& h, const std::vector<std::string>& members,
                                  Time s, Time t, double block_return) {
    FundLedger out;
    out.id = block_id(members);
    double assets_s = 0.0, assets_t = 0.0;
    for (const auto& id : members) {
        assets_s += h.fund(id).assets_at(s);
        assets_t += h.fund(id).assets_at(t);
    }
    out.values = {1.0, 1.0 + block_return};
    out.units = {assets_s, assets_t / (1.0 + block_return)};
    return out;
}

} // namespace detail

/// Computes the index over [s, t] twice: directly on the funds, and
/// recursively with each block of the plan collapsed into one synthetic
/// fund. For the chain-linked index the two agree by construction of
/// the weighted mean; for the other kinds the gap is generally nonzero.
inline GroupedComparison group(const GroupHistory& h, const GroupingPlan& plan, IndexKind kind,
                               Time s, Time t) {
    detail::require_window(h, s, t);
    plan.validate_against(h);
    if (s == t) throw OutOfRangeError("grouping needs a window of at least one period");

    GroupedComparison cmp;
    cmp.kind = kind;
    cmp.from = s;
    cmp.to = t;
    cmp.ungrouped = index_value(h, kind, s, t);

    for (const auto& members : plan.blocks) {
        FundLedger block;
        switch (kind) {
            case IndexKind::RA:
                block = detail::ra_block_fund(h, members, s, t);
                break;
            case IndexKind::RPL: {
                // Endpoint-averaged weights within the block.
                double assets_s = 0.0, assets_t = 0.0;
                for (const auto& id : members) {
                    assets_s += h.fund(id).assets_at(s);
                    assets_t += h.fund(id).assets_at(t);
                }
                double r = 0.0;
                for (const auto& id : members) {
                    const FundLedger& f = h.fund(id);
                    r += 0.5 * span_return(f, s, t) *
                         (f.assets_at(s) / assets_s + f.assets_at(t) / assets_t);
                }
                block = detail::span_block_fund(h, members, s, t, r);
                break;
            }
            case IndexKind::RV: {
                double log_sum = 0.0;
                for (const auto& id : members) log_sum += std::log(span_growth(h.fund(id), s, t));
                const double r = std::exp(log_sum / static_cast<double>(members.size())) - 1.0;
                block = detail::span_block_fund(h, members, s, t, r);
                break;
            }
        }
        cmp.block_ids.push_back(block.id);
        cmp.block_returns.push_back(block.values.back() / block.values.front() - 1.0);
        cmp.block_history.funds.push_back(std::move(block));
    }

    cmp.block_history.validate_rectangular();
    cmp.grouped = index_value(cmp.block_history, kind, 0, cmp.block_history.horizon());
    cmp.gap = cmp.grouped - cmp.ungrouped;
    return cmp;
}

/// Return of the combined two-fund entity over [s, tau]: the product of
/// asset-weighted averages of the pair's one-period value factors.
inline double merged_fund_return(const GroupHistory& h, const std::string& fund_a,
                                 const std::string& fund_b, Time s, Time tau) {
    if (fund_a == fund_b) throw InvalidEventError("combined return needs two distinct funds");
    const FundLedger& a = h.funds[h.fund_index(fund_a)];
    const FundLedger& b = h.funds[h.fund_index(fund_b)];
    if (s < 0 || s > tau) throw OutOfRangeError("invalid combination window");
    a.require_covers(tau);
    b.require_covers(tau);
    double acc = 1.0;
    for (Time u = s; u < tau; ++u) {
        const double assets_a = a.assets_at(u);
        const double assets_b = b.assets_at(u);
        acc *= (assets_a * detail::unit_value_factor(a, u) +
                assets_b * detail::unit_value_factor(b, u)) /
               (assets_a + assets_b);
    }
    return acc - 1.0;
}

/// Applies the events in order, then checks the result covers a single
/// rectangular grid.
inline GroupHistory apply_mergers(GroupHistory h, const std::vector<MergerEvent>& events) {
    for (const auto& ev : events) h = apply_merger(std::move(h), ev);
    h.validate_rectangular();
    return h;
}

/// Chain-linked asset-weighted index of the history with all mergers
/// folded in, so the index is continuous across the events.
inline double index_ra_with_mergers(const GroupHistory& h, const std::vector<MergerEvent>& events,
                                    Time s, Time t) {
    return index_ra(apply_mergers(h, events), s, t);
}

} // namespace fairindex
