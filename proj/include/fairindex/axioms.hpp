#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairindex/generators.hpp"
#include "fairindex/indices.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/rng.hpp"

namespace fairindex {

/// Knobs of the randomized property suite. Every instance is derived
/// from (seed, stream), so a reported stream replays the instance.
struct AxiomConfig {
    std::uint64_t seed = 20260814;
    int instances = 1000;
    double rel_tol = 1e-12;       // residual bound for properties expected to hold
    double ladder_final_tol = 1e-4; // small-fund residual bound at the last rung
    int max_funds = 5;
    Time max_horizon = 6;
};

/// A replayable instance on which a property failed (or, for properties
/// expected to fail, the strongest violation found).
struct Counterexample {
    std::uint64_t stream = 0;  // Rng(config.seed, stream) rebuilds the instance
    std::string description;
    double magnitude = 0.0;
};

struct PropertyResult {
    std::string property;  // "P1".."P8"
    IndexKind kind = IndexKind::RA;
    bool expected_to_hold = true;
    bool held = false;
    int instances = 0;
    double worst_residual = 0.0;
    std::uint64_t worst_stream = 0;
    std::optional<Counterexample> counterexample;

    bool as_expected() const { return held == expected_to_hold; }
};

struct AxiomReport {
    AxiomConfig config;
    std::vector<PropertyResult> results;

    bool all_as_expected() const {
        for (const auto& r : results)
            if (!r.as_expected()) return false;
        return true;
    }

    const PropertyResult& result(const std::string& property, IndexKind kind) const {
        for (const auto& r : results)
            if (r.property == property && r.kind == kind) return r;
        throw OutOfRangeError("no suite row for " + property + "/" + to_string(kind));
    }
};

namespace detail {

/// |a - b| against max(1, |a|, |b|): relative for large values, absolute
/// near zero, which suits returns of order one.
inline double rel_gap(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::uint64_t axiom_stream(std::size_t row, int instance) {
    return (static_cast<std::uint64_t>(row) << 32) + static_cast<std::uint64_t>(instance);
}

struct WorstTracker {
    double residual = 0.0;
    std::uint64_t stream = 0;
    std::string description;

    void offer(double r, std::uint64_t s, const std::string& desc) {
        if (r > residual) {
            residual = r;
            stream = s;
            description = desc;
        }
    }
};

inline PropertyResult finish_row(const std::string& property, IndexKind kind,
                                 bool expected_to_hold, int instances, double rel_tol,
                                 const WorstTracker& worst) {
    PropertyResult row;
    row.property = property;
    row.kind = kind;
    row.expected_to_hold = expected_to_hold;
    row.instances = instances;
    row.worst_residual = worst.residual;
    row.worst_stream = worst.stream;
    row.held = worst.residual <= rel_tol;
    if (!row.held)
        row.counterexample = Counterexample{worst.stream, worst.description, worst.residual};
    return row;
}

/// Truncates one fund of a rectangular history at tau and returns the
/// matching absorption event, giving a well-formed merger instance.
inline std::pair<GroupHistory, MergerEvent> make_merger_instance(Rng& rng, GroupHistory h) {
    const Time T = h.horizon();
    const Time tau = static_cast<Time>(rng.uniform_int(1, T - 1));
    const int a = rng.uniform_int(0, h.n_funds() - 1);
    int s = rng.uniform_int(0, h.n_funds() - 2);
    if (s >= a) ++s;
    FundLedger& fa = h.funds[static_cast<std::size_t>(a)];
    FundLedger& fs = h.funds[static_cast<std::size_t>(s)];
    fa.units.resize(static_cast<std::size_t>(tau) + 1);
    fa.values.resize(static_cast<std::size_t>(tau) + 1);
    for (auto it = fa.post.begin(); it != fa.post.end();)
        it = it->first >= tau ? fa.post.erase(it) : std::next(it);
    fs.post.erase(tau);
    if (!fa.net_flows.empty()) fa.net_flows.resize(static_cast<std::size_t>(tau) + 1);
    MergerEvent ev;
    ev.absorbed = fa.id;
    ev.survivor = fs.id;
    ev.time = tau;
    ev.post_units = (fa.units_at(tau) + fs.units_at(tau)) * rng.uniform(0.5, 2.0);
    return {std::move(h), ev};
}

/// Fund paths where co-fund assets are theta times the dominant fund's,
/// used to probe how fast small funds stop mattering.
inline GroupHistory dominance_instance(Rng& rng, double theta, int n_co, Time T,
                                       const std::vector<double>& co_scale) {
    GroupHistory h;
    FundLedger dom;
    dom.id = "F1";
    const double k_dom = rng.uniform(1e3, 1e5);
    double w = rng.uniform(1.0, 20.0);
    for (Time t = 0; t <= T; ++t) {
        dom.units.push_back(k_dom);
        dom.values.push_back(w);
        w *= rng.uniform(0.8, 1.3);
    }
    h.funds.push_back(dom);
    for (int i = 0; i < n_co; ++i) {
        FundLedger f;
        f.id = "F" + std::to_string(i + 2);
        double wi = rng.uniform(1.0, 20.0);
        for (Time t = 0; t <= T; ++t) {
            const double target_assets =
                theta * co_scale[static_cast<std::size_t>(i)] * dom.assets_at(t);
            f.values.push_back(wi);
            f.units.push_back(target_assets / wi);
            wi *= rng.uniform(0.8, 1.3);
        }
        h.funds.push_back(std::move(f));
    }
    h.validate_rectangular();
    return h;
}

/// Two histories differing only in a unit transfer between funds 1 and
/// 2 at time u: base holds unit counts constant, variant moves client
/// units worth `fraction` of fund 1's assets into fund 2, recorded
/// through the unit withdrawal and investment columns.
struct TransferInstance {
    GroupHistory base;
    GroupHistory variant;
    Time u = 0;
    double r1_after = 0.0;  // fund 1 span return over [u, T]
    double r2_after = 0.0;
};

inline TransferInstance transfer_instance(Rng& rng, const AxiomConfig& cfg) {
    const int n = rng.uniform_int(3, cfg.max_funds);
    const Time T = static_cast<Time>(rng.uniform_int(2, 5));
    const Time u = static_cast<Time>(rng.uniform_int(1, T - 1));

    TransferInstance inst;
    inst.u = u;
    GroupHistory& h = inst.base;
    for (int i = 0; i < n; ++i) {
        FundLedger f;
        f.id = "F" + std::to_string(i + 1);
        const double k = rng.uniform(1e3, 1e6);
        if (i < 2) {
            double w = rng.uniform(1.0, 20.0);
            for (Time t = 0; t <= T; ++t) {
                f.units.push_back(k);
                f.values.push_back(w);
                w *= rng.uniform(0.8, 1.3);
            }
        } else {
            const double w = rng.uniform(0.5, 50.0);
            f.units.assign(static_cast<std::size_t>(T) + 1, k);
            f.values.assign(static_cast<std::size_t>(T) + 1, w);
        }
        h.funds.push_back(std::move(f));
    }

    // The hypothesis: clients move from the worse early performer
    // (fund 1) to the better one, and the pair performs differently
    // afterwards by a clear margin.
    if (span_return(h.funds[0], 0, u) >= span_return(h.funds[1], 0, u))
        std::swap(h.funds[0].values, h.funds[1].values);
    inst.r1_after = span_return(h.funds[0], u, T);
    inst.r2_after = span_return(h.funds[1], u, T);
    if (std::abs(inst.r1_after - inst.r2_after) < 1e-3) {
        const double bump = rng.coin(0.5) ? 1.1 : 0.9;
        for (Time t = u + 1; t <= T; ++t)
            h.funds[1].values[static_cast<std::size_t>(t)] *= bump;
        inst.r2_after = span_return(h.funds[1], u, T);
    }

    inst.variant = inst.base;
    const double fraction = rng.uniform(0.1, 0.5);
    FundLedger& f1 = inst.variant.funds[0];
    FundLedger& f2 = inst.variant.funds[1];
    const double moved = fraction * f1.assets_at(u);
    const double dk1 = moved / f1.value_at(u);
    const double dk2 = moved / f2.value_at(u);
    for (Time t = u; t <= T; ++t) {
        f1.units[static_cast<std::size_t>(t)] -= dk1;
        f2.units[static_cast<std::size_t>(t)] += dk2;
    }
    for (auto& f : inst.variant.funds) {
        const auto len = static_cast<std::size_t>(T) + 1;
        f.net_flows.assign(len, 0.0);
        f.unit_withdrawals.assign(len, 0.0);
        f.unit_investments.assign(len, 0.0);
    }
    f1.unit_withdrawals[static_cast<std::size_t>(u)] = dk1;
    f2.unit_investments[static_cast<std::size_t>(u)] = dk2;
    inst.base.validate_rectangular();
    inst.variant.validate_rectangular();
    return inst;
}

} // namespace detail

/// Runs the randomized property suite and reports, per property and
/// index kind, whether the property held on every generated instance.
/// Rows expected to fail carry their strongest recorded counterexample.
inline AxiomReport axiom_suite(const AxiomConfig& config = {}) {
    AxiomReport report;
    report.config = config;
    std::size_t row_idx = 0;

    HistoryOptions base_opt;
    base_opt.max_funds = config.max_funds;
    base_opt.max_horizon = config.max_horizon;

    // P1: on a single fund the index reduces to the fund's own span return.
    {
        detail::WorstTracker worst;
        HistoryOptions opt = base_opt;
        opt.min_funds = opt.max_funds = 1;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const GroupHistory h = random_history(rng, opt);
            const Time T = h.horizon();
            const Time s = static_cast<Time>(rng.uniform_int(0, T - 1));
            const Time t = static_cast<Time>(rng.uniform_int(s + 1, T));
            const double gap =
                detail::rel_gap(index_ra(h, s, t), span_return(h.funds[0], s, t));
            worst.offer(gap, stream,
                        "single fund, window [" + std::to_string(s) + "," + std::to_string(t) + "]");
        }
        report.results.push_back(detail::finish_row("P1", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P2: chaining over every split point, on plain histories and on
    // histories with a merger folded in.
    {
        detail::WorstTracker worst;
        HistoryOptions opt = base_opt;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            GroupHistory h;
            bool with_merger = false;
            if (i % 3 == 0) {
                HistoryOptions merger_opt = opt;
                merger_opt.min_funds = 2;
                merger_opt.min_horizon = 3;
                auto [raw, ev] = detail::make_merger_instance(rng, random_history(rng, merger_opt));
                h = apply_mergers(std::move(raw), {ev});
                with_merger = true;
            } else {
                h = random_history(rng, opt);
            }
            const Time T = h.horizon();
            for (Time s = 0; s < T; ++s)
                for (Time u = s + 1; u < T; ++u)
                    for (Time t = u + 1; t <= T; ++t) {
                        const double gap = detail::rel_gap(
                            chain(index_ra(h, s, u), index_ra(h, u, t)), index_ra(h, s, t));
                        worst.offer(gap, stream,
                                    std::string(with_merger ? "merged history" : "history") +
                                        ", split points " + std::to_string(s) + "/" +
                                        std::to_string(u) + "/" + std::to_string(t));
                    }
        }
        report.results.push_back(detail::finish_row("P2", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P2 for the span-weighted mean: chaining generally fails.
    {
        detail::WorstTracker worst;
        HistoryOptions opt = base_opt;
        opt.min_funds = 2;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const GroupHistory h = random_history(rng, opt);
            const Time T = h.horizon();
            const Time s = static_cast<Time>(rng.uniform_int(0, T - 2));
            const Time u = static_cast<Time>(rng.uniform_int(s + 1, T - 1));
            const Time t = static_cast<Time>(rng.uniform_int(u + 1, T));
            const double gap = detail::rel_gap(
                chain(index_rpl(h, s, u), index_rpl(h, u, t)), index_rpl(h, s, t));
            worst.offer(gap, stream,
                        "split points " + std::to_string(s) + "/" + std::to_string(u) + "/" +
                            std::to_string(t));
        }
        report.results.push_back(detail::finish_row("P2", IndexKind::RPL, false, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P3: collapsing any partition into block funds leaves the
    // one-period index unchanged.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const GroupHistory h = random_history(rng, base_opt);
            const GroupingPlan plan = random_partition(rng, h);
            const Time s = static_cast<Time>(rng.uniform_int(0, h.horizon() - 1));
            const GroupedComparison cmp = group(h, plan, IndexKind::RA, s, s + 1);
            worst.offer(detail::rel_gap(cmp.grouped, cmp.ungrouped), stream,
                        std::to_string(plan.blocks.size()) + " blocks over [" + std::to_string(s) +
                            "," + std::to_string(s + 1) + "]");
        }
        report.results.push_back(detail::finish_row("P3", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P3 for the span-weighted mean: grouping changes the value even
    // with constant unit counts.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const int n = rng.uniform_int(2, config.max_funds);
            GroupHistory h;
            for (int f = 0; f < n; ++f) {
                FundLedger fund;
                fund.id = "F" + std::to_string(f + 1);
                const double k = rng.uniform(1e3, 1e6);
                const double w0 = rng.uniform(0.5, 100.0);
                fund.units = {k, k};
                fund.values = {w0, w0 * rng.uniform(0.8, 1.3)};
                h.funds.push_back(std::move(fund));
            }
            h.validate_rectangular();
            GroupingPlan plan;
            // At most n-1 blocks, so some block holds two or more funds.
            const int n_blocks = rng.uniform_int(1, n - 1);
            plan.blocks.assign(static_cast<std::size_t>(n_blocks), {});
            for (int f = 0; f < n; ++f) {
                const int b = f < n_blocks ? f : rng.uniform_int(0, n_blocks - 1);
                plan.blocks[static_cast<std::size_t>(b)].push_back(h.funds[static_cast<std::size_t>(f)].id);
            }
            const GroupedComparison cmp = group(h, plan, IndexKind::RPL, 0, 1);
            worst.offer(std::abs(cmp.gap), stream,
                        std::to_string(n) + " constant-unit funds in " + std::to_string(n_blocks) +
                            " blocks");
        }
        report.results.push_back(detail::finish_row("P3", IndexKind::RPL, false, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P4: with one shared unit-value path the index equals that path's
    // span return whatever the unit counts do.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const int n = rng.uniform_int(2, config.max_funds);
            const Time T = static_cast<Time>(rng.uniform_int(2, config.max_horizon));
            std::vector<double> w = {rng.uniform(1.0, 20.0)};
            for (Time t = 1; t <= T; ++t) w.push_back(w.back() * rng.uniform(0.7, 1.4));
            GroupHistory h;
            for (int f = 0; f < n; ++f) {
                FundLedger fund;
                fund.id = "F" + std::to_string(f + 1);
                fund.values = w;
                fund.units.push_back(rng.uniform(1e2, 1e6));
                for (Time t = 1; t <= T; ++t) {
                    double k = fund.units.back();
                    if (rng.coin(0.5)) k *= rng.uniform(0.75, 1.3);
                    fund.units.push_back(k);
                }
                h.funds.push_back(std::move(fund));
            }
            h.validate_rectangular();
            const Time s = static_cast<Time>(rng.uniform_int(0, T - 1));
            const Time t = static_cast<Time>(rng.uniform_int(s + 1, T));
            const double shared =
                (w[static_cast<std::size_t>(t)] - w[static_cast<std::size_t>(s)]) /
                w[static_cast<std::size_t>(s)];
            worst.offer(detail::rel_gap(index_ra(h, s, t), shared), stream,
                        "shared value path, window [" + std::to_string(s) + "," +
                            std::to_string(t) + "]");
        }
        report.results.push_back(detail::finish_row("P4", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P5: proportional unit counts k_i(u) = alpha_i phi(u) reduce the
    // index to the start-weighted mean of span returns.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const int n = rng.uniform_int(2, config.max_funds);
            const Time T = static_cast<Time>(rng.uniform_int(2, config.max_horizon));
            std::vector<double> alpha(static_cast<std::size_t>(n));
            double alpha_total = 0.0;
            for (auto& a : alpha) {
                a = rng.uniform(0.1, 10.0);
                alpha_total += a;
            }
            for (auto& a : alpha) a /= alpha_total;
            std::vector<double> phi;
            for (Time t = 0; t <= T; ++t) phi.push_back(rng.uniform(0.5, 2.0) * 1e4);
            GroupHistory h;
            for (int f = 0; f < n; ++f) {
                FundLedger fund;
                fund.id = "F" + std::to_string(f + 1);
                double w = rng.uniform(1.0, 20.0);
                for (Time t = 0; t <= T; ++t) {
                    fund.units.push_back(alpha[static_cast<std::size_t>(f)] *
                                         phi[static_cast<std::size_t>(t)]);
                    fund.values.push_back(w);
                    w *= rng.uniform(0.7, 1.4);
                }
                h.funds.push_back(std::move(fund));
            }
            h.validate_rectangular();
            const Time s = static_cast<Time>(rng.uniform_int(0, T - 1));
            const Time t = static_cast<Time>(rng.uniform_int(s + 1, T));
            const AssetSnapshot at_s = assets(h, s);
            double rhs = 0.0;
            for (int f = 0; f < n; ++f)
                rhs += at_s.weights[static_cast<std::size_t>(f)] *
                       span_return(h.funds[static_cast<std::size_t>(f)], s, t);
            worst.offer(detail::rel_gap(index_ra(h, s, t), rhs), stream,
                        "proportional units, window [" + std::to_string(s) + "," +
                            std::to_string(t) + "]");
        }
        report.results.push_back(detail::finish_row("P5", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P6: the per-period equivalent rate stays between the smallest and
    // largest one-period fund return in the window.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const GroupHistory h = random_history(rng, base_opt);
            const Time T = h.horizon();
            const Time s = static_cast<Time>(rng.uniform_int(0, T - 1));
            const Time t = static_cast<Time>(rng.uniform_int(s + 1, T));
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto& f : h.funds)
                for (Time u = s; u < t; ++u) {
                    const double r = period_return(f, u);
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                }
            const double q =
                std::pow(1.0 + index_ra(h, s, t), 1.0 / static_cast<double>(t - s)) - 1.0;
            const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
            const double breach = std::max({0.0, lo - q, q - hi}) / scale;
            worst.offer(breach, stream,
                        "window [" + std::to_string(s) + "," + std::to_string(t) + "]");
        }
        report.results.push_back(detail::finish_row("P6", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    // P7: as co-fund assets shrink relative to a dominant fund, the
    // index converges to the dominant fund's span return. The suite's
    // residual per rung is the worst case over all instances; that
    // ladder must fall monotonically and end below the final bound.
    // (A single instance's ladder may bump once where its first- and
    // second-order error terms cancel, so per-instance strictness is
    // not required; per-instance finals still meet the bound.)
    static constexpr double theta_ladder[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    static constexpr std::size_t n_rungs = sizeof(theta_ladder) / sizeof(theta_ladder[0]);
    {
        detail::WorstTracker worst;
        const int ladder_instances = std::max(1, config.instances / 5);
        double rung_max[n_rungs] = {};
        for (int i = 0; i < ladder_instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng base(config.seed, stream);
            const int n_co = base.uniform_int(1, 3);
            const Time T = static_cast<Time>(base.uniform_int(2, 4));
            std::vector<double> co_scale;
            for (int c = 0; c < n_co; ++c) co_scale.push_back(base.uniform(0.2, 1.0));
            const std::uint64_t path_seed = base.bits();
            double final_residual = 0.0;
            for (std::size_t r = 0; r < n_rungs; ++r) {
                // Identical draws at every rung, so only theta varies.
                Rng rung(path_seed, 0);
                const GroupHistory h =
                    detail::dominance_instance(rung, theta_ladder[r], n_co, T, co_scale);
                const double residual =
                    std::abs(index_ra(h, 0, T) - span_return(h.funds[0], 0, T));
                rung_max[r] = std::max(rung_max[r], residual);
                final_residual = residual;
            }
            worst.offer(final_residual, stream,
                        "final residual " + std::to_string(final_residual));
        }
        for (std::size_t r = 1; r < n_rungs; ++r)
            if (rung_max[r] > rung_max[r - 1] + 1e-15)
                worst.offer(1e9, detail::axiom_stream(row_idx, 0),
                            "worst-case residual not monotone along the ladder");
        report.results.push_back(detail::finish_row("P7", IndexKind::RA, true, ladder_instances,
                                                    config.ladder_final_tol, worst));
        ++row_idx;
    }

    // P7 for the equal-weighted geometric mean: a vanishing fund keeps
    // full weight, so the residual never decays.
    {
        detail::WorstTracker worst;
        double weakest = std::numeric_limits<double>::infinity();
        std::uint64_t weakest_stream = 0;
        const int ladder_instances = std::max(1, config.instances / 5);
        for (int i = 0; i < ladder_instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const Time T = 2;
            GroupHistory h;
            FundLedger dom;
            dom.id = "F1";
            const double r_dom = (rng.coin(0.5) ? 1.0 : -1.0) * rng.uniform(0.05, 0.3);
            dom.units = {1e4, 1e4, 1e4};
            dom.values = {10.0, 10.0 * rng.uniform(0.9, 1.1), 10.0 * (1.0 + r_dom)};
            h.funds.push_back(dom);
            FundLedger flat;
            flat.id = "F2";
            flat.values = {1.0, 1.0, 1.0};
            flat.units = {0.0, 0.0, 0.0};
            const double theta = 1e-6;
            for (Time t = 0; t <= T; ++t)
                flat.units[static_cast<std::size_t>(t)] =
                    theta * h.funds[0].assets_at(t);
            h.funds.push_back(std::move(flat));
            h.validate_rectangular();
            const double residual = std::abs(index_rv(h, 0, T) - r_dom);
            worst.offer(residual, stream,
                        "dominant span " + std::to_string(r_dom) + ", residual " +
                            std::to_string(residual) + " at theta 1e-6");
            if (residual < weakest) {
                weakest = residual;
                weakest_stream = stream;
            }
        }
        PropertyResult row = detail::finish_row("P7", IndexKind::RV, false, ladder_instances,
                                                config.ladder_final_tol, worst);
        // The violation must be bounded away from zero on every instance,
        // not just on the worst one.
        if (weakest <= config.ladder_final_tol) {
            row.held = true;  // decay observed; the expected failure did not materialize
            row.worst_stream = weakest_stream;
            row.counterexample.reset();
        }
        report.results.push_back(std::move(row));
        ++row_idx;
    }

    // P8: moving client units from fund 1 to fund 2 at time u raises the
    // window's index exactly when fund 2 outperforms fund 1 afterwards.
    {
        detail::WorstTracker worst;
        for (int i = 0; i < config.instances; ++i) {
            const std::uint64_t stream = detail::axiom_stream(row_idx, i);
            Rng rng(config.seed, stream);
            const detail::TransferInstance inst = detail::transfer_instance(rng, config);
            const Time T = inst.base.horizon();
            const double base_value = index_ra(inst.base, 0, T);
            const double variant_value = index_ra(inst.variant, 0, T);
            const double diff = variant_value - base_value;
            const double expected_sign = inst.r2_after - inst.r1_after;
            const bool matched = (diff > 0.0) == (expected_sign > 0.0) && diff != 0.0;
            worst.offer(matched ? 0.0 : std::max(std::abs(diff), config.rel_tol * 2.0), stream,
                        "transfer at " + std::to_string(inst.u) + ", index moved " +
                            std::to_string(diff) + " against sign of " +
                            std::to_string(expected_sign));
        }
        report.results.push_back(detail::finish_row("P8", IndexKind::RA, true, config.instances,
                                                    config.rel_tol, worst));
        ++row_idx;
    }

    return report;
}

} // namespace fairindex
