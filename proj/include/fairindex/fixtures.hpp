#pragma once

#include <vector>

#include "fairindex/indices.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/scenario.hpp"

// Small reference datasets used by the demo subcommand and the
// acceptance checks. Values are embedded so no input files are needed.

namespace fairindex {
namespace fixtures {

/// Five funds over three observation times; the fifth fund's series
/// ends at time 1, where the fourth fund absorbs it.
inline GroupHistory merger_example_history() {
    GroupHistory h;
    auto add = [&h](const char* id, std::vector<double> units, std::vector<double> values) {
        FundLedger f;
        f.id = id;
        f.units = std::move(units);
        f.values = std::move(values);
        h.funds.push_back(std::move(f));
    };
    add("F1", {1e6, 1e6, 1.2e6}, {10.5, 10.8, 10.9});
    add("F2", {9e5, 9.2e5, 9.4e5}, {9.4, 9.7, 9.6});
    add("F3", {4e5, 4.3e5, 4.3e5}, {4.3, 4.4, 4.4});
    add("F4", {3e5, 3e5, 6.1e5}, {5.0, 5.5, 6.2});
    add("F5", {2e5, 2.2e5}, {8.5, 8.6});
    h.validate();
    return h;
}

inline MergerEvent merger_example_event() {
    MergerEvent ev;
    ev.absorbed = "F5";
    ev.survivor = "F4";
    ev.time = 1;
    ev.post_units = 6e5;
    return ev;
}

/// Three constant-unit funds over one period. The third fund's end
/// value is a parameter: the reference computation uses 4.19 and a
/// variant with 4.39 (unit values scaled so fund assets are the values
/// times 1e6).
inline GroupHistory grouping_example_history(double third_fund_end = 4.19) {
    GroupHistory h;
    auto add = [&h](const char* id, double w0, double w1) {
        FundLedger f;
        f.id = id;
        f.units = {1e6, 1e6};
        f.values = {w0, w1};
        h.funds.push_back(std::move(f));
    };
    add("F1", 1.0, 1.1);
    add("F2", 3.0, 3.21);
    add("F3", 4.0, third_fund_end);
    h.validate_rectangular();
    return h;
}

/// The reference grouping: funds 1 and 2 in one block, fund 3 alone.
inline GroupingPlan grouping_example_plan() {
    GroupingPlan plan;
    plan.blocks = {{"F1", "F2"}, {"F3"}};
    return plan;
}

/// One risky asset moving to 1.2 or 0.8 with equal probability and one
/// constant asset, over a single period.
inline PathModel two_scenario_model() {
    PathModel model;
    model.asset_ids = {"A", "B"};
    model.initial_prices = {1.0, 1.0};
    model.horizon = 1;
    model.outcomes = {{{1.2, 1.0}, 0.5}, {{0.8, 1.0}, 0.5}};
    model.validate();
    return model;
}

/// Two funds, each one unit worth 1 at time 0.
inline GroupHistory two_scenario_initial() {
    GroupHistory h;
    for (const char* id : {"F1", "F2"}) {
        FundLedger f;
        f.id = id;
        f.units = {1.0};
        f.values = {1.0};
        h.funds.push_back(std::move(f));
    }
    h.validate_rectangular();
    return h;
}

/// Fund 1 fully in the risky asset, fund 2 fully in the constant one.
inline std::vector<std::vector<double>> two_scenario_weights() {
    return {{1.0, 0.0}, {0.0, 1.0}};
}

/// The same setting as independent per-fund unit-value laws at time 1.
inline std::vector<FactorLaw> two_scenario_fund_laws() {
    FactorLaw risky;
    risky.factors = {1.2, 0.8};
    risky.probabilities = {0.5, 0.5};
    FactorLaw flat;
    flat.factors = {1.0};
    flat.probabilities = {1.0};
    return {risky, flat};
}

} // namespace fixtures
} // namespace fairindex
