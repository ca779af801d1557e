#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "fairindex/axioms.hpp"
#include "fairindex/balance.hpp"
#include "fairindex/fairness.hpp"
#include "fairindex/indices.hpp"
#include "fairindex/scenario.hpp"

// JSON views of the library's result types. Every top-level document a
// caller emits should carry {"schema": 1}; the builders here return
// fragments the caller puts under its own keys.

namespace fairindex {

inline constexpr int report_schema_version = 1;

/// Rounded percent with two decimals, e.g. 0.040298 -> "4.03%".
inline std::string percent_string(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f%%", x * 100.0);
    return std::string(buf);
}

/// A return both as the raw real and as rounded percent text.
inline nlohmann::json percent_json(double x) {
    return {{"value", x}, {"percent", percent_string(x)}};
}

inline nlohmann::json report_json(const BalanceViolation& v) {
    return {{"check", to_string(v.check)},
            {"fund", v.fund},
            {"time", v.time},
            {"residual", v.residual}};
}

inline nlohmann::json report_json(const ValidationReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (BalanceCheck c : r.checks_run) checks.push_back(to_string(c));
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : r.violations) violations.push_back(report_json(v));
    nlohmann::json j{{"passed", r.passed()},
                     {"tol", r.tol},
                     {"checks_run", std::move(checks)},
                     {"comparisons", r.comparisons},
                     {"max_residual", r.max_residual},
                     {"violations", std::move(violations)}};
    if (r.comparisons > 0) j["worst"] = report_json(r.worst);
    if (!r.inferred_flows.empty()) j["inferred_flows"] = r.inferred_flows;
    return j;
}

inline nlohmann::json report_json(const IndexSeries& s) {
    nlohmann::json values = nlohmann::json::array();
    for (std::size_t i = 0; i < s.values.size(); ++i)
        values.push_back({{"time", s.start + static_cast<Time>(i)},
                          {"index", percent_json(s.values[i])}});
    return {{"kind", to_string(s.kind)}, {"from", s.start}, {"to", s.end()},
            {"series", std::move(values)}};
}

inline nlohmann::json report_json(const RaDecomposition& d) {
    nlohmann::json periods = nlohmann::json::array();
    for (std::size_t p = 0; p < d.period_means.size(); ++p) {
        nlohmann::json funds = nlohmann::json::array();
        for (std::size_t i = 0; i < d.fund_ids.size(); ++i)
            funds.push_back({{"fund", d.fund_ids[i]}, {"contribution", d.contributions[p][i]}});
        periods.push_back({{"period_start", d.start + static_cast<Time>(p)},
                           {"weighted_mean", percent_json(d.period_means[p])},
                           {"chained", percent_json(d.chained[p])},
                           {"contributions", std::move(funds)}});
    }
    return {{"from", d.start}, {"periods", std::move(periods)}};
}

inline nlohmann::json report_json(const GroupedComparison& c) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t b = 0; b < c.block_ids.size(); ++b)
        blocks.push_back({{"members", c.block_ids[b]},
                          {"span_return", percent_json(c.block_returns[b])}});
    return {{"kind", to_string(c.kind)},
            {"from", c.from},
            {"to", c.to},
            {"blocks", std::move(blocks)},
            {"grouped", percent_json(c.grouped)},
            {"ungrouped", percent_json(c.ungrouped)},
            {"gap", c.gap}};
}

inline nlohmann::json report_json(const ProcessClassification& c) {
    return {{"class", to_string(c.process_class)},
            {"max_abs_drift", c.max_abs_drift},
            {"max_positive_drift", c.max_positive_drift},
            {"min_negative_drift", c.min_negative_drift},
            {"witness_node", c.witness},
            {"witness_drift", c.witness_drift}};
}

inline nlohmann::json report_json(const FairnessVerdict& v) {
    return {{"kind", to_string(v.kind)},
            {"verdict", to_string(v.classification())},
            {"max_violation", v.max_violation()},
            {"drift", report_json(v.drift)},
            {"nodes", v.n_nodes},
            {"horizon", v.horizon},
            {"tol", v.tol}};
}

inline nlohmann::json report_json(const UnitRatioReport& r) {
    nlohmann::json per_fund = nlohmann::json::array();
    for (std::size_t i = 0; i < r.fund_ids.size(); ++i)
        per_fund.push_back({{"fund", r.fund_ids[i]}, {"max_residual", r.per_fund_max[i]}});
    return {{"max_residual", r.max_residual},
            {"witness_node", r.witness_node},
            {"witness_fund", r.witness_fund},
            {"per_fund", std::move(per_fund)}};
}

inline nlohmann::json report_json(const McFairnessReport& r) {
    return {{"kind", to_string(r.kind)},
            {"n_paths", r.n_paths},
            {"seed", r.seed},
            {"mean_increment", r.mean_increment},
            {"std_error", r.std_error},
            {"z", r.z},
            {"max_abs_z", r.max_abs_z}};
}

inline nlohmann::json report_json(const SamplingCheck& c) {
    return {{"exact", c.exact},
            {"estimate", c.estimate},
            {"std_error", c.std_error},
            {"deviation", c.deviation()},
            {"n_samples", c.n_samples},
            {"seed", c.seed},
            {"within_4_se", c.within(4.0)}};
}

inline nlohmann::json report_json(const BiasDemoResult& r) {
    return {{"expected_rpl", percent_json(r.expected_rpl)},
            {"expected_ra", percent_json(r.expected_ra)},
            {"strictly_positive", r.strict},
            {"equal_value_probability", r.equal_probability}};
}

inline nlohmann::json report_json(const PropertyResult& r) {
    nlohmann::json j{{"property", r.property},
                     {"kind", to_string(r.kind)},
                     {"expected_to_hold", r.expected_to_hold},
                     {"held", r.held},
                     {"as_expected", r.as_expected()},
                     {"instances", r.instances},
                     {"worst_residual", r.worst_residual},
                     {"worst_stream", r.worst_stream}};
    if (r.counterexample)
        j["counterexample"] = {{"stream", r.counterexample->stream},
                               {"description", r.counterexample->description},
                               {"magnitude", r.counterexample->magnitude}};
    return j;
}

inline nlohmann::json report_json(const AxiomReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.results) rows.push_back(report_json(row));
    return {{"seed", r.config.seed},
            {"instances", r.config.instances},
            {"all_as_expected", r.all_as_expected()},
            {"results", std::move(rows)}};
}

} // namespace fairindex
