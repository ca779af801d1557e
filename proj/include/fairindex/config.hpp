#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/scenario.hpp"
#include "fairindex/strategy.hpp"

// Scenario models are described by a JSON document:
//
// {
//   "schema": 1,
//   "horizon": 2,
//   "seed": 42,
//   "n_paths": 100000,
//   "assets": [
//     {"id": "A", "initial_price": 1.0,
//      "factors": [1.2, 0.8], "probabilities": [0.5, 0.5]},
//     {"id": "B", "initial_price": 1.0, "factors": [1.0], "probabilities": [1.0]}
//   ],
//   "funds": [
//     {"id": "F1", "units": 1.0, "unit_value": 1.0, "weights": [1.0, 0.0]}
//   ]
// }
//
// Per-asset factor laws are combined independently. Alternatively a
// top-level "joint_outcomes" array gives the joint law directly, each
// entry {"factors": [...], "probability": p} with one factor per asset;
// the two forms are mutually exclusive. "funds" is optional: by default
// each asset gets one fund fully invested in it. seed and n_paths are
// defaults a caller may override from the command line.

namespace fairindex {

struct ModelConfig {
    PathModel model;
    GroupHistory initial;                           // one observation at time 0
    std::vector<std::vector<double>> fund_weights;  // [fund][asset], rows sum to 1
    std::uint64_t seed = 0;
    std::size_t n_paths = 10000;
};

namespace detail {

inline const nlohmann::json& config_field(const nlohmann::json& j, const char* key,
                                          const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(ctx + ": missing field '" + key + "'");
    return *it;
}

inline double config_number(const nlohmann::json& j, const char* key, const std::string& ctx) {
    const auto& field = config_field(j, key, ctx);
    if (!field.is_number()) throw ParseError(ctx + ": field '" + key + "' must be a number");
    return field.get<double>();
}

inline std::vector<double> config_number_array(const nlohmann::json& j, const char* key,
                                               const std::string& ctx) {
    const auto& field = config_field(j, key, ctx);
    if (!field.is_array()) throw ParseError(ctx + ": field '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : field) {
        if (!v.is_number()) throw ParseError(ctx + ": field '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace detail

inline ModelConfig parse_model_config(const nlohmann::json& j, const std::string& ctx = "config") {
    if (!j.is_object()) throw ParseError(ctx + ": document must be a JSON object");
    ModelConfig cfg;

    const double horizon = detail::config_number(j, "horizon", ctx);
    if (horizon < 1 || horizon != static_cast<double>(static_cast<Time>(horizon)))
        throw ParseError(ctx + ": horizon must be a positive integer");
    cfg.model.horizon = static_cast<Time>(horizon);

    const auto& assets = detail::config_field(j, "assets", ctx);
    if (!assets.is_array() || assets.empty())
        throw ParseError(ctx + ": 'assets' must be a non-empty array");

    std::vector<FactorLaw> laws;
    const bool joint_form = j.contains("joint_outcomes");
    for (const auto& a : assets) {
        const std::string actx = ctx + ".assets[" + std::to_string(cfg.model.asset_ids.size()) + "]";
        const auto& id = detail::config_field(a, "id", actx);
        if (!id.is_string() || id.get<std::string>().empty())
            throw ParseError(actx + ": 'id' must be a non-empty string");
        cfg.model.asset_ids.push_back(id.get<std::string>());
        cfg.model.initial_prices.push_back(detail::config_number(a, "initial_price", actx));
        if (!joint_form) {
            FactorLaw law;
            law.factors = detail::config_number_array(a, "factors", actx);
            law.probabilities = detail::config_number_array(a, "probabilities", actx);
            if (law.factors.size() != law.probabilities.size())
                throw ParseError(actx + ": factors and probabilities differ in length");
            laws.push_back(std::move(law));
        } else if (a.contains("factors") || a.contains("probabilities")) {
            throw ParseError(actx + ": per-asset laws cannot be mixed with joint_outcomes");
        }
    }

    if (joint_form) {
        const auto& joint = detail::config_field(j, "joint_outcomes", ctx);
        if (!joint.is_array() || joint.empty())
            throw ParseError(ctx + ": 'joint_outcomes' must be a non-empty array");
        for (const auto& o : joint) {
            const std::string octx =
                ctx + ".joint_outcomes[" + std::to_string(cfg.model.outcomes.size()) + "]";
            JointOutcome out;
            out.factors = detail::config_number_array(o, "factors", octx);
            out.probability = detail::config_number(o, "probability", octx);
            if (out.factors.size() != cfg.model.asset_ids.size())
                throw ParseError(octx + ": expected one factor per asset");
            cfg.model.outcomes.push_back(std::move(out));
        }
        try {
            cfg.model.validate();
        } catch (const Error& e) {
            throw ParseError(ctx + ": " + e.what());
        }
    } else {
        try {
            cfg.model = PathModel::independent(cfg.model.asset_ids, cfg.model.initial_prices,
                                               laws, cfg.model.horizon);
        } catch (const Error& e) {
            throw ParseError(ctx + ": " + e.what());
        }
    }

    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_unsigned())
            throw ParseError(ctx + ": 'seed' must be a nonnegative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (j.contains("n_paths")) {
        const auto& n = j.at("n_paths");
        if (!n.is_number_unsigned() || n.get<std::uint64_t>() == 0)
            throw ParseError(ctx + ": 'n_paths' must be a positive integer");
        cfg.n_paths = n.get<std::size_t>();
    }

    const std::size_t n_assets = cfg.model.asset_ids.size();
    if (j.contains("funds")) {
        const auto& funds = detail::config_field(j, "funds", ctx);
        if (!funds.is_array() || funds.empty())
            throw ParseError(ctx + ": 'funds' must be a non-empty array");
        for (const auto& f : funds) {
            const std::string fctx =
                ctx + ".funds[" + std::to_string(cfg.initial.funds.size()) + "]";
            FundLedger fund;
            const auto& id = detail::config_field(f, "id", fctx);
            if (!id.is_string() || id.get<std::string>().empty())
                throw ParseError(fctx + ": 'id' must be a non-empty string");
            fund.id = id.get<std::string>();
            fund.units.push_back(f.contains("units") ? detail::config_number(f, "units", fctx)
                                                     : 1.0);
            fund.values.push_back(
                f.contains("unit_value") ? detail::config_number(f, "unit_value", fctx) : 1.0);
            cfg.initial.funds.push_back(std::move(fund));
            if (f.contains("weights")) {
                auto w = detail::config_number_array(f, "weights", fctx);
                if (w.size() != n_assets)
                    throw ParseError(fctx + ": expected one weight per asset");
                cfg.fund_weights.push_back(std::move(w));
            } else {
                // Default: equal split over the assets.
                cfg.fund_weights.emplace_back(n_assets, 1.0 / static_cast<double>(n_assets));
            }
        }
    } else {
        // One fund per asset, fully invested in it.
        for (std::size_t a = 0; a < n_assets; ++a) {
            FundLedger fund;
            fund.id = "F" + std::to_string(a + 1);
            fund.units.push_back(1.0);
            fund.values.push_back(1.0);
            cfg.initial.funds.push_back(std::move(fund));
            std::vector<double> w(n_assets, 0.0);
            w[a] = 1.0;
            cfg.fund_weights.push_back(std::move(w));
        }
    }
    try {
        cfg.initial.validate_rectangular();
    } catch (const Error& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    return cfg;
}

inline ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingDataError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_model_config(j, path);
}

/// Strategy that sets the configured target weights at the root and
/// rebalances to them at every later node, with no flows.
inline StrategySpec rebalancing_spec(const ScenarioTree& tree,
                                     const std::vector<std::vector<double>>& fund_weights) {
    StrategySpec spec;
    std::vector<FundAction> actions(fund_weights.size());
    for (std::size_t i = 0; i < fund_weights.size(); ++i) actions[i].weights = fund_weights[i];
    for (int v = 0; v < tree.n_nodes(); ++v) spec.actions[v] = actions;
    return spec;
}

/// Same behavior keyed by time, for evolution along sampled paths.
inline StrategyRule rebalancing_rule(const std::vector<std::vector<double>>& fund_weights) {
    StrategyRule rule;
    rule.per_fund.resize(fund_weights.size());
    for (std::size_t i = 0; i < fund_weights.size(); ++i)
        rule.per_fund[i].weights = fund_weights[i];
    return rule;
}

} // namespace fairindex
