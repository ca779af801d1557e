#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"

namespace fairindex {

/// Probability mass below which a branch is treated as impossible and
/// pruned from enumeration.
inline constexpr double prob_epsilon = 0.0;

/// Tolerance for "probabilities sum to one" checks on model input.
inline constexpr double prob_sum_tol = 1e-12;

/// One joint realization of all assets' one-period price factors.
struct JointOutcome {
    std::vector<double> factors;
    double probability = 0.0;
};

/// Finite-support marginal law of one asset's one-period price factor.
struct FactorLaw {
    std::vector<double> factors;
    std::vector<double> probabilities;

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < factors.size(); ++i) m += factors[i] * probabilities[i];
        return m;
    }

    void validate() const {
        if (factors.empty()) throw SettingViolatedError("factor law has no outcomes");
        if (factors.size() != probabilities.size())
            throw SettingViolatedError("factor law outcome/probability length mismatch");
        double total = 0.0;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (!(factors[i] > 0.0) || !std::isfinite(factors[i]))
                throw SettingViolatedError("price factors must be positive and finite");
            if (!(probabilities[i] >= 0.0) || !std::isfinite(probabilities[i]))
                throw SettingViolatedError("probabilities must be nonnegative");
            total += probabilities[i];
        }
        if (std::abs(total - 1.0) > prob_sum_tol)
            throw SettingViolatedError("probabilities must sum to one");
    }
};

/// A price process on a finite probability space: initial prices and a
/// one-period joint factor law, applied independently each period up to
/// the horizon. Enumerating it yields a scenario tree; sampling it
/// yields market paths.
struct PathModel {
    std::vector<std::string> asset_ids;
    std::vector<double> initial_prices;
    std::vector<JointOutcome> outcomes;
    Time horizon = 1;

    int n_assets() const { return static_cast<int>(asset_ids.size()); }

    void validate() const {
        if (asset_ids.empty()) throw SettingViolatedError("model has no assets");
        if (initial_prices.size() != asset_ids.size())
            throw SettingViolatedError("initial price count does not match asset count");
        for (double p : initial_prices)
            if (!(p > 0.0) || !std::isfinite(p))
                throw SettingViolatedError("initial prices must be positive and finite");
        if (horizon < 1) throw SettingViolatedError("model horizon must be at least 1");
        if (outcomes.empty()) throw SettingViolatedError("model has no outcomes");
        double total = 0.0;
        for (const auto& o : outcomes) {
            if (o.factors.size() != asset_ids.size())
                throw SettingViolatedError("joint outcome width does not match asset count");
            for (double f : o.factors)
                if (!(f > 0.0) || !std::isfinite(f))
                    throw SettingViolatedError("price factors must be positive and finite");
            if (!(o.probability >= 0.0) || !std::isfinite(o.probability))
                throw SettingViolatedError("probabilities must be nonnegative");
            total += o.probability;
        }
        if (std::abs(total - 1.0) > prob_sum_tol)
            throw SettingViolatedError("outcome probabilities must sum to one");
    }

    /// E[factor] per asset under the joint law.
    std::vector<double> factor_means() const {
        std::vector<double> means(asset_ids.size(), 0.0);
        for (const auto& o : outcomes)
            for (std::size_t j = 0; j < means.size(); ++j)
                means[j] += o.probability * o.factors[j];
        return means;
    }

    /// Joint law as the product of independent marginals. The outcome
    /// count is the product of marginal support sizes.
    static PathModel independent(std::vector<std::string> ids, std::vector<double> initial,
                                 const std::vector<FactorLaw>& laws, Time horizon) {
        if (ids.size() != laws.size())
            throw SettingViolatedError("one factor law per asset is required");
        for (const auto& law : laws) law.validate();
        PathModel m;
        m.asset_ids = std::move(ids);
        m.initial_prices = std::move(initial);
        m.horizon = horizon;

        std::size_t count = 1;
        for (const auto& law : laws) {
            count *= law.factors.size();
            if (count > 1'000'000)
                throw BudgetExceededError("joint outcome table would exceed 1e6 entries");
        }
        m.outcomes.reserve(count);
        std::vector<std::size_t> pick(laws.size(), 0);
        for (std::size_t n = 0; n < count; ++n) {
            JointOutcome o;
            o.probability = 1.0;
            o.factors.reserve(laws.size());
            for (std::size_t j = 0; j < laws.size(); ++j) {
                o.factors.push_back(laws[j].factors[pick[j]]);
                o.probability *= laws[j].probabilities[pick[j]];
            }
            m.outcomes.push_back(std::move(o));
            for (std::size_t j = laws.size(); j-- > 0;) {
                if (++pick[j] < laws[j].factors.size()) break;
                pick[j] = 0;
            }
        }
        m.validate();
        return m;
    }
};

struct TreeNode {
    Time depth = 0;
    int parent = -1;
    double probability = 1.0; // conditional on the parent
    std::vector<double> prices;
    std::vector<int> children;
};

/// Explicit enumeration of a finite filtered probability space: each
/// node is an atom of the filtration at its depth. Nodes are stored
/// with parents before children; node 0 is the root.
struct ScenarioTree {
    std::vector<std::string> asset_ids;
    Time horizon = 0;
    std::vector<TreeNode> nodes;

    int n_assets() const { return static_cast<int>(asset_ids.size()); }
    int n_nodes() const { return static_cast<int>(nodes.size()); }

    const TreeNode& node(int id) const {
        if (id < 0 || id >= n_nodes())
            throw OutOfRangeError("node id " + std::to_string(id) + " outside tree");
        return nodes[static_cast<std::size_t>(id)];
    }

    bool is_leaf(int id) const { return node(id).children.empty(); }

    /// Unconditional probability of reaching the node.
    double path_probability(int id) const {
        double p = 1.0;
        for (int v = id; v != -1; v = node(v).parent) p *= node(v).probability;
        return p;
    }

    /// Node ids from the root to the given node, inclusive.
    std::vector<int> path_to(int id) const {
        std::vector<int> path;
        for (int v = id; v != -1; v = node(v).parent) path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
    }

    std::vector<int> nodes_at(Time depth) const {
        std::vector<int> out;
        for (int v = 0; v < n_nodes(); ++v)
            if (nodes[static_cast<std::size_t>(v)].depth == depth) out.push_back(v);
        return out;
    }

    std::vector<int> leaves() const { return nodes_at(horizon); }

    void validate() const {
        if (nodes.empty()) throw InvalidHistoryError("tree has no nodes");
        if (nodes[0].parent != -1 || nodes[0].depth != 0)
            throw InvalidHistoryError("node 0 must be the root");
        for (int v = 0; v < n_nodes(); ++v) {
            const TreeNode& n = nodes[static_cast<std::size_t>(v)];
            if (n.prices.size() != asset_ids.size())
                throw InvalidHistoryError("node price width does not match asset count");
            if (v > 0) {
                if (n.parent < 0 || n.parent >= v)
                    throw InvalidHistoryError("nodes must be stored with parents first");
                if (node(n.parent).depth + 1 != n.depth)
                    throw InvalidHistoryError("child depth must be parent depth + 1");
            }
            if (n.children.empty()) {
                if (n.depth != horizon)
                    throw InvalidHistoryError("every leaf must sit at the horizon");
            } else {
                double total = 0.0;
                for (int c : n.children) {
                    if (c <= v || c >= n_nodes() || node(c).parent != v)
                        throw InvalidHistoryError("inconsistent parent/child links");
                    total += node(c).probability;
                }
                if (std::abs(total - 1.0) > prob_sum_tol)
                    throw InvalidHistoryError("child probabilities must sum to one");
            }
        }
    }
};

/// Enumerates the model into a scenario tree, pruning zero-probability
/// branches. The tree size is capped by a node-asset budget (node count
/// times asset count) to keep memory bounded; exceeding it throws
/// BudgetExceededError before any allocation grows past the cap.
inline ScenarioTree build_tree(const PathModel& model, std::size_t budget = 1'000'000) {
    model.validate();

    std::vector<const JointOutcome*> live;
    for (const auto& o : model.outcomes)
        if (o.probability > prob_epsilon) live.push_back(&o);
    if (live.empty()) throw SettingViolatedError("model has no outcomes of positive probability");

    // Predicted node count: sum of branching^d for d = 0..horizon.
    const double b = static_cast<double>(live.size());
    double predicted = 1.0, layer = 1.0;
    for (Time d = 1; d <= model.horizon; ++d) {
        layer *= b;
        predicted += layer;
        if (predicted * model.asset_ids.size() > static_cast<double>(budget))
            throw BudgetExceededError("scenario tree needs about " +
                                      std::to_string(predicted * model.asset_ids.size()) +
                                      " node-assets, budget is " + std::to_string(budget));
    }

    ScenarioTree tree;
    tree.asset_ids = model.asset_ids;
    tree.horizon = model.horizon;
    tree.nodes.reserve(static_cast<std::size_t>(predicted));

    TreeNode root;
    root.prices = model.initial_prices;
    tree.nodes.push_back(std::move(root));

    int first_at_depth = 0;
    for (Time d = 0; d < model.horizon; ++d) {
        const int end_at_depth = tree.n_nodes();
        for (int v = first_at_depth; v < end_at_depth; ++v) {
            for (const JointOutcome* o : live) {
                TreeNode child;
                child.depth = d + 1;
                child.parent = v;
                child.probability = o->probability;
                child.prices.resize(model.asset_ids.size());
                const auto& parent_prices = tree.nodes[static_cast<std::size_t>(v)].prices;
                for (std::size_t j = 0; j < child.prices.size(); ++j)
                    child.prices[j] = parent_prices[j] * o->factors[j];
                tree.nodes[static_cast<std::size_t>(v)].children.push_back(tree.n_nodes());
                tree.nodes.push_back(std::move(child));
            }
        }
        first_at_depth = end_at_depth;
    }
    return tree;
}

/// E[X(next period) | node]: probability-weighted average of the payoff
/// over the node's children. The payoff map must cover every child.
inline double conditional_expectation(const ScenarioTree& tree, int node_id,
                                      const std::map<int, double>& payoff) {
    const TreeNode& n = tree.node(node_id);
    if (n.children.empty())
        throw OutOfRangeError("node " + std::to_string(node_id) +
                              " is a leaf; nothing follows it");
    double e = 0.0;
    for (int c : n.children) {
        auto it = payoff.find(c);
        if (it == payoff.end())
            throw MissingPayoffError("payoff missing for child node " + std::to_string(c));
        e += tree.node(c).probability * it->second;
    }
    return e;
}

/// Same, with the payoff given for every node as a dense vector.
inline double conditional_expectation(const ScenarioTree& tree, int node_id,
                                      const std::vector<double>& by_node) {
    if (by_node.size() != static_cast<std::size_t>(tree.n_nodes()))
        throw MissingPayoffError("payoff vector must cover every node");
    const TreeNode& n = tree.node(node_id);
    if (n.children.empty())
        throw OutOfRangeError("node " + std::to_string(node_id) +
                              " is a leaf; nothing follows it");
    double e = 0.0;
    for (int c : n.children) e += tree.node(c).probability * by_node[static_cast<std::size_t>(c)];
    return e;
}

enum class ProcessClass { Martingale, Submartingale, Supermartingale, None };

inline const char* to_string(ProcessClass c) {
    switch (c) {
        case ProcessClass::Martingale: return "martingale";
        case ProcessClass::Submartingale: return "submartingale";
        case ProcessClass::Supermartingale: return "supermartingale";
        case ProcessClass::None: return "none";
    }
    return "?";
}

/// Drift survey of an adapted process: delta(v) = E[X | v] - X(v) over
/// all interior nodes.
struct ProcessClassification {
    ProcessClass process_class = ProcessClass::Martingale;
    double max_abs_drift = 0.0;    // max |delta|
    double max_positive_drift = 0.0;
    double min_negative_drift = 0.0; // most negative delta (<= 0)
    int witness = -1;              // node where |delta| peaks
    double witness_drift = 0.0;
};

/// Classifies the process given by one value per node. A process is a
/// martingale when every |delta| is within tol; failing that it is a
/// submartingale when no delta is below -tol, a supermartingale when no
/// delta is above +tol, and unclassified otherwise.
inline ProcessClassification classify_process(const ScenarioTree& tree,
                                              const std::vector<double>& by_node,
                                              double tol = 1e-9) {
    if (by_node.size() != static_cast<std::size_t>(tree.n_nodes()))
        throw MissingPayoffError("process vector must cover every node");
    if (!(tol >= 0.0)) throw OutOfRangeError("tolerance must be nonnegative");

    ProcessClassification out;
    for (int v = 0; v < tree.n_nodes(); ++v) {
        if (tree.is_leaf(v)) continue;
        const double delta =
            conditional_expectation(tree, v, by_node) - by_node[static_cast<std::size_t>(v)];
        out.max_positive_drift = std::max(out.max_positive_drift, delta);
        out.min_negative_drift = std::min(out.min_negative_drift, delta);
        if (std::abs(delta) > out.max_abs_drift) {
            out.max_abs_drift = std::abs(delta);
            out.witness = v;
            out.witness_drift = delta;
        }
    }
    if (out.max_abs_drift <= tol)
        out.process_class = ProcessClass::Martingale;
    else if (out.min_negative_drift >= -tol)
        out.process_class = ProcessClass::Submartingale;
    else if (out.max_positive_drift <= tol)
        out.process_class = ProcessClass::Supermartingale;
    else
        out.process_class = ProcessClass::None;
    return out;
}

} // namespace fairindex
