#include <cmath>
#include <cstdint>

#include <catch2/catch_amalgamated.hpp>

#include "fairindex/balance.hpp"
#include "fairindex/config.hpp"
#include "fairindex/fixtures.hpp"
#include "fairindex/generators.hpp"
#include "fairindex/scenario.hpp"
#include "fairindex/simulate.hpp"
#include "fairindex/strategy.hpp"

using namespace fairindex;

TEST_CASE("factor law") {
    FactorLaw law{{1.2, 0.8}, {0.5, 0.5}};
    law.validate();
    CHECK(law.mean() == Catch::Approx(1.0));

    CHECK_THROWS_AS((FactorLaw{{}, {}}).validate(), SettingViolatedError);
    CHECK_THROWS_AS((FactorLaw{{1.0}, {0.5, 0.5}}).validate(), SettingViolatedError);
    CHECK_THROWS_AS((FactorLaw{{-1.0}, {1.0}}).validate(), SettingViolatedError);
    CHECK_THROWS_AS((FactorLaw{{1.0, 1.2}, {0.6, 0.6}}).validate(), SettingViolatedError);
}

TEST_CASE("path model validation") {
    PathModel m = fixtures::two_scenario_model();
    m.validate();
    CHECK(m.factor_means()[0] == Catch::Approx(1.0));
    CHECK(m.factor_means()[1] == Catch::Approx(1.0));

    PathModel bad = m;
    bad.initial_prices.pop_back();
    CHECK_THROWS_AS(bad.validate(), SettingViolatedError);

    bad = m;
    bad.horizon = 0;
    CHECK_THROWS_AS(bad.validate(), SettingViolatedError);

    bad = m;
    bad.outcomes[0].probability = 0.7;
    CHECK_THROWS_AS(bad.validate(), SettingViolatedError);

    bad = m;
    bad.outcomes[0].factors = {1.2};
    CHECK_THROWS_AS(bad.validate(), SettingViolatedError);
}

TEST_CASE("independent marginals expand to a product law") {
    const PathModel m = PathModel::independent(
        {"A", "B"}, {1.0, 2.0},
        {FactorLaw{{1.2, 0.8}, {0.5, 0.5}}, FactorLaw{{1.1, 1.0, 0.9}, {0.25, 0.5, 0.25}}}, 2);
    REQUIRE(m.outcomes.size() == 6);
    double total = 0.0;
    for (const auto& o : m.outcomes) total += o.probability;
    CHECK(total == Catch::Approx(1.0));
    CHECK(m.outcomes[0].factors == std::vector<double>{1.2, 1.1});
    CHECK(m.outcomes[0].probability == Catch::Approx(0.125));

    CHECK_THROWS_AS(PathModel::independent({"A"}, {1.0}, {}, 1), SettingViolatedError);
}

TEST_CASE("tree enumeration") {
    PathModel m = fixtures::two_scenario_model();
    m.horizon = 3;
    const ScenarioTree tree = build_tree(m);
    tree.validate();

    CHECK(tree.horizon == 3);
    CHECK(tree.n_nodes() == 1 + 2 + 4 + 8);
    CHECK(tree.nodes_at(3).size() == 8);
    CHECK(tree.leaves() == tree.nodes_at(3));

    double reach = 0.0;
    for (int v : tree.leaves()) reach += tree.path_probability(v);
    CHECK(reach == Catch::Approx(1.0));

    const std::vector<int> path = tree.path_to(tree.leaves()[0]);
    REQUIRE(path.size() == 4);
    CHECK(path[0] == 0);
    for (std::size_t i = 1; i < path.size(); ++i)
        CHECK(tree.node(path[i]).parent == path[i - 1]);

    SECTION("zero-probability branches are pruned") {
        m.outcomes.push_back(JointOutcome{{1.5, 1.5}, 0.0});
        m.outcomes[0].probability = 0.5;
        m.outcomes[1].probability = 0.5;
        const ScenarioTree pruned = build_tree(m);
        CHECK(pruned.n_nodes() == tree.n_nodes());
    }

    SECTION("budget cap") {
        m.horizon = 20;
        CHECK_THROWS_AS(build_tree(m, 10'000), BudgetExceededError);
    }
}

TEST_CASE("conditional expectation and process classification") {
    PathModel m = fixtures::two_scenario_model();
    m.horizon = 2;
    const ScenarioTree tree = build_tree(m);

    // Asset A's price itself: factors 1.2 / 0.8 with mean 1.
    std::vector<double> price_a;
    for (int v = 0; v < tree.n_nodes(); ++v) price_a.push_back(tree.node(v).prices[0]);
    CHECK(conditional_expectation(tree, 0, price_a) == Catch::Approx(price_a[0]));

    const ProcessClassification mart = classify_process(tree, price_a, 1e-12);
    CHECK(mart.process_class == ProcessClass::Martingale);
    CHECK(mart.max_abs_drift <= 1e-12);

    std::vector<double> drifting = price_a;
    for (int v = 0; v < tree.n_nodes(); ++v)
        drifting[static_cast<std::size_t>(v)] *= std::pow(1.1, tree.node(v).depth);
    const ProcessClassification sub = classify_process(tree, drifting, 1e-9);
    CHECK(sub.process_class == ProcessClass::Submartingale);
    CHECK(sub.witness >= 0);
    CHECK(sub.witness_drift > 0.0);

    for (int v = 0; v < tree.n_nodes(); ++v)
        drifting[static_cast<std::size_t>(v)] =
            price_a[static_cast<std::size_t>(v)] * std::pow(0.9, tree.node(v).depth);
    CHECK(classify_process(tree, drifting, 1e-9).process_class == ProcessClass::Supermartingale);

    // Up in one subtree, down in the other: neither bound holds.
    std::vector<double> mixed(static_cast<std::size_t>(tree.n_nodes()), 1.0);
    mixed[1] = 2.0;
    mixed[2] = 1.0;
    for (int c : tree.node(1).children) mixed[static_cast<std::size_t>(c)] = 3.0;
    for (int c : tree.node(2).children) mixed[static_cast<std::size_t>(c)] = 0.5;
    CHECK(classify_process(tree, mixed, 1e-9).process_class == ProcessClass::None);

    CHECK_THROWS_AS(classify_process(tree, {1.0}, 1e-9), MissingPayoffError);
}

TEST_CASE("path sampling is deterministic and order independent") {
    Rng rng(31, 0);
    const PathModel m = random_model(rng);
    const PathSampler sampler(m, 77);

    const MarketPath a = sampler.at(5);
    const MarketPath b = sampler.at(5);
    CHECK(a.prices == b.prices);

    const std::vector<MarketPath> serial = simulate_paths(m, 77, 64, 1);
    const std::vector<MarketPath> parallel = simulate_paths(m, 77, 64, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t p = 0; p < serial.size(); ++p) CHECK(serial[p].prices == parallel[p].prices);
    CHECK(serial[5].prices == a.prices);
}

TEST_CASE("strategy feasibility rules") {
    const PathModel m = fixtures::two_scenario_model();
    const ScenarioTree tree = build_tree(m);
    const GroupHistory initial = fixtures::two_scenario_initial();

    SECTION("root flows are rejected") {
        StrategySpec spec = rebalancing_spec(tree, fixtures::two_scenario_weights());
        spec.actions[0][0].external_flow_fraction = 0.1;
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), InfeasibleStrategyError);
    }

    SECTION("unknown node keys are not adapted") {
        StrategySpec spec;
        spec.actions[99] = std::vector<FundAction>(2);
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), NotAdaptedError);
    }

    SECTION("actions must cover every fund") {
        StrategySpec spec;
        spec.actions[1] = std::vector<FundAction>(1);
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), NotAdaptedError);
    }

    SECTION("initial group must be a time-0 snapshot") {
        GroupHistory longer = initial;
        for (auto& f : longer.funds) {
            f.units.push_back(f.units[0]);
            f.values.push_back(f.values[0]);
        }
        CHECK_THROWS_AS(evolve_funds(tree, longer, StrategySpec{}), InvalidHistoryError);
    }

    SECTION("redeemed units must be fully reinvested") {
        StrategySpec spec;
        std::vector<FundAction> acts(2);
        acts[0].withdraw_fraction = 0.2;
        acts[0].reinvest_share = 0.3;
        acts[1].reinvest_share = 0.3; // shares sum to 0.6
        spec.actions[1] = acts;
        spec.actions[2] = acts;
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), InfeasibleStrategyError);
    }

    SECTION("weights must sum to one") {
        StrategySpec spec;
        std::vector<FundAction> acts(2);
        acts[0].weights = std::vector<double>{0.7, 0.7};
        spec.actions[1] = acts;
        spec.actions[2] = acts;
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), InfeasibleStrategyError);
    }

    SECTION("client outflow may not empty the fund") {
        StrategySpec spec;
        std::vector<FundAction> acts(2);
        acts[0].external_flow_fraction = -1.0;
        spec.actions[1] = acts;
        spec.actions[2] = acts;
        CHECK_THROWS_AS(evolve_funds(tree, initial, spec), InfeasibleStrategyError);
    }
}

TEST_CASE("evolution records a self-consistent history") {
    for (int i = 0; i < 100; ++i) {
        Rng rng(32, static_cast<std::uint64_t>(i));
        const PathModel m = random_model(rng);
        const int n_funds = rng.uniform_int(1, 4);
        const GroupHistory initial = random_initial_group(rng, n_funds);
        const StrategyRule rule = random_rule(rng, static_cast<std::size_t>(n_funds),
                                              m.asset_ids.size(), m.horizon);
        const PathSampler sampler(m, 1000 + static_cast<std::uint64_t>(i));
        const GroupHistory h = evolve_along_path(sampler.at(0), initial, rule);

        const ValidationReport report = validate_balance(h, 1e-9);
        INFO("instance " << i << " worst residual " << report.max_residual);
        CHECK(report.passed());
    }
}

TEST_CASE("a recurring rule's flows do not settle at time 0") {
    const PathModel m = fixtures::two_scenario_model();
    const PathSampler sampler(m, 3);
    const GroupHistory initial = fixtures::two_scenario_initial();

    StrategyRule rule = rebalancing_rule(fixtures::two_scenario_weights());
    for (auto& a : rule.per_fund) a.external_flow_fraction = 0.05;

    const GroupHistory h = evolve_along_path(sampler.at(0), initial, rule);
    CHECK(h.funds[0].net_flows[0] == 0.0);
    CHECK(h.funds[0].net_flows[1] != 0.0);
    CHECK(h.funds[0].units_at(0) == initial.funds[0].units_at(0));
}

TEST_CASE("tree evolution matches the path evolution") {
    PathModel m = fixtures::two_scenario_model();
    m.horizon = 3;
    const ScenarioTree tree = build_tree(m);
    const GroupHistory initial = fixtures::two_scenario_initial();
    const StrategySpec spec = rebalancing_spec(tree, fixtures::two_scenario_weights());
    const StrategyRule rule = rebalancing_rule(fixtures::two_scenario_weights());
    const EvolvedGroup evolved = evolve_funds(tree, initial, spec);

    for (int leaf : tree.leaves()) {
        const GroupHistory from_tree = path_history(tree, evolved, leaf);
        from_tree.validate_rectangular();
        REQUIRE(from_tree.market.has_value());

        // Replay the same prices as a standalone path.
        const GroupHistory from_path = evolve_along_path(*from_tree.market, initial, rule);
        for (std::size_t i = 0; i < from_tree.funds.size(); ++i) {
            CHECK(from_tree.funds[i].units == from_path.funds[i].units);
            CHECK(from_tree.funds[i].values == from_path.funds[i].values);
        }
        CHECK(validate_balance(from_tree, 1e-9).passed());
    }
}

TEST_CASE("index process over the tree matches path histories") {
    PathModel m = fixtures::two_scenario_model();
    m.horizon = 2;
    const ScenarioTree tree = build_tree(m);
    const GroupHistory initial = fixtures::two_scenario_initial();
    const StrategySpec spec = rebalancing_spec(tree, fixtures::two_scenario_weights());
    const EvolvedGroup evolved = evolve_funds(tree, initial, spec);

    for (IndexKind kind : {IndexKind::RA, IndexKind::RPL, IndexKind::RV}) {
        const std::vector<double> x = index_process(tree, evolved, kind);
        CHECK(x[0] == 0.0);
        for (int v = 0; v < tree.n_nodes(); ++v) {
            const GroupHistory h = path_history(tree, evolved, v);
            CHECK(x[static_cast<std::size_t>(v)] ==
                  Catch::Approx(index_value(h, kind, 0, tree.node(v).depth)).margin(1e-12));
        }
    }
}
