#include <catch2/catch_amalgamated.hpp>

#include "fairindex/balance.hpp"
#include "fairindex/fixtures.hpp"
#include "fairindex/generators.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/rng.hpp"

using namespace fairindex;

namespace {

FundLedger simple_fund(std::string id, std::vector<double> units, std::vector<double> values) {
    FundLedger f;
    f.id = std::move(id);
    f.units = std::move(units);
    f.values = std::move(values);
    return f;
}

} // namespace

TEST_CASE("fund ledger basics") {
    const FundLedger f = simple_fund("F1", {100.0, 110.0}, {2.0, 2.5});

    CHECK(f.horizon() == 1);
    CHECK(f.covers(0));
    CHECK(f.covers(1));
    CHECK_FALSE(f.covers(2));
    CHECK_FALSE(f.covers(-1));
    CHECK(f.assets_at(0) == 200.0);
    CHECK(f.assets_at(1) == 275.0);
    CHECK_THROWS_AS(f.units_at(2), OutOfRangeError);

    // Without a split the post state coincides with the recorded one.
    CHECK(f.post_units_at(0) == 100.0);
    CHECK(f.post_value_at(0) == 2.0);
    CHECK(f.split_factor(0) == 1.0);
    CHECK(f.cumulative_split_factor(1) == 1.0);
    CHECK(f.adjusted_value(1) == 2.5);
}

TEST_CASE("split bookkeeping") {
    FundLedger f = simple_fund("F1", {100.0, 100.0, 100.0}, {2.0, 3.0, 1.6});

    SECTION("post state conserves assets and rebases later values") {
        f.post[1] = SplitState{200.0, 1.5}; // 2-for-1 split at t=1
        f.validate();
        CHECK(f.post_units_at(1) == 200.0);
        CHECK(f.post_value_at(1) == 1.5);
        CHECK(f.split_factor(1) == 2.0);
        CHECK(f.cumulative_split_factor(1) == 1.0); // factors strictly before t
        CHECK(f.cumulative_split_factor(2) == 2.0);
        CHECK(f.adjusted_value(2) == Catch::Approx(3.2));
    }

    SECTION("non-conserving post state is rejected") {
        f.post[1] = SplitState{200.0, 1.4};
        CHECK_THROWS_AS(f.validate(), InvalidHistoryError);
    }

    SECTION("split outside the grid is rejected") {
        f.post[7] = SplitState{200.0, 1.0};
        CHECK_THROWS_AS(f.validate(), InvalidHistoryError);
    }

    SECTION("apply_split derives the conserving post value") {
        GroupHistory h;
        h.funds.push_back(f);
        h = apply_split(std::move(h), "F1", 1, 300.0);
        const FundLedger& g = h.funds[0];
        CHECK(g.post_units_at(1) == 300.0);
        CHECK(g.post_value_at(1) == Catch::Approx(1.0));
        CHECK_THROWS_AS(apply_split(h, "F1", 1, 400.0), InvalidEventError);
        CHECK_THROWS_AS(apply_split(h, "F1", 0, -1.0), NonPositiveUnitsError);
        CHECK_THROWS_AS(apply_split(h, "nope", 0, 10.0), UnknownFundError);
    }
}

TEST_CASE("fund ledger validation errors") {
    CHECK_THROWS_AS(simple_fund("", {1.0}, {1.0}).validate(), InvalidHistoryError);
    CHECK_THROWS_AS(simple_fund("F", {}, {}).validate(), InvalidHistoryError);
    CHECK_THROWS_AS(simple_fund("F", {1.0, 2.0}, {1.0}).validate(), InvalidHistoryError);
    CHECK_THROWS_AS(simple_fund("F", {0.0}, {1.0}).validate(), InvalidHistoryError);
    CHECK_THROWS_AS(simple_fund("F", {1.0}, {-2.0}).validate(), InvalidHistoryError);

    FundLedger f = simple_fund("F", {1.0, 1.0}, {1.0, 1.0});
    f.net_flows = {0.0};
    CHECK_THROWS_AS(f.validate(), InvalidHistoryError);
    f.net_flows.clear();
    f.unit_withdrawals = {0.0, 0.0};
    CHECK_THROWS_AS(f.validate(), InvalidHistoryError); // investments missing
    f.unit_investments = {0.0, 0.0};
    f.validate();
}

TEST_CASE("group history validation") {
    GroupHistory h;
    CHECK_THROWS_AS(h.validate(), InvalidHistoryError);

    h.funds.push_back(simple_fund("F1", {10.0, 10.0}, {1.0, 1.1}));
    h.funds.push_back(simple_fund("F2", {20.0, 20.0}, {1.0, 0.9}));
    h.validate();
    CHECK(h.horizon() == 1);
    CHECK(h.all_cover(1));
    CHECK(h.fund_index("F2") == 1);
    CHECK_THROWS_AS(h.fund_index("F3"), UnknownFundError);

    SECTION("duplicate ids are rejected") {
        h.funds.push_back(simple_fund("F1", {1.0, 1.0}, {1.0, 1.0}));
        CHECK_THROWS_AS(h.validate(), InvalidHistoryError);
    }

    SECTION("ragged histories fail the rectangular check only") {
        h.funds.push_back(simple_fund("F3", {5.0}, {1.0}));
        h.validate();
        CHECK_FALSE(h.all_cover(1));
        CHECK_THROWS_AS(h.validate_rectangular(), InvalidHistoryError);
    }

    SECTION("market path must cover the fund grid") {
        MarketPath m;
        m.asset_ids = {"A"};
        m.prices = {{1.0}};
        h.market = m;
        CHECK_THROWS_AS(h.validate(), InvalidHistoryError);
        h.market->prices.push_back({1.2});
        h.validate();
    }

    SECTION("holdings rows must match the market width") {
        MarketPath m;
        m.asset_ids = {"A", "B"};
        m.prices = {{1.0, 2.0}, {1.1, 1.9}};
        h.market = m;
        h.funds[0].holdings = {{3.0}, {}};
        CHECK_THROWS_AS(h.validate(), InvalidHistoryError);
        h.funds[0].holdings = {{3.0, 3.5}, {}};
        h.validate();
    }
}

TEST_CASE("asset snapshot") {
    GroupHistory h;
    h.funds.push_back(simple_fund("F1", {10.0, 10.0}, {2.0, 2.2}));
    h.funds.push_back(simple_fund("F2", {30.0, 30.0}, {1.0, 1.1}));

    const AssetSnapshot snap = assets(h, 0);
    CHECK(snap.total == 50.0);
    CHECK(snap.fund_assets == std::vector<double>{20.0, 30.0});
    CHECK(snap.weights[0] == Catch::Approx(0.4));
    CHECK(snap.weights[1] == Catch::Approx(0.6));
    CHECK(snap.weights[0] + snap.weights[1] == Catch::Approx(1.0));
    CHECK_THROWS_AS(assets(h, 2), OutOfRangeError);
}

TEST_CASE("aggregate flows") {
    GroupHistory h;
    h.funds.push_back(simple_fund("F1", {100.0, 120.0}, {1.0, 1.1}));
    h.funds.push_back(simple_fund("F2", {50.0, 40.0}, {2.0, 2.0}));

    // F1 gained 20 units worth 1.1 each, F2 lost 10 units worth 2 each.
    CHECK(aggregate_flows(h, 1) == Catch::Approx(20.0 * 1.1 - 10.0 * 2.0));
    CHECK_THROWS_AS(aggregate_flows(h, 0), OutOfRangeError);

    // A split at t=0 changes the unit baseline for the next flow.
    h = apply_split(std::move(h), "F1", 0, 200.0);
    CHECK(aggregate_flows(h, 1) == Catch::Approx((120.0 - 200.0) * 1.1 - 10.0 * 2.0));
}

TEST_CASE("merger absorbs one fund into another") {
    const GroupHistory h = fixtures::merger_example_history();
    const MergerEvent event = fixtures::merger_example_event();
    const GroupHistory merged = apply_merger(h, event);

    CHECK(merged.n_funds() == 4);
    CHECK(merged.merger_times == std::vector<Time>{1});
    CHECK_THROWS_AS(merged.fund_index(event.absorbed), UnknownFundError);
    merged.validate_rectangular();

    const FundLedger& combined = merged.fund(event.survivor);

    SECTION("combined fund reproduces the pair's assets before the event") {
        CHECK(combined.value_at(0) == 5.0); // starts at the survivor's level
        CHECK(combined.assets_at(0) == Catch::Approx(3e5 * 5.0 + 2e5 * 8.5));
        CHECK(combined.assets_at(1) == Catch::Approx(3e5 * 5.5 + 2.2e5 * 8.6));
        // Asset-weighted factor over period 0: 1.053125 on combined assets.
        CHECK(combined.value_at(1) / combined.value_at(0) == Catch::Approx(1.053125));
    }

    SECTION("the event rebases units with assets conserved") {
        CHECK(combined.post_units_at(1) == 6e5);
        CHECK(combined.post_value_at(1) == Catch::Approx(3.542e6 / 6e5));
        CHECK(combined.post_units_at(1) * combined.post_value_at(1) ==
              Catch::Approx(combined.assets_at(1)));
    }

    SECTION("after the event the survivor's records are used unchanged") {
        CHECK(combined.units_at(2) == 6.1e5);
        CHECK(combined.value_at(2) == 6.2);
    }

    SECTION("event validation") {
        MergerEvent bad = event;
        bad.survivor = bad.absorbed;
        CHECK_THROWS_AS(apply_merger(h, bad), InvalidEventError);

        bad = event;
        bad.time = 0;
        CHECK_THROWS_AS(apply_merger(h, bad), OutOfRangeError);

        bad = event;
        bad.time = 2; // survivor's last observation: nothing to absorb into
        CHECK_THROWS_AS(apply_merger(h, bad), OutOfRangeError);

        bad = event;
        bad.post_units = 0.0;
        CHECK_THROWS_AS(apply_merger(h, bad), NonPositiveUnitsError);

        bad = event;
        bad.absorbed = "F9";
        CHECK_THROWS_AS(apply_merger(h, bad), UnknownFundError);

        GroupHistory split_at_tau = apply_split(h, event.survivor, 1, 9e5);
        CHECK_THROWS_AS(apply_merger(split_at_tau, event), InvalidEventError);
    }
}

TEST_CASE("balance audit accepts recorded random histories") {
    HistoryOptions opt;
    opt.record_flows = true;
    for (int i = 0; i < 200; ++i) {
        Rng rng(99, static_cast<std::uint64_t>(i));
        const GroupHistory h = random_history(rng, opt);
        const ValidationReport report = validate_balance(h, 1e-9, BalanceChecks::available_for(h));
        INFO("instance " << i << " worst residual " << report.max_residual);
        CHECK(report.passed());
    }
}

TEST_CASE("balance audit pinpoints a corrupted cell") {
    GroupHistory h;
    h.funds.push_back(simple_fund("F1", {100.0, 110.0, 105.0}, {1.0, 1.2, 1.1}));
    h.funds.push_back(simple_fund("F2", {200.0, 200.0, 210.0}, {2.0, 1.9, 2.0}));
    // Time 1: fund 1 takes in 12.0 of client money (10 units at 1.2).
    // Time 2: fund 1 redeems 5 units into the pool (5.5 of money) which
    // buys 2.75 units of fund 2; fund 2 also takes 14.5 of client money.
    h.funds[0].net_flows = {0.0, 12.0, 0.0};
    h.funds[0].unit_withdrawals = {0.0, 0.0, 5.0};
    h.funds[0].unit_investments = {0.0, 0.0, 0.0};
    h.funds[1].net_flows = {0.0, 0.0, 14.5};
    h.funds[1].unit_withdrawals = {0.0, 0.0, 0.0};
    h.funds[1].unit_investments = {0.0, 0.0, 2.75};
    REQUIRE(validate_balance(h, 1e-9, BalanceChecks::available_for(h)).passed());

    // A ~1% error in one recorded unit count must surface at that cell
    // with a residual on the order of the corruption.
    h.funds[0].units[1] = 111.0;
    const ValidationReport report = validate_balance(h, 1e-9, BalanceChecks::available_for(h));
    REQUIRE_FALSE(report.passed());
    CHECK(report.max_residual > 1e-3);
    CHECK(report.max_residual < 0.1);
    bool hits_cell = false;
    for (const auto& v : report.violations)
        hits_cell = hits_cell || (v.fund == "F1" && (v.time == 1 || v.time == 2));
    CHECK(hits_cell);
}

TEST_CASE("balance audit rejects requests without the recorded data") {
    GroupHistory h;
    h.funds.push_back(simple_fund("F1", {10.0, 11.0}, {1.0, 1.0}));
    CHECK_THROWS_AS(validate_balance(h, 1e-9, BalanceChecks::all()), MissingDataError);

    // Split conservation alone needs nothing optional.
    BalanceChecks minimal = BalanceChecks::none();
    minimal.split_conservation = true;
    CHECK(validate_balance(h, 1e-9, minimal).passed());
}

TEST_CASE("available checks follow the recorded columns") {
    GroupHistory h;
    h.funds.push_back(simple_fund("F1", {10.0, 11.0}, {1.0, 1.0}));

    BalanceChecks c = BalanceChecks::available_for(h);
    CHECK(c.split_conservation);
    CHECK_FALSE(c.portfolio_value);
    CHECK_FALSE(c.aggregate_flow);

    h.funds[0].net_flows = {0.0, 1.0};
    c = BalanceChecks::available_for(h);
    CHECK(c.aggregate_flow);
    CHECK_FALSE(c.unit_flow); // unit withdrawals/investments still missing

    h.funds[0].unit_withdrawals = {0.0, 0.0};
    h.funds[0].unit_investments = {0.0, 1.0};
    c = BalanceChecks::available_for(h);
    CHECK(c.unit_flow);
}
