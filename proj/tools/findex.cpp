// findex: command-line front end for the fund index library.
//
// Subcommands:
//   compute   index value over a window, from funds CSV, mergers folded in
//   validate  audit a recorded history against the accounting identities
//   merge     fold merger events into a funds CSV and re-export it
//   simulate  evolve the configured strategy along one sampled price path
//   fairness  exact and Monte Carlo drift verdicts on a scenario model
//   axioms    randomized property suite for the three indexes
//   demo      embedded worked examples checked against reference values
//
// Exit codes: 0 success, 2 input error (bad usage, parse failure,
// missing data), 3 domain error or a completed run whose checks failed.

#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairindex/fairindex.hpp"

namespace {

using nlohmann::json;

enum class Format { Csv, Json };

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw fairindex::ParseError("unknown output format '" + s + "' (expected csv or json)");
}

void emit_json(std::ostream& out, json doc) {
    doc["schema"] = fairindex::report_schema_version;
    out << doc.dump(2) << '\n';
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------- compute

struct ComputeOptions {
    std::string funds, prices, holdings, mergers;
    std::string index = "ra";
    std::string format = "csv";
    std::optional<fairindex::Time> from, to;
    bool decompose = false;
};

int cmd_compute(const ComputeOptions& opt) {
    using namespace fairindex;
    GroupHistory h = load_history(opt.funds, opt.prices, opt.holdings);
    if (!opt.mergers.empty()) h = apply_mergers(std::move(h), read_mergers_file(opt.mergers));
    h.validate_rectangular();

    const IndexKind kind = index_kind_from_string(opt.index);
    const Time from = opt.from.value_or(0);
    const Time to = opt.to.value_or(h.horizon());
    if (opt.decompose && kind != IndexKind::RA)
        throw ParseError("--decompose applies to --index ra only");

    const double value = index_value(h, kind, from, to);
    const Format format = parse_format(opt.format);
    if (format == Format::Json) {
        json doc = {{"index", to_string(kind)},
                    {"from", from},
                    {"to", to},
                    {"result", percent_json(value)}};
        if (opt.decompose) doc["decomposition"] = report_json(decompose_ra(h, from, to));
        emit_json(std::cout, std::move(doc));
        return 0;
    }

    std::cout << "index,from,to,value,percent\n"
              << to_string(kind) << ',' << from << ',' << to << ','
              << detail::format_double(value) << ',' << percent_string(value) << '\n';
    if (opt.decompose) {
        const RaDecomposition d = decompose_ra(h, from, to);
        std::cout << "\nperiod_start,period_end,mean,chained";
        for (const auto& id : d.fund_ids) std::cout << ',' << id;
        std::cout << '\n';
        for (std::size_t p = 0; p < d.period_means.size(); ++p) {
            std::cout << (d.start + static_cast<Time>(p)) << ','
                      << (d.start + static_cast<Time>(p) + 1) << ','
                      << detail::format_double(d.period_means[p]) << ','
                      << detail::format_double(d.chained[p]);
            for (double c : d.contributions[p]) std::cout << ',' << detail::format_double(c);
            std::cout << '\n';
        }
    }
    return 0;
}

// --------------------------------------------------------------- validate

struct ValidateOptions {
    std::string funds, prices, holdings, mergers;
    std::string format = "csv";
    double tol = 1e-9;
    bool full = false;
};

int cmd_validate(const ValidateOptions& opt) {
    using namespace fairindex;
    GroupHistory h = load_history(opt.funds, opt.prices, opt.holdings);
    if (!opt.mergers.empty()) h = apply_mergers(std::move(h), read_mergers_file(opt.mergers));

    // --full demands every identity the interchange format can carry
    // (the per-unit flow split is only recorded by the simulator, never
    // by a CSV); otherwise run what the recorded columns support.
    // validate_balance itself rejects a full request lacking data.
    BalanceChecks checks = BalanceChecks::available_for(h);
    if (opt.full) {
        const bool unit_flow = checks.unit_flow;
        checks = BalanceChecks::all();
        checks.unit_flow = unit_flow;
    }
    const ValidationReport report = validate_balance(h, opt.tol, checks);

    if (parse_format(opt.format) == Format::Json) {
        emit_json(std::cout, report_json(report));
    } else {
        std::cout << "tol,comparisons,max_residual,violations,passed\n"
                  << detail::format_double(report.tol) << ',' << report.comparisons << ','
                  << detail::format_double(report.max_residual) << ','
                  << report.violations.size() << ',' << csv_bool(report.passed()) << '\n';
        if (!report.violations.empty()) {
            std::cout << "\ncheck,fund,time,residual\n";
            for (const auto& v : report.violations)
                std::cout << to_string(v.check) << ',' << v.fund << ',' << v.time << ','
                          << detail::format_double(v.residual) << '\n';
        }
    }
    return report.passed() ? 0 : 3;
}

// ------------------------------------------------------------------ merge

struct MergeOptions {
    std::string funds, mergers, output;
};

int cmd_merge(const MergeOptions& opt) {
    using namespace fairindex;
    const GroupHistory merged =
        apply_mergers(read_funds_file(opt.funds), read_mergers_file(opt.mergers));
    if (opt.output.empty()) {
        write_funds_csv(std::cout, merged);
        return 0;
    }
    std::ofstream out(opt.output);
    if (!out) throw MissingDataError("cannot open '" + opt.output + "' for writing");
    write_funds_csv(out, merged);
    return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string model;
    std::optional<std::uint64_t> seed;
    std::uint64_t path_index = 0;
    std::string out_funds, out_prices, out_holdings;
    std::string format = "csv";
    double tol = 1e-9;
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw fairindex::MissingDataError("cannot open '" + path + "' for writing");
    body(out);
}

int cmd_simulate(const SimulateOptions& opt) {
    using namespace fairindex;
    const ModelConfig config = load_model_config(opt.model);
    const std::uint64_t seed = opt.seed.value_or(config.seed);

    const PathSampler sampler(config.model, seed);
    const MarketPath path = sampler.at(opt.path_index);
    const StrategyRule rule = rebalancing_rule(config.fund_weights);
    const GroupHistory h = evolve_along_path(path, config.initial, rule);
    const ValidationReport audit = validate_balance(h, opt.tol);

    if (!opt.out_funds.empty())
        write_file(opt.out_funds, [&](std::ostream& out) { write_funds_csv(out, h); });
    if (!opt.out_prices.empty())
        write_file(opt.out_prices, [&](std::ostream& out) { write_prices_csv(out, *h.market); });
    if (!opt.out_holdings.empty())
        write_file(opt.out_holdings, [&](std::ostream& out) { write_holdings_csv(out, h); });

    if (opt.out_funds.empty() && opt.out_prices.empty() && opt.out_holdings.empty()) {
        // Nothing asked for on disk: the history itself is the output.
        write_funds_csv(std::cout, h);
    } else if (parse_format(opt.format) == Format::Json) {
        emit_json(std::cout, {{"seed", seed},
                              {"path", opt.path_index},
                              {"horizon", config.model.horizon},
                              {"funds", h.n_funds()},
                              {"audit", report_json(audit)}});
    } else {
        std::cout << "seed,path,horizon,funds,max_residual,audit_passed\n"
                  << seed << ',' << opt.path_index << ',' << config.model.horizon << ','
                  << h.n_funds() << ',' << detail::format_double(audit.max_residual) << ','
                  << csv_bool(audit.passed()) << '\n';
    }
    return audit.passed() ? 0 : 3;
}

// --------------------------------------------------------------- fairness

struct FairnessOptions {
    std::string model;
    std::string index; // empty = all three
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::size_t paths = 0; // 0 = exact verification only
    double tol = 1e-9;
};

int cmd_fairness(const FairnessOptions& opt) {
    using namespace fairindex;
    const ModelConfig config = load_model_config(opt.model);
    const std::uint64_t seed = opt.seed.value_or(config.seed);
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    std::vector<IndexKind> kinds;
    if (opt.index.empty())
        kinds = {IndexKind::RA, IndexKind::RPL, IndexKind::RV};
    else
        kinds = {index_kind_from_string(opt.index)};

    const ScenarioTree tree = build_tree(config.model);
    const StrategySpec strategy = rebalancing_spec(tree, config.fund_weights);

    std::vector<FairnessVerdict> verdicts;
    for (IndexKind kind : kinds)
        verdicts.push_back(verify_fairness_exact(tree, config.initial, strategy, kind, opt.tol));
    const UnitRatioReport ratio = verify_unit_ratio_identity(tree, config.initial, strategy);

    std::vector<McFairnessReport> mc;
    if (opt.paths > 0) {
        const StrategyRule rule = rebalancing_rule(config.fund_weights);
        for (IndexKind kind : kinds)
            mc.push_back(
                mc_fairness_test(config.model, config.initial, rule, kind, opt.paths, seed, workers));
    }

    if (parse_format(opt.format) == Format::Json) {
        json doc = {{"nodes", tree.n_nodes()},
                    {"horizon", config.model.horizon},
                    {"tol", opt.tol},
                    {"unit_ratio", report_json(ratio)}};
        for (const auto& v : verdicts) doc["exact"].push_back(report_json(v));
        for (const auto& r : mc) doc["monte_carlo"].push_back(report_json(r));
        if (opt.paths > 0) doc["seed"] = seed;
        emit_json(std::cout, std::move(doc));
        return 0;
    }

    std::cout << "index,classification,max_violation,witness_node\n";
    for (const auto& v : verdicts)
        std::cout << to_string(v.kind) << ',' << to_string(v.classification()) << ','
                  << detail::format_double(v.max_violation()) << ',' << v.witness_node() << '\n';
    std::cout << "\nunit_ratio_max_residual,witness_node\n"
              << detail::format_double(ratio.max_residual) << ',' << ratio.witness_node << '\n';
    if (!mc.empty()) {
        std::cout << "\nindex,paths,seed,max_abs_z\n";
        for (const auto& r : mc)
            std::cout << to_string(r.kind) << ',' << r.n_paths << ',' << r.seed << ','
                      << detail::format_double(r.max_abs_z) << '\n';
    }
    return 0;
}

// ----------------------------------------------------------------- axioms

struct AxiomsOptions {
    std::uint64_t seed = fairindex::AxiomConfig{}.seed;
    int instances = fairindex::AxiomConfig{}.instances;
    std::string format = "csv";
};

int cmd_axioms(const AxiomsOptions& opt) {
    using namespace fairindex;
    AxiomConfig config;
    config.seed = opt.seed;
    config.instances = opt.instances;
    const AxiomReport report = axiom_suite(config);

    if (parse_format(opt.format) == Format::Json) {
        emit_json(std::cout, report_json(report));
    } else {
        std::cout << "property,index,expected_to_hold,held,as_expected,instances,"
                     "worst_residual,worst_stream\n";
        for (const auto& r : report.results)
            std::cout << r.property << ',' << to_string(r.kind) << ','
                      << csv_bool(r.expected_to_hold) << ',' << csv_bool(r.held) << ','
                      << csv_bool(r.as_expected()) << ',' << r.instances << ','
                      << detail::format_double(r.worst_residual) << ',' << r.worst_stream << '\n';
        std::cout << "\nseed,instances,all_as_expected\n"
                  << report.config.seed << ',' << report.config.instances << ','
                  << csv_bool(report.all_as_expected()) << '\n';
    }
    return report.all_as_expected() ? 0 : 3;
}

// ------------------------------------------------------------------- demo

struct DemoCheck {
    std::string name;
    double reference = 0.0;
    double computed = 0.0;
    double tol = 0.0;
    bool pass = false;

    static DemoCheck within(std::string name, double reference, double computed, double tol) {
        DemoCheck c{std::move(name), reference, computed, tol, false};
        c.pass = std::abs(computed - reference) <= tol;
        return c;
    }

    // For checks whose point is a difference bounded away from zero.
    static DemoCheck at_least(std::string name, double reference, double computed, double floor) {
        DemoCheck c{std::move(name), reference, computed, floor, false};
        c.pass = std::abs(computed) >= floor;
        return c;
    }
};

int emit_demo(const std::string& selector, const std::vector<DemoCheck>& checks, Format format) {
    bool all_pass = true;
    for (const auto& c : checks) all_pass = all_pass && c.pass;

    if (format == Format::Json) {
        json rows = json::array();
        for (const auto& c : checks)
            rows.push_back({{"name", c.name},
                            {"reference", c.reference},
                            {"computed", c.computed},
                            {"tol", c.tol},
                            {"pass", c.pass}});
        emit_json(std::cout,
                  {{"demo", selector}, {"checks", std::move(rows)}, {"all_pass", all_pass}});
    } else {
        std::cout << "check,reference,computed,tol,pass\n";
        for (const auto& c : checks)
            std::cout << c.name << ',' << fairindex::detail::format_double(c.reference) << ','
                      << fairindex::detail::format_double(c.computed) << ','
                      << fairindex::detail::format_double(c.tol) << ',' << csv_bool(c.pass)
                      << '\n';
        std::cout << "\nall_pass," << csv_bool(all_pass) << '\n';
    }
    return all_pass ? 0 : 3;
}

std::vector<DemoCheck> demo_merger() {
    using namespace fairindex;
    const GroupHistory h = fixtures::merger_example_history();
    const MergerEvent event = fixtures::merger_example_event();
    const GroupHistory merged = apply_merger(h, event);
    const FundLedger& combined = merged.fund(event.survivor);

    // Reference values: unit value rebased at the event, the pair's
    // asset-weighted return over the period before it, the equal-weight
    // mean that would overstate that return, and the chain-linked index
    // across the event.
    const double naive = 0.5 * (period_return(h.fund(event.absorbed), 0) +
                                period_return(h.fund(event.survivor), 0));
    return {
        DemoCheck::within("post_merger_unit_value", 5.9033333333,
                          combined.post_value_at(event.time), 1e-9),
        DemoCheck::within("combined_pair_period_return", 0.053125,
                          merged_fund_return(h, event.absorbed, event.survivor, 0, event.time),
                          1e-9),
        DemoCheck::within("equal_mean_pair_period_return", 0.0558823529, naive, 1e-9),
        DemoCheck::within("chained_index_0_2", 0.040384, index_ra(merged, 0, 2), 1e-4),
    };
}

std::vector<DemoCheck> demo_grouping() {
    using namespace fairindex;
    const GroupHistory base = fixtures::grouping_example_history();
    const GroupHistory variant = fixtures::grouping_example_history(4.39);
    const GroupingPlan plan = fixtures::grouping_example_plan();

    const GroupedComparison grouped_base = group(base, plan, IndexKind::RPL, 0, 1);
    const GroupedComparison grouped_variant = group(variant, plan, IndexKind::RPL, 0, 1);
    const GroupedComparison grouped_ra = group(base, plan, IndexKind::RA, 0, 1);

    // The endpoint-weighted index moves when funds are grouped; the
    // reference text reports a two-decimal grouped figure (7.48% and
    // 7.47%) that the exact recomputation does not reproduce, so the
    // demo pins the recomputed gap instead and flags the discrepancy.
    return {
        DemoCheck::within("endpoint_weighted_index", 0.062646, index_rpl(base, 0, 1), 5e-5),
        DemoCheck::within("endpoint_weighted_index_variant", 0.087585, index_rpl(variant, 0, 1),
                          5e-5),
        DemoCheck::at_least("grouping_gap_flagged", 0.0, grouped_base.gap, 1e-9),
        DemoCheck::at_least("grouping_gap_variant_flagged", 0.0, grouped_variant.gap, 1e-9),
        DemoCheck::within("chain_linked_grouping_invariant", 0.0, grouped_ra.gap, 1e-12),
    };
}

std::vector<DemoCheck> demo_remark31() {
    using namespace fairindex;
    const BiasDemoResult bias = rpl_bias_demo(fixtures::two_scenario_fund_laws());
    const double start_window = index_value(fixtures::two_scenario_initial(), IndexKind::RPL, 0, 0);

    // With fair one-period pricing the endpoint-weighted index has a
    // strictly positive expectation (reference value 1/198) while the
    // chain-linked index stays centered; over the empty window both
    // are zero by construction.
    return {
        DemoCheck::within("expected_index_empty_window", 0.0, start_window, 0.0),
        DemoCheck::within("expected_endpoint_weighted_bias", 1.0 / 198.0, bias.expected_rpl,
                          1e-12),
        DemoCheck::within("expected_chain_linked_drift", 0.0, bias.expected_ra, 1e-12),
        DemoCheck::within("bias_strictly_positive", 1.0, bias.strict ? 1.0 : 0.0, 0.0),
    };
}

std::vector<DemoCheck> demo_axioms() {
    using namespace fairindex;
    const AxiomReport report = axiom_suite();
    std::vector<DemoCheck> checks;
    for (const auto& r : report.results)
        checks.push_back(DemoCheck::within(r.property + "_" + to_string(r.kind) + "_as_expected",
                                           1.0, r.as_expected() ? 1.0 : 0.0, 0.0));
    return checks;
}

struct DemoOptions {
    std::string selector;
    std::string format = "csv";
};

int cmd_demo(const DemoOptions& opt) {
    const Format format = parse_format(opt.format);
    if (opt.selector == "merger") return emit_demo(opt.selector, demo_merger(), format);
    if (opt.selector == "grouping") return emit_demo(opt.selector, demo_grouping(), format);
    if (opt.selector == "remark31") return emit_demo(opt.selector, demo_remark31(), format);
    if (opt.selector == "axioms") return emit_demo(opt.selector, demo_axioms(), format);
    throw fairindex::ParseError("unknown demo '" + opt.selector +
                                "' (expected merger, grouping, remark31 or axioms)");
}

// ------------------------------------------------------------------- main

void add_format_option(CLI::App* app, std::string& target) {
    app->add_option("--format", target, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fund group return indexes: computation, audit and fairness checks"};
    app.require_subcommand(1);

    ComputeOptions compute;
    CLI::App* c = app.add_subcommand("compute", "Compute an index over a window");
    c->add_option("--funds", compute.funds, "Funds CSV")->required();
    c->add_option("--prices", compute.prices, "Asset prices CSV");
    c->add_option("--holdings", compute.holdings, "Holdings CSV");
    c->add_option("--mergers", compute.mergers, "Merger events CSV, folded in before computing");
    c->add_option("--index", compute.index, "Index kind: ra, rpl or rv")
        ->check(CLI::IsMember({"ra", "rpl", "rv"}));
    c->add_option("--from", compute.from, "Window start (default 0)");
    c->add_option("--to", compute.to, "Window end (default last time)");
    c->add_flag("--decompose", compute.decompose, "Print the per-period breakdown (ra only)");
    add_format_option(c, compute.format);

    ValidateOptions validate;
    CLI::App* v = app.add_subcommand("validate", "Audit a history against balance identities");
    v->add_option("--funds", validate.funds, "Funds CSV")->required();
    v->add_option("--prices", validate.prices, "Asset prices CSV");
    v->add_option("--holdings", validate.holdings, "Holdings CSV");
    v->add_option("--mergers", validate.mergers, "Merger events CSV, folded in before auditing");
    v->add_option("--tol", validate.tol, "Residual tolerance (default 1e-9)")
        ->check(CLI::PositiveNumber);
    v->add_flag("--full", validate.full, "Require every identity, not just the recorded ones");
    add_format_option(v, validate.format);

    MergeOptions merge;
    CLI::App* m = app.add_subcommand("merge", "Fold mergers into a funds CSV");
    m->add_option("--funds", merge.funds, "Funds CSV")->required();
    m->add_option("--mergers", merge.mergers, "Merger events CSV")->required();
    m->add_option("--output", merge.output, "Output path (default stdout)");

    SimulateOptions simulate;
    CLI::App* s = app.add_subcommand("simulate", "Evolve the strategy along one sampled path");
    s->add_option("--model", simulate.model, "Scenario model JSON")->required();
    s->add_option("--seed", simulate.seed, "Sampling seed (default from the model file)");
    s->add_option("--path", simulate.path_index, "Path index under the seed (default 0)");
    s->add_option("--out-funds", simulate.out_funds, "Write the evolved funds CSV here");
    s->add_option("--out-prices", simulate.out_prices, "Write the sampled prices CSV here");
    s->add_option("--out-holdings", simulate.out_holdings, "Write the holdings CSV here");
    s->add_option("--tol", simulate.tol, "Audit tolerance (default 1e-9)")
        ->check(CLI::PositiveNumber);
    add_format_option(s, simulate.format);

    FairnessOptions fairness;
    CLI::App* f = app.add_subcommand("fairness", "Drift verdicts on a scenario model");
    f->add_option("--model", fairness.model, "Scenario model JSON")->required();
    f->add_option("--index", fairness.index, "Restrict to one index kind")
        ->check(CLI::IsMember({"ra", "rpl", "rv"}));
    f->add_option("--seed", fairness.seed, "Monte Carlo seed (default from the model file)");
    f->add_option("--paths", fairness.paths,
                  "Monte Carlo paths on top of the exact verdicts (default 0 = exact only)");
    f->add_option("--tol", fairness.tol, "Drift tolerance for the exact verdicts")
        ->check(CLI::PositiveNumber);
    add_format_option(f, fairness.format);

    AxiomsOptions axioms;
    CLI::App* a = app.add_subcommand("axioms", "Randomized property suite for the indexes");
    a->add_option("--seed", axioms.seed, "Base seed for the generated instances");
    a->add_option("--instances", axioms.instances, "Instances per property")
        ->check(CLI::PositiveNumber);
    add_format_option(a, axioms.format);

    DemoOptions demo;
    CLI::App* d = app.add_subcommand("demo", "Worked examples checked against reference values");
    d->add_option("selector", demo.selector, "One of: merger, grouping, remark31, axioms")
        ->required();
    add_format_option(d, demo.format);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11's own exit codes are folded into the stable contract:
        // 0 for --help, 2 for any usage error.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c) return cmd_compute(compute);
        if (*v) return cmd_validate(validate);
        if (*m) return cmd_merge(merge);
        if (*s) return cmd_simulate(simulate);
        if (*f) return cmd_fairness(fairness);
        if (*a) return cmd_axioms(axioms);
        if (*d) return cmd_demo(demo);
    } catch (const fairindex::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fairindex::MissingDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fairindex::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
