// End-to-end checks of the findex binary: subcommand output, the CSV
// and JSON report shapes, and the stable exit codes (0 success, 2 input
// error, 3 domain error or failed checks). Fixtures are generated into
// a scratch directory with the library's own writers.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "fairindex/fairindex.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "findex_cli_scratch";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path_of(const std::string& name) { return (work_dir() / name).string(); }

void write_text(const std::string& name, const std::string& content) {
    std::ofstream out(path_of(name));
    REQUIRE(out.good());
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args) {
    const std::string out_path = path_of("last_stdout.txt");
    const std::string err_path = path_of("last_stderr.txt");
    const std::string cmd =
        std::string(FINDEX_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

// Fields of the first data row (the line after the header).
std::vector<std::string> first_data_row(const std::string& out) {
    std::istringstream in(out);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(std::getline(in, line));
    return split_csv_line(line);
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

// Written once; every test reuses them.
void write_fixtures() {
    static const bool done = [] {
        using namespace fairindex;
        {
            std::ofstream out(path_of("merger_funds.csv"));
            write_funds_csv(out, fixtures::merger_example_history());
        }
        {
            std::ofstream out(path_of("mergers.csv"));
            write_mergers_csv(out, {fixtures::merger_example_event()});
        }
        {
            std::ofstream out(path_of("grouping_funds.csv"));
            write_funds_csv(out, fixtures::grouping_example_history());
        }
        write_text("model.json", R"({
  "horizon": 2,
  "seed": 7,
  "n_paths": 1000,
  "assets": [
    {"id": "A", "initial_price": 1.0, "factors": [1.2, 0.8], "probabilities": [0.5, 0.5]},
    {"id": "B", "initial_price": 1.0, "factors": [1.0], "probabilities": [1.0]}
  ],
  "funds": [
    {"id": "F1", "units": 100.0, "unit_value": 1.0, "weights": [1.0, 0.0]},
    {"id": "F2", "units": 100.0, "unit_value": 1.0, "weights": [0.0, 1.0]}
  ]
})");
        write_text("model_bad.json", R"({"seed": 3})");
        write_text("funds_bad.csv", "time,fund_id,stuff\n0,F1,1\n");
        write_text("funds_corrupt.csv",
                   "time,fund_id,units,unit_value,net_flow\n"
                   "0,F1,100,1,\n"
                   "0,F2,100,1,\n"
                   "1,F1,110,1,999\n"
                   "1,F2,100,1.05,0\n");
        return true;
    }();
    (void)done;
}

} // namespace

TEST_CASE("compute folds mergers and chains across the event") {
    write_fixtures();
    const RunResult r = run("compute --funds " + path_of("merger_funds.csv") + " --mergers " +
                            path_of("mergers.csv") + " --index ra");
    REQUIRE(r.exit_code == 0);
    const auto row = first_data_row(r.out);
    REQUIRE(row.size() == 5);
    CHECK(row[0] == "ra");
    CHECK(row[1] == "0");
    CHECK(row[2] == "2");
    CHECK(std::stod(row[3]) == Catch::Approx(0.04029808).margin(1e-6));
    CHECK(row[4] == "4.03%");
}

TEST_CASE("compute over an empty window is zero") {
    write_fixtures();
    const RunResult r = run("compute --funds " + path_of("merger_funds.csv") + " --mergers " +
                            path_of("mergers.csv") + " --from 1 --to 1");
    REQUIRE(r.exit_code == 0);
    CHECK(std::stod(first_data_row(r.out)[3]) == 0.0);
}

TEST_CASE("compute emits a schema-tagged JSON report") {
    write_fixtures();
    const RunResult r = run("compute --funds " + path_of("grouping_funds.csv") +
                            " --index rpl --format json");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("schema").get<int>() == 1);
    CHECK(doc.at("index").get<std::string>() == "rpl");
    CHECK(doc.at("result").at("value").get<double>() == Catch::Approx(0.062646).margin(5e-5));
    CHECK(contains(doc.at("result").at("percent").get<std::string>(), "%"));
}

TEST_CASE("compute decomposition prints the per-period table") {
    write_fixtures();
    const RunResult r = run("compute --funds " + path_of("merger_funds.csv") + " --mergers " +
                            path_of("mergers.csv") + " --decompose");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "period_start,period_end,mean,chained"));

    const RunResult bad = run("compute --funds " + path_of("grouping_funds.csv") +
                              " --index rpl --decompose");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("compute maps domain refusals to exit 3") {
    write_fixtures();
    // The value-weighted geometric index refuses windows crossing a merger.
    const RunResult rv = run("compute --funds " + path_of("merger_funds.csv") + " --mergers " +
                             path_of("mergers.csv") + " --index rv");
    CHECK(rv.exit_code == 3);
    CHECK(!rv.err.empty());

    // A ragged history without the merger events folded in cannot be indexed.
    const RunResult ragged = run("compute --funds " + path_of("merger_funds.csv"));
    CHECK(ragged.exit_code == 3);
}

TEST_CASE("input failures exit with the input error code") {
    write_fixtures();
    CHECK(run("compute --funds " + path_of("does_not_exist.csv")).exit_code == 2);
    CHECK(run("compute --funds " + path_of("funds_bad.csv")).exit_code == 2);
    CHECK(run("simulate --model " + path_of("model_bad.json")).exit_code == 2);
    CHECK(run("simulate --model " + path_of("does_not_exist.json")).exit_code == 2);
}

TEST_CASE("usage errors and help follow the exit contract") {
    write_fixtures();
    CHECK(run("--help").exit_code == 0);
    CHECK(run("compute --help").exit_code == 0);
    CHECK(run("").exit_code == 2);
    CHECK(run("compute").exit_code == 2);
    CHECK(run("compute --funds x.csv --index bogus").exit_code == 2);
    CHECK(run("demo unknown_example").exit_code == 2);
}

TEST_CASE("validate passes clean data and flags corruption") {
    write_fixtures();
    const RunResult ok = run("validate --funds " + path_of("grouping_funds.csv"));
    REQUIRE(ok.exit_code == 0);
    CHECK(contains(ok.out, ",true"));

    const RunResult bad = run("validate --funds " + path_of("funds_corrupt.csv"));
    REQUIRE(bad.exit_code == 3);
    CHECK(contains(bad.out, "aggregate_flow"));
    CHECK(contains(bad.out, "false"));
}

TEST_CASE("full validation without the backing data exits as missing input") {
    write_fixtures();
    const RunResult r = run("validate --funds " + path_of("grouping_funds.csv") + " --full");
    CHECK(r.exit_code == 2);
    CHECK(!r.err.empty());
}

TEST_CASE("merge writes a history that recomputes identically") {
    write_fixtures();
    const RunResult m = run("merge --funds " + path_of("merger_funds.csv") + " --mergers " +
                            path_of("mergers.csv") + " --output " + path_of("merged.csv"));
    REQUIRE(m.exit_code == 0);
    CHECK(contains(slurp(path_of("merged.csv")), "post_units"));

    const RunResult c = run("compute --funds " + path_of("merged.csv") + " --index ra");
    REQUIRE(c.exit_code == 0);
    CHECK(std::stod(first_data_row(c.out)[3]) == Catch::Approx(0.04029808).margin(1e-6));
}

TEST_CASE("simulate writes files that pass a full audit and repeat exactly") {
    write_fixtures();
    const std::string outs = " --out-funds " + path_of("sim_funds.csv") + " --out-prices " +
                             path_of("sim_prices.csv") + " --out-holdings " +
                             path_of("sim_holdings.csv");
    const RunResult s = run("simulate --model " + path_of("model.json") + " --seed 11" + outs);
    REQUIRE(s.exit_code == 0);
    const auto row = first_data_row(s.out);
    REQUIRE(row.size() == 6);
    CHECK(row[0] == "11");
    CHECK(row[5] == "true");

    const RunResult v = run("validate --funds " + path_of("sim_funds.csv") + " --prices " +
                            path_of("sim_prices.csv") + " --holdings " +
                            path_of("sim_holdings.csv") + " --full");
    CHECK(v.exit_code == 0);

    const std::string funds_first = slurp(path_of("sim_funds.csv"));
    const RunResult again = run("simulate --model " + path_of("model.json") + " --seed 11" + outs);
    REQUIRE(again.exit_code == 0);
    CHECK(slurp(path_of("sim_funds.csv")) == funds_first);

    // No output paths: the evolved funds CSV goes to stdout.
    const RunResult plain = run("simulate --model " + path_of("model.json") + " --seed 11");
    REQUIRE(plain.exit_code == 0);
    CHECK(contains(plain.out, "time,fund_id,units,unit_value"));
}

TEST_CASE("fairness reports the three verdicts for a fair model") {
    write_fixtures();
    const RunResult r = run("fairness --model " + path_of("model.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "ra,martingale"));
    CHECK(contains(r.out, "rpl,submartingale"));
    CHECK(contains(r.out, "rv,supermartingale"));
    CHECK(contains(r.out, "unit_ratio_max_residual"));

    const RunResult mc = run("fairness --model " + path_of("model.json") +
                             " --paths 400 --format json");
    REQUIRE(mc.exit_code == 0);
    const json doc = json::parse(mc.out);
    CHECK(doc.at("schema").get<int>() == 1);
    CHECK(doc.at("exact").size() == 3);
    CHECK(doc.at("monte_carlo").size() == 3);
    CHECK(doc.at("exact")[0].at("verdict").get<std::string>() == "martingale");
}

TEST_CASE("axiom suite runs clean through the front end") {
    write_fixtures();
    const RunResult r = run("axioms --format json");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("all_as_expected").get<bool>());
    CHECK(doc.at("results").size() == 11);
}

TEST_CASE("every demo passes its reference checks") {
    write_fixtures();
    for (const std::string selector : {"merger", "grouping", "remark31", "axioms"}) {
        const RunResult r = run("demo " + selector);
        INFO("demo " << selector << "\n" << r.out << r.err);
        REQUIRE(r.exit_code == 0);
        CHECK(contains(r.out, "all_pass,true"));
    }

    const RunResult j = run("demo merger --format json");
    REQUIRE(j.exit_code == 0);
    const json doc = json::parse(j.out);
    CHECK(doc.at("all_pass").get<bool>());
    CHECK(doc.at("checks").size() == 4);
}
