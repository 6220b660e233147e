#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spdemil/errors.hpp"
#include "spdemil/harness.hpp"

using namespace spdemil;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c = default_config(false);
    c.ladder = {2, 4, 8};
    c.reference.M = 1024;
    c.paths = 20;
    c.batches = 10;
    c.threads = 1;
    return c;
}

std::string csv(const ExperimentResult& r) {
    std::ostringstream s;
    write_rows_csv(s, r.rows);
    return s.str();
}

ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", 0, 0);
}

}  // namespace

TEST_CASE("config parsing") {
    const std::string text = R"({
  "problem": {"family": "example", "epsilon": 0.001, "p": 4},
  "schemes": ["MIL1", "EES"],
  "ladder": [4, 2],
  "reference": {"scheme": "LIE", "N": 16, "K": 2, "M": 4096},
  "paths": 12,
  "batches": 4,
  "seed": 99,
  "threads": 2,
  "error": "sup-grid",
  "d_order": 0.75,
  "truncation": "eigenvalue",
  "max_normal_draws": 1e9,
  "output": "somewhere"
})";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.epsilon == 0.001);
    CHECK(c.schemes == std::vector<SchemeKind>{SchemeKind::MIL1, SchemeKind::EES});
    CHECK(c.ladder == std::vector<std::size_t>{4, 2});
    CHECK(c.reference.N == 16);
    CHECK(c.reference.K == 2);
    CHECK(c.reference.M == 4096);
    CHECK(c.paths == 12);
    CHECK(c.batches == 4);
    CHECK(c.seed == 99);
    CHECK(c.threads == 2);
    CHECK(c.error == ErrorFunctional::SupGrid);
    CHECK(c.d_order == 0.75);
    CHECK(c.truncation == TruncationRule::EigenvalueBased);
    CHECK(c.max_normal_draws == 1e9);
    CHECK(c.output == "somewhere");

    const ExperimentConfig d = parse_config("{}");
    CHECK(d.ladder == std::vector<std::size_t>{2, 4, 8, 16});
    CHECK(d.reference.M == 16384);
    const ExperimentConfig f = parse_config("{}", true);
    CHECK(f.ladder.back() == 32);
    CHECK(f.reference.M == 65536);

    const ExperimentConfig r = parse_config(R"({"resolutions": [{"scheme": "MIL2", "N": 4, "M": 16, "K": 2, "D": 3}]})");
    REQUIRE(r.resolutions.size() == 1);
    CHECK(r.resolutions[0].scheme == SchemeKind::MIL2);
    CHECK(*r.resolutions[0].D == 3);
}

TEST_CASE("config errors carry line and column") {
    ConfigError e = config_error("{\n  \"paths\": 10,\n  \"bogus\": 1\n}");
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);

    e = config_error("{\n  \"problem\": {\n    \"family\": \"example\",\n    \"sigma\": 2\n  }\n}");
    CHECK(e.line() == 4);
    CHECK(e.column() == 5);

    e = config_error("{\n  \"paths\": \"many\"\n}");
    CHECK(e.line() == 2);
    CHECK(e.column() == 12);

    e = config_error("{\n  \"ladder\": [2, 4, -8]\n}");
    CHECK(e.line() == 2);
    CHECK(e.column() == 20);

    e = config_error("{\n  \"paths\": 10,,\n}");
    CHECK(e.line() == 2);

    e = config_error("{\n  \"schemes\": [\"MIL3\"]\n}");
    CHECK(e.line() == 2);
    CHECK(e.column() == 15);

    e = config_error("{\"resolutions\": [{\"scheme\": \"EES\", \"N\": 2, \"K\": 1}]}");
    CHECK(std::string(e.what()).find("'M'") != std::string::npos);

    e = config_error("{\"error\": \"mean\"}");
    CHECK(e.column() == 11);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("plan rows") {
    const ExperimentConfig c = default_config(false);
    const auto rows = plan_rows(c);
    REQUIRE(rows.size() == 12);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].N <= rows[i].N);
    CHECK(rows[0].scheme == SchemeKind::MIL1);
    CHECK(rows[0].M == 4);
    CHECK(rows[0].K == 2);
    CHECK(*rows[0].D == 4);
    CHECK(rows[1].scheme == SchemeKind::MIL2);
    CHECK(*rows[1].D == 4);
    CHECK(rows[2].scheme == SchemeKind::EES);
    CHECK(rows[2].M == 16);
    CHECK(rows[11].M == 65536);
    CHECK(rows[11].K == 3);
    CHECK(*rows[9].D == 256);
    CHECK(*rows[10].D == 68);  // ceil(16 * 3 sqrt 2)
}

TEST_CASE("experiment runs are reproducible and coupled") {
    const ExperimentConfig c = small_config();
    const ExperimentResult a = run_experiment(c);
    CHECK(a.coupling_verified);
    CHECK(a.M_fine == 4096);  // lcm with the EES grid at N = 8
    REQUIRE(a.rows.size() == 9);
    for (const ExperimentRow& r : a.rows) {
        CHECK(r.error > 0.0);
        CHECK(r.std > 0.0);
        CHECK(r.std_path > 0.0);
        if (r.scheme == SchemeKind::MIL1) CHECK(r.normals_per_step == r.K * (1 + 2 * r.D));
        if (r.scheme == SchemeKind::MIL2) CHECK(r.normals_per_step == r.K * (1 + 2 * r.D) + r.K * (r.K - 1) / 2);
        if (r.scheme == SchemeKind::EES) CHECK(r.normals_per_step == r.K);
    }
    CHECK(a.rows[0].level == a.rows[1].level);
    CHECK(a.rows[0].level != a.rows[2].level);

    ExperimentConfig threaded = c;
    threaded.threads = 3;
    const ExperimentResult b = run_experiment(threaded);
    CHECK(csv(a) == csv(b));
    CHECK(csv(run_experiment(c)) == csv(a));

    ExperimentConfig other = c;
    other.seed = c.seed + 1;
    CHECK(csv(run_experiment(other)) != csv(a));
}

TEST_CASE("self comparison and error functionals") {
    ExperimentConfig c = small_config();
    c.resolutions = {{SchemeKind::LIE, 32, 1024, 3, std::nullopt}, {SchemeKind::EES, 4, 256, 2, std::nullopt}};
    const ExperimentResult r = run_experiment(c);
    CHECK(r.rows[1].N == 32);
    CHECK(r.rows[1].error == 0.0);

    c.error = ErrorFunctional::SupGrid;
    const ExperimentResult s = run_experiment(c);
    CHECK(s.rows[1].error == 0.0);
    CHECK(s.rows[0].error >= r.rows[0].error);
}

TEST_CASE("statistical stability") {
    ExperimentConfig c = small_config();
    c.paths = 40;
    c.batches = 20;
    const ExperimentResult a = run_experiment(c);
    c.paths = 80;
    const ExperimentResult b = run_experiment(c);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(std::abs(a.rows[i].error - b.rows[i].error) < 3.0 * std::max(a.rows[i].std, b.rows[i].std));
    }
    // Errors shrink down the ladder.
    for (SchemeKind k : {SchemeKind::MIL1, SchemeKind::MIL2, SchemeKind::EES}) {
        const auto rows = rows_of(b.rows, k);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].error < rows[i - 1].error);
    }
}

TEST_CASE("resource guard and bad configs") {
    ExperimentConfig c = small_config();
    c.max_normal_draws = 1000.0;
    CHECK(predict_normal_draws(c) > 1000.0);
    CHECK_THROWS_AS(run_experiment(c), ResourceLimitExceeded);

    ExperimentConfig z = small_config();
    z.paths = 0;
    CHECK_THROWS_AS(run_experiment(z), InvalidArgument);
}

TEST_CASE("fit_eoc") {
    std::vector<ExperimentRow> rows;
    for (double cost : {1e2, 1e3, 1e4, 1e5}) {
        ExperimentRow r;
        r.scheme = SchemeKind::MIL1;
        r.cost_caption = cost;
        r.error = std::pow(cost, -7.0 / 15.0);
        rows.push_back(r);
    }
    const EocFit exact = fit_eoc(rows);
    CHECK(exact.slope == doctest::Approx(-7.0 / 15.0).epsilon(1e-12));
    CHECK(exact.finest_slope == doctest::Approx(-7.0 / 15.0).epsilon(1e-12));

    auto two = [](double c1, double e1, double c2, double e2) {
        std::vector<ExperimentRow> r(2);
        r[0].cost_caption = c1;
        r[0].error = e1;
        r[1].cost_caption = c2;
        r[1].error = e2;
        return fit_eoc(r).finest_slope;
    };
    CHECK(two(393216, 6.3e-3, 6291456, 1.6e-3) == doctest::Approx(std::log(1.6 / 6.3) / std::log(16.0)).epsilon(1e-12));
    CHECK(two(393216, 6.3e-3, 6291456, 1.6e-3) == doctest::Approx(-0.494).epsilon(0.002));
    CHECK(two(3145728, 6.1e-3, 100663296, 1.5e-3) == doctest::Approx(-0.405).epsilon(0.002));

    rows[1].cost_caption = rows[0].cost_caption = rows[2].cost_caption = rows[3].cost_caption;
    CHECK_THROWS_AS(fit_eoc(rows), InvalidArgument);
    CHECK_THROWS_AS(fit_eoc({rows[0]}), InvalidArgument);
}

TEST_CASE("artifacts") {
    ExperimentConfig c = small_config();
    c.ladder = {2};
    c.output = (std::filesystem::temp_directory_path() / "spdemil_harness_test").string();
    std::filesystem::remove_all(c.output);
    const ExperimentResult r = run_experiment(c);
    write_outputs(c, r);

    std::ifstream rows(c.output + "/rows.csv");
    std::string header, first;
    std::getline(rows, header);
    std::getline(rows, first);
    CHECK(header == "scheme,N,M,K,D,cost_caption,cost_primitives,error,std");
    CHECK(first.rfind("MIL1,2,4,2,4,96,128,", 0) == 0);

    std::ifstream plot(c.output + "/plot.csv");
    std::getline(plot, header);
    CHECK(header == "scheme,cost,error");

    std::ifstream m(c.output + "/manifest.json");
    const nlohmann::json manifest = nlohmann::json::parse(m);
    CHECK(manifest["seed"] == c.seed);
    CHECK(manifest["rows"].size() == 3);
    CHECK(manifest["rows"][0]["D"] == 4);
    CHECK(manifest["coupling_verified"] == true);
    CHECK(!manifest.contains("total_seconds"));

    std::ifstream t(c.output + "/timing.json");
    const nlohmann::json timing = nlohmann::json::parse(t);
    CHECK(timing.contains("total_seconds"));

    std::ostringstream table;
    write_table(table, r.rows);
    CHECK(table.str().find("MIL1 cost") != std::string::npos);
    std::filesystem::remove_all(c.output);
}
