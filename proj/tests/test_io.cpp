#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "riskshare/io.hpp"
#include "riskshare/rules.hpp"

using namespace riskshare;
using nlohmann::json;

namespace {

Pool parse(const std::string& text) {
    std::istringstream in(text);
    return read_pool_csv(in);
}

const char* EXAMPLE_CSV =
    "prob,X1,X2\n"
    "0.5,0,2\n"
    "0.25,4,2\n"
    "0.25,8,2\n";

}  // namespace

TEST_CASE("pool CSV happy path") {
    const Pool pool = parse(EXAMPLE_CSV);
    CHECK(pool.participants() == 2);
    CHECK(pool.atoms() == 3);
    CHECK(pool.space().weight(0) == 0.5);
    CHECK(pool.losses().at(0, 2) == 8);
    CHECK(pool.losses().at(1, 0) == 2);

    SUBCASE("blank lines and surrounding spaces are tolerated") {
        const Pool spaced = parse("prob, X1 ,X2\n\n 0.5 ,0,2\n0.25,4,2\n\n0.25,8,2\n");
        CHECK(spaced.losses() == pool.losses());
    }
    SUBCASE("slightly-off probability sums are renormalized") {
        const Pool p = parse("prob,X1\n0.5000000001,1\n0.4999999999,2\n");
        const auto& w = p.space().weights();
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("pool CSV diagnostics cite the file row") {
    // Wrong header.
    CHECK_THROWS_WITH_AS(parse("p,X1\n1,2\n"),
                         doctest::Contains("header"), CsvError);
    // Ragged data row (file row 3).
    CHECK_THROWS_WITH_AS(parse("prob,X1,X2\n0.5,1,2\n0.5,1\n"),
                         doctest::Contains("row 3"), CsvError);
    // Negative loss.
    CHECK_THROWS_WITH_AS(parse("prob,X1\n0.5,-1\n0.5,2\n"),
                         doctest::Contains("X1"), CsvError);
    // Nonpositive probability.
    CHECK_THROWS_AS(parse("prob,X1\n0,1\n1,2\n"), CsvError);
    // Probabilities failing the 1e-9 sum gate.
    CHECK_THROWS_WITH_AS(parse("prob,X1\n0.6,1\n0.3,2\n"),
                         doctest::Contains("sum"), CsvError);
    // Unparseable number.
    CHECK_THROWS_AS(parse("prob,X1\n0.5,abc\n0.5,2\n"), CsvError);
    // Missing data rows.
    CHECK_THROWS_AS(parse("prob,X1\n"), CsvError);
    CHECK_THROWS_AS(parse(""), CsvError);
    // Unreadable file path.
    CHECK_THROWS_AS(read_pool_csv_file("/nonexistent/pool.csv"), CsvError);
}

TEST_CASE("contribution CSV re-read sums to the aggregate column") {
    const Pool pool = parse(EXAMPLE_CSV);
    const auto c = apply(RuleSpec::mean_proportional(), pool);
    const std::string text = contributions_csv(pool, c);

    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    CHECK(line == "prob,S,C1,C2");

    std::size_t atom = 0;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
        REQUIRE(row.size() == 4);
        // Shortest-round-trip rendering: values survive parsing bit for bit.
        CHECK(row[0] == pool.space().weight(atom));
        CHECK(row[2] == c.at(0, atom));
        CHECK(row[3] == c.at(1, atom));
        CHECK(std::abs(row[2] + row[3] - row[1]) <= 1e-9);
        ++atom;
    }
    CHECK(atom == pool.atoms());
}

TEST_CASE("rule spec strings") {
    CHECK(parse_rule_spec("uniform").id() == "uniform");
    CHECK(parse_rule_spec("mean_prop").id() == "mean_prop");
    CHECK(parse_rule_spec("cov_lin").id() == "cov_lin");
    CHECK(parse_rule_spec("var_lin").id() == "var_lin");
    CHECK(parse_rule_spec("cond_mean").id() == "cond_mean");
    CHECK(parse_rule_spec("order_stat").id() == "order_stat");
    CHECK(parse_rule_spec("all_in_one").id() == "all_in_one");
    CHECK(parse_rule_spec("stand_alone").id() == "stand_alone");
    CHECK(parse_rule_spec("q_prop(sd)").id() == "q_prop(sd)");
    CHECK(parse_rule_spec("q_prop(mean)").id() == "mean_prop");
    CHECK(parse_rule_spec("hybrid(scenario:0)").id() == "hybrid(scenario:0)");
    CHECK(parse_rule_spec("w_q_prop(mean;1,2)").id() == "w_q_prop(mean;w=1,2)");
    CHECK(parse_rule_spec("q1q2_lin(mean,cov)").id() == "q1q2_lin(mean,cov)");
    CHECK(parse_rule_spec("q1q2_lin(mean,scenario_range:2,0)").id() ==
          "q1q2_lin(mean,scenario_range:2,0)");
    CHECK(parse_rule_spec("scen_prop(1)").id() == "scen_prop(1)");
    CHECK(parse_rule_spec("scen_lin(0,2,1)").id() == "scen_lin(0,2,1)");

    SUBCASE("canonical ids round-trip") {
        for (const char* spec :
             {"uniform", "mean_prop", "q_prop(var)", "w_q_prop(mean;w=1,2)",
              "q1q2_lin(mean,cov)", "scen_prop(0)", "scen_lin(0,2,1)", "cov_lin", "var_lin",
              "cond_mean", "order_stat", "all_in_one", "stand_alone", "hybrid(mean)"}) {
            CAPTURE(spec);
            CHECK(parse_rule_spec(parse_rule_spec(spec).id()).id() ==
                  parse_rule_spec(spec).id());
        }
    }
    SUBCASE("malformed specs are rejected") {
        CHECK_THROWS_AS(parse_rule_spec("nope"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("uniform(3)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("q_prop(mean"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("q_prop(bogus)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("w_q_prop(mean)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("w_q_prop(mean;1,-2)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("q1q2_lin(mean)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("scen_lin(0,2)"), ConfigError);
        CHECK_THROWS_AS(parse_rule_spec("scen_lin(0,2,x)"), ConfigError);
    }
}

TEST_CASE("make_rule assembles rules from CLI-style pieces") {
    CHECK(make_rule("uniform", {}, {}, {}, {}, {}, DegeneratePolicy::Error).id() == "uniform");
    CHECK(make_rule("q_prop", std::string("var"), {}, {}, {}, {}, DegeneratePolicy::Error)
              .id() == "q_prop(var)");
    CHECK(make_rule("q1q2_lin", {}, std::string("mean"), std::string("cov"), {}, {},
                    DegeneratePolicy::Error)
              .id() == "q1q2_lin(mean,cov)");
    CHECK(make_rule("scen_prop", {}, {}, {}, {1}, {}, DegeneratePolicy::Error).id() ==
          "scen_prop(1)");
    CHECK(make_rule("scen_lin", {}, {}, {}, {0, 2, 1}, {}, DegeneratePolicy::Error).id() ==
          "scen_lin(0,2,1)");
    CHECK(make_rule("w_q_prop", std::string("mean"), {}, {}, {}, {1, 2},
                    DegeneratePolicy::Error)
              .id() == "w_q_prop(mean;w=1,2)");
    CHECK(make_rule("hybrid", std::string("mean"), {}, {}, {}, {}, DegeneratePolicy::Error)
              .id() == "hybrid(mean)");

    SUBCASE("policy flows through") {
        const auto rule =
            make_rule("cov_lin", {}, {}, {}, {}, {}, DegeneratePolicy::UniformFallback);
        CHECK(rule.policy() == DegeneratePolicy::UniformFallback);
    }
    SUBCASE("parenthesized specs pass through") {
        CHECK(make_rule("q_prop(sd)", {}, {}, {}, {}, {}, DegeneratePolicy::Error).id() ==
              "q_prop(sd)");
    }
    SUBCASE("missing pieces are reported") {
        CHECK_THROWS_AS(make_rule("q_prop", {}, {}, {}, {}, {}, DegeneratePolicy::Error),
                        ConfigError);
        CHECK_THROWS_AS(make_rule("q1q2_lin", {}, std::string("mean"), {}, {}, {},
                                  DegeneratePolicy::Error),
                        ConfigError);
        CHECK_THROWS_AS(make_rule("scen_lin", {}, {}, {}, {0}, {}, DegeneratePolicy::Error),
                        ConfigError);
        CHECK_THROWS_AS(make_rule("scen_prop", {}, {}, {}, {}, {}, DegeneratePolicy::Error),
                        ConfigError);
    }
}

TEST_CASE("name parsers") {
    CHECK(parse_property("reshuffling") == PropertyKind::Reshuffling);
    CHECK(parse_property("strongly_aggregate_q_ratio") == PropertyKind::StronglyAggregateQRatio);
    CHECK_THROWS_AS(parse_property("nope"), ConfigError);

    CHECK(parse_theorem("T3") == TheoremId::T3);
    CHECK(parse_theorem("t6") == TheoremId::T6);
    CHECK_THROWS_AS(parse_theorem("T7"), ConfigError);

    CHECK(parse_policy("error") == DegeneratePolicy::Error);
    CHECK(parse_policy("uniform") == DegeneratePolicy::UniformFallback);
    CHECK_THROWS_AS(parse_policy("maybe"), ConfigError);
}

TEST_CASE("run config parsing") {
    SUBCASE("full config") {
        const json j = json::parse(R"({
            "rule": "q1q2_lin",
            "q1": "mean",
            "q2": "cov",
            "degenerate": "uniform",
            "seed": 7,
            "tol_abs": 1e-8,
            "tol_rel": 1e-8,
            "battery": {"participants": 4, "atoms": 5, "random_pools": 2, "loss_scale": 10.0},
            "properties": ["reshuffling", "source_anonymous"],
            "theorems": ["T5"],
            "format": "both"
        })");
        const RunConfig config = parse_config(j);
        CHECK(config.seed == 7);
        CHECK(config.tol.abs == 1e-8);
        CHECK(config.battery.participants == 4);
        CHECK(config.battery.loss_scale == 10.0);
        CHECK(config.properties.size() == 2);
        CHECK(config.theorems == std::vector<std::string>{"T5"});
        CHECK(config.format == "both");
        CHECK(config.degenerate == DegeneratePolicy::UniformFallback);
        CHECK(config_rule(config).id() == "q1q2_lin(mean,cov)");
    }
    SUBCASE("defaults") {
        const RunConfig config = parse_config(json::object());
        CHECK(config.seed == 0);
        CHECK(config.tol.abs == 1e-9);
        CHECK(config.battery.participants == 3);
        CHECK(config.format == "json");
        CHECK_THROWS_AS(config_rule(config), ConfigError);  // no rule named
    }
    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"rulez": "uniform"})")),
                             doctest::Contains("rulez"), ConfigError);
        CHECK_THROWS_AS(parse_config(json::parse(R"({"battery": {"atom": 3}})")), ConfigError);
    }
    SUBCASE("invalid values are rejected") {
        CHECK_THROWS_AS(parse_config(json::parse(R"({"tol_abs": -1})")), ConfigError);
        CHECK_THROWS_AS(parse_config(json::parse(R"({"format": "xml"})")), ConfigError);
        CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": "abc"})")), ConfigError);
        CHECK_THROWS_AS(parse_config(json::parse(R"([1,2])")), ConfigError);
    }
    SUBCASE("load_config reads a file") {
        const std::string path = "riskshare_test_config.json";
        {
            std::ofstream out(path);
            out << R"({"rule": "uniform", "seed": 3})";
        }
        const RunConfig config = load_config(path);
        CHECK(config.seed == 3);
        CHECK(config_rule(config).id() == "uniform");
        std::remove(path.c_str());
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    }
}
