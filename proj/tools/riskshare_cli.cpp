// Command line front end: compute contributions for a pool, check properties,
// classify the standard rules, or run the characterization harness.
//
// Exit codes: 0 ok, 1 input error, 2 degenerate pool under the error policy,
// 3 classification/theorem outcome differs from the expected pattern.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riskshare/axioms.hpp"
#include "riskshare/io.hpp"
#include "riskshare/oracle.hpp"

namespace {

using namespace riskshare;

struct CliOverrides {
    std::optional<std::string> pool_path;
    std::optional<std::string> config_path;
    std::optional<std::string> rule;
    std::optional<std::string> q;
    std::optional<std::string> q1;
    std::optional<std::string> q2;
    std::vector<std::size_t> omegas;
    std::optional<std::string> degenerate;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_abs;
    std::optional<double> tol_rel;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

RunConfig effective_config(const CliOverrides& cli) {
    RunConfig config;
    if (cli.config_path) config = load_config(*cli.config_path);
    if (cli.rule) config.rule = cli.rule;
    if (cli.q) config.q = cli.q;
    if (cli.q1) config.q1 = cli.q1;
    if (cli.q2) config.q2 = cli.q2;
    if (!cli.omegas.empty()) config.omegas = cli.omegas;
    if (cli.degenerate) config.degenerate = parse_policy(*cli.degenerate);
    if (cli.seed) config.seed = *cli.seed;
    if (cli.tol_abs) config.tol.abs = *cli.tol_abs;
    if (cli.tol_rel) config.tol.rel = *cli.tol_rel;
    if (cli.out) config.out = cli.out;
    if (cli.format) config.format = *cli.format;
    if (!(config.tol.abs > 0.0) || !(config.tol.rel >= 0.0))
        throw ConfigError("tol-abs must be positive and tol-rel nonnegative");
    if (config.format != "json" && config.format != "md" && config.format != "both")
        throw ConfigError("format must be one of 'json', 'md', 'both'");
    return config;
}

// Scenario indices from the rule and its metrics must exist in the pool.
void validate_scenario_atoms(const RuleSpec& rule, const Pool& pool) {
    auto check = [&](std::size_t atom, const std::string& what) {
        if (atom >= pool.atoms())
            throw ConfigError(what + " index " + std::to_string(atom) +
                              " is out of range for a pool with " +
                              std::to_string(pool.atoms()) + " atoms");
    };
    for (std::size_t atom : rule.scenario_atoms()) check(atom, "scenario atom");
    if (rule.q() && rule.q()->scenario_atom()) check(*rule.q()->scenario_atom(), "q scenario");
    if (rule.q1() && rule.q1()->scenario_atom())
        check(*rule.q1()->scenario_atom(), "q1 scenario");
    if (rule.q2() && rule.q2()->scenario_atom())
        check(*rule.q2()->scenario_atom(), "q2 scenario");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + path + "'");
    out << text;
}

// Emits the json/md renderings of one report to stdout or into the out dir.
void emit(const RunConfig& config, const std::string& stem, const nlohmann::ordered_json& json,
          const std::string& markdown) {
    const bool want_json = config.format == "json" || config.format == "both";
    const bool want_md = config.format == "md" || config.format == "both";
    if (config.out) {
        std::filesystem::create_directories(*config.out);
        const std::filesystem::path dir(*config.out);
        if (want_json) write_text_file((dir / (stem + ".json")).string(), json.dump(2) + "\n");
        if (want_md) write_text_file((dir / (stem + ".md")).string(), markdown);
        std::cout << "wrote " << stem << " report to " << dir.string() << "\n";
    } else {
        if (want_json) std::cout << json.dump(2) << "\n";
        if (want_md) std::cout << markdown;
    }
}

int cmd_compute(const CliOverrides& cli) {
    const RunConfig config = effective_config(cli);
    if (!cli.pool_path) throw ConfigError("compute needs --pool <csv>");
    const Pool pool = read_pool_csv_file(*cli.pool_path);
    const RuleSpec rule = config_rule(config);
    validate_scenario_atoms(rule, pool);

    const ContributionMatrix c = apply(rule, pool);
    const std::string csv = contributions_csv(pool, c);

    // Human summary: expected contributions and the worst allocation residual.
    std::string summary = "rule: " + rule.id() + "\n";
    const std::vector<double> expected = expected_contributions(c, pool.space());
    summary += "expected contributions:";
    for (double e : expected) {
        char buf[40];
        std::snprintf(buf, sizeof buf, " %.12g", e);
        summary += buf;
    }
    summary += "\nfull-allocation residuals per atom:";
    const RandomVariable s = aggregate(pool);
    for (std::size_t j = 0; j < pool.atoms(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < c.participants(); ++i) col += c.at(i, j);
        char buf[40];
        std::snprintf(buf, sizeof buf, " %.3g", std::abs(col - s[j]));
        summary += buf;
    }
    summary += "\n";

    if (config.out) {
        std::filesystem::create_directories(*config.out);
        const std::filesystem::path dir(*config.out);
        write_text_file((dir / "contributions.csv").string(), csv);
        std::cout << summary;
        std::cout << "wrote " << (dir / "contributions.csv").string() << "\n";
    } else {
        std::cout << csv;
        std::cerr << summary;
    }
    return 0;
}

std::vector<PropertyKind> requested_properties(const RunConfig& config) {
    std::vector<PropertyKind> kinds;
    if (!config.properties.empty()) {
        for (const std::string& name : config.properties) kinds.push_back(parse_property(name));
        return kinds;
    }
    kinds = {PropertyKind::FullAllocation, PropertyKind::Reshuffling,
             PropertyKind::SourceAnonymous, PropertyKind::Aggregate,
             PropertyKind::StronglyAggregate};
    if (config.q) {
        kinds.push_back(PropertyKind::SourceAnonymousQRatio);
        kinds.push_back(PropertyKind::StronglyAggregateQRatio);
    }
    if (config.q1 && config.q2) {
        kinds.push_back(PropertyKind::SourceAnonymousStd);
        kinds.push_back(PropertyKind::StronglyAggregateStd);
    }
    return kinds;
}

CheckRequest request_for(PropertyKind kind, const RunConfig& config) {
    CheckRequest request{kind, {}, {}, {}};
    const bool needs_q = kind == PropertyKind::SourceAnonymousQRatio ||
                         kind == PropertyKind::StronglyAggregateQRatio;
    const bool needs_q1q2 =
        kind == PropertyKind::SourceAnonymousStd || kind == PropertyKind::StronglyAggregateStd;
    if (needs_q) {
        if (!config.q)
            throw ConfigError("property '" + to_string(kind) + "' needs a metric (q)");
        request.q = parse_metric(*config.q);
    }
    if (needs_q1q2) {
        if (!config.q1 || !config.q2)
            throw ConfigError("property '" + to_string(kind) + "' needs metrics q1 and q2");
        request.q1 = parse_metric(*config.q1);
        request.q2 = parse_bimetric(*config.q2);
    }
    return request;
}

int cmd_check(const CliOverrides& cli) {
    const RunConfig config = effective_config(cli);
    const RuleSpec rule_spec = config_rule(config);
    const BoundRule rule = bind_rule(rule_spec);
    const std::vector<PropertyKind> kinds = requested_properties(config);

    std::vector<PropertyReport> reports;
    if (cli.pool_path) {
        const Pool pool = read_pool_csv_file(*cli.pool_path);
        validate_scenario_atoms(rule_spec, pool);
        const std::vector<Permutation> perms =
            permutation_set(pool.participants(), config.seed);
        const std::vector<Pool> pools = {pool};
        const std::vector<std::string> labels = {"pool"};
        for (PropertyKind kind : kinds) {
            const CheckRequest request = request_for(kind, config);
            switch (kind) {
                case PropertyKind::FullAllocation:
                    reports.push_back(check_full_allocation(rule, pool));
                    break;
                case PropertyKind::Reshuffling:
                    reports.push_back(check_reshuffling(rule, pool, perms, config.tol));
                    break;
                case PropertyKind::SourceAnonymous:
                    reports.push_back(check_source_anonymous(rule, pool, perms, config.tol));
                    break;
                case PropertyKind::Aggregate:
                    reports.push_back(check_aggregate(rule, pool, config.tol));
                    break;
                case PropertyKind::StronglyAggregate:
                    reports.push_back(check_strongly_aggregate(rule, pools, config.tol, labels));
                    break;
                case PropertyKind::SourceAnonymousQRatio:
                    reports.push_back(
                        check_source_anonymous_q_ratio(rule, *request.q, pool, perms, config.tol));
                    break;
                case PropertyKind::StronglyAggregateQRatio:
                    reports.push_back(
                        check_strongly_aggregate_q_ratio(rule, *request.q, pools, config.tol, labels));
                    break;
                case PropertyKind::SourceAnonymousStd:
                    reports.push_back(check_source_anonymous_std(rule, *request.q1, *request.q2,
                                                                 pool, perms, config.tol));
                    break;
                case PropertyKind::StronglyAggregateStd:
                    reports.push_back(check_strongly_aggregate_std(rule, *request.q1, *request.q2,
                                                                   pools, config.tol, labels));
                    break;
            }
        }
    } else {
        const Battery battery = Battery::standard(config.seed, config.battery);
        for (PropertyKind kind : kinds)
            reports.push_back(
                check_on_battery(request_for(kind, config), rule, battery, config.tol));
    }

    nlohmann::ordered_json json;
    json["rule"] = rule.id;
    json["seed"] = config.seed;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const PropertyReport& r : reports) checks.push_back(to_json(r));
    json["checks"] = std::move(checks);

    emit(config, "check", json, markdown_summary(std::span<const PropertyReport>(reports)));
    return 0;
}

int cmd_classify(const CliOverrides& cli) {
    const RunConfig config = effective_config(cli);
    const Battery battery = Battery::standard(config.seed, config.battery);

    std::vector<RuleSpec> rules;
    if (config.rules.empty()) {
        rules = table_rules(config.battery.atoms);
    } else {
        for (const std::string& spec : config.rules)
            rules.push_back(
                parse_rule_spec(spec).with_policy(DegeneratePolicy::UniformFallback));
    }

    const ClassificationMatrix matrix = classify(rules, battery, config.tol);
    emit(config, "classification", to_json(matrix), markdown_table(matrix));

    if (matrix.matches_expected && !*matrix.matches_expected) return 3;
    if (!implication_audit(matrix).empty()) return 3;
    return 0;
}

int cmd_theorems(const CliOverrides& cli) {
    const RunConfig config = effective_config(cli);
    const Battery battery = Battery::standard(config.seed, config.battery);

    TheoremMetrics metrics;
    if (config.q) metrics.q = parse_metric(*config.q);
    if (config.q1) metrics.q1 = parse_metric(*config.q1);
    if (config.q2) metrics.q2 = parse_bimetric(*config.q2);

    std::vector<TheoremId> ids;
    if (config.theorems.empty())
        ids = {TheoremId::T1, TheoremId::T2, TheoremId::T3,
               TheoremId::T4, TheoremId::T5, TheoremId::T6};
    else
        for (const std::string& name : config.theorems) ids.push_back(parse_theorem(name));

    std::vector<TheoremReport> reports;
    for (TheoremId id : ids) reports.push_back(run_theorem(id, battery, metrics, config.tol));

    nlohmann::ordered_json json;
    json["seed"] = config.seed;
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (const TheoremReport& r : reports) items.push_back(to_json(r));
    json["theorems"] = std::move(items);

    emit(config, "theorems", json, markdown_summary(std::span<const TheoremReport>(reports)));

    for (const TheoremReport& r : reports)
        if (!r.ok()) return 3;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-sharing rules: contributions, property checks, classification"};
    app.require_subcommand(1);

    CliOverrides cli;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", cli.config_path, "JSON run configuration");
        cmd->add_option("--rule", cli.rule, "rule name or parenthesized spec");
        cmd->add_option("--q", cli.q, "risk metric spec, e.g. mean, var, scenario:0");
        cmd->add_option("--q1", cli.q1, "baseline metric spec for linear rules");
        cmd->add_option("--q2", cli.q2, "bimetric spec, e.g. cov, first_var");
        cmd->add_option("--omegas", cli.omegas, "scenario atom indices i[,j,k]")
            ->delimiter(',');
        cmd->add_option("--degenerate", cli.degenerate, "degenerate policy: error|uniform")
            ->check(CLI::IsMember({"error", "uniform"}));
        cmd->add_option("--seed", cli.seed, "battery / permutation seed");
        cmd->add_option("--tol-abs", cli.tol_abs, "absolute comparison tolerance");
        cmd->add_option("--tol-rel", cli.tol_rel, "relative comparison tolerance");
        cmd->add_option("--out", cli.out, "output directory");
        cmd->add_option("--format", cli.format, "report format: json|md|both")
            ->check(CLI::IsMember({"json", "md", "both"}));
    };

    CLI::App* compute = app.add_subcommand("compute", "contributions for one pool");
    compute->add_option("--pool", cli.pool_path, "pool CSV (prob,X1,...,Xn)")->required();
    add_common(compute);

    CLI::App* check = app.add_subcommand("check", "property checks for one rule");
    check->add_option("--pool", cli.pool_path, "check on this pool instead of the battery");
    add_common(check);

    CLI::App* classify_cmd = app.add_subcommand("classify", "rules x properties matrix");
    add_common(classify_cmd);

    CLI::App* theorems_cmd = app.add_subcommand("theorems", "characterization harness");
    add_common(theorems_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (compute->parsed()) return cmd_compute(cli);
        if (check->parsed()) return cmd_check(cli);
        if (classify_cmd->parsed()) return cmd_classify(cli);
        if (theorems_cmd->parsed()) return cmd_theorems(cli);
    } catch (const DegeneratePoolError& e) {
        std::cerr << "degenerate pool: " << e.what() << "\n";
        return 2;
    } catch (const MetricAuditError& e) {
        std::cerr << "metric audit: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
