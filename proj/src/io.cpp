#include "riskshare/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace riskshare {

namespace {

void trim(std::string& s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
    s.erase(0, start);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (std::string& f : fields) trim(f);
    return fields;
}

double parse_csv_double(const std::string& field, std::size_t row, const std::string& column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw CsvError("row " + std::to_string(row) + ", column " + column +
                       ": cannot parse '" + field + "' as a number");
    if (!std::isfinite(v))
        throw CsvError("row " + std::to_string(row) + ", column " + column +
                       ": value must be finite");
    return v;
}

std::string format_shortest(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

Pool read_pool_csv(std::istream& in) {
    struct Row {
        std::size_t file_row;
        std::vector<std::string> fields;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t file_row = 0;
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string probe = line;
        trim(probe);
        if (probe.empty()) continue;
        rows.push_back({file_row, split(line, ',')});
    }

    if (rows.empty()) throw CsvError("empty input: expected a header row prob,X1,...,Xn");

    const std::vector<std::string>& header = rows.front().fields;
    if (header.size() < 2 || header[0] != "prob")
        throw CsvError("row " + std::to_string(rows.front().file_row) +
                       ": header must be prob,X1,...,Xn");
    const std::size_t n = header.size() - 1;
    for (std::size_t k = 1; k <= n; ++k)
        if (header[k] != "X" + std::to_string(k))
            throw CsvError("row " + std::to_string(rows.front().file_row) +
                           ": header column " + std::to_string(k + 1) + " is '" + header[k] +
                           "', expected 'X" + std::to_string(k) + "'");

    if (rows.size() < 2) throw CsvError("no data rows: need at least one atom");
    const std::size_t m = rows.size() - 1;

    std::vector<double> probs(m);
    Matrix losses(n, m);
    for (std::size_t j = 0; j < m; ++j) {
        const Row& row = rows[j + 1];
        if (row.fields.size() != n + 1)
            throw CsvError("row " + std::to_string(row.file_row) + " has " +
                           std::to_string(row.fields.size()) + " fields, expected " +
                           std::to_string(n + 1));
        probs[j] = parse_csv_double(row.fields[0], row.file_row, "prob");
        if (!(probs[j] > 0.0))
            throw CsvError("row " + std::to_string(row.file_row) +
                           ": probability must be strictly positive, got " + row.fields[0]);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string column = "X" + std::to_string(i + 1);
            const double v = parse_csv_double(row.fields[i + 1], row.file_row, column);
            if (v < 0.0)
                throw CsvError("row " + std::to_string(row.file_row) + ", column " + column +
                               ": loss must be nonnegative, got " + row.fields[i + 1]);
            losses.at(i, j) = v;
        }
    }

    double sum = 0.0;
    for (double p : probs) sum += p;
    if (std::abs(sum - 1.0) > 1e-9) {
        char msg[64];
        std::snprintf(msg, sizeof msg, "%.12g", sum);
        throw CsvError(std::string("probabilities sum to ") + msg +
                       ", expected 1 within 1e-9");
    }
    for (double& p : probs) p /= sum;

    return Pool(ProbSpace::make(std::move(probs)), std::move(losses));
}

Pool read_pool_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open pool file '" + path + "'");
    return read_pool_csv(in);
}

void write_contributions_csv(std::ostream& out, const Pool& pool, const ContributionMatrix& c) {
    if (c.participants() != pool.participants() || c.atoms() != pool.atoms())
        throw std::invalid_argument("contribution matrix shape does not match the pool");
    out << "prob,S";
    for (std::size_t i = 0; i < pool.participants(); ++i) out << ",C" << (i + 1);
    out << "\n";
    const RandomVariable s = aggregate(pool);
    for (std::size_t j = 0; j < pool.atoms(); ++j) {
        out << format_shortest(pool.space().weight(j)) << ',' << format_shortest(s[j]);
        for (std::size_t i = 0; i < pool.participants(); ++i)
            out << ',' << format_shortest(c.at(i, j));
        out << "\n";
    }
}

std::string contributions_csv(const Pool& pool, const ContributionMatrix& c) {
    std::ostringstream out;
    write_contributions_csv(out, pool, c);
    return out.str();
}

// ---- rule specs ------------------------------------------------------------

namespace {

std::size_t parse_index(const std::string& text, const std::string& what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError("cannot parse " + what + " '" + text + "' as a nonnegative integer");
    return v;
}

std::vector<double> parse_weight_list(const std::string& text) {
    std::vector<double> weights;
    for (const std::string& field : split(text, ',')) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size())
            throw ConfigError("cannot parse participant weight '" + field + "'");
        weights.push_back(v);
    }
    return weights;
}

void require_positive_weights(const std::vector<double>& weights) {
    if (weights.empty()) throw ConfigError("participant weights must not be empty");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw ConfigError("participant weights must be positive and finite");
}

RiskMetric metric_or_rethrow(const std::string& spec) {
    try {
        return parse_metric(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("metric '") + spec + "': " + e.what());
    }
}

BiMetric bimetric_or_rethrow(const std::string& spec) {
    try {
        return parse_bimetric(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bimetric '") + spec + "': " + e.what());
    }
}

}  // namespace

RuleSpec parse_rule_spec(const std::string& spec) {
    const std::size_t open = spec.find('(');
    std::string name = spec.substr(0, open);
    trim(name);
    std::string args;
    if (open != std::string::npos) {
        if (spec.empty() || spec.back() != ')')
            throw ConfigError("rule spec '" + spec + "' is missing the closing ')'");
        args = spec.substr(open + 1, spec.size() - open - 2);
        trim(args);
    }

    auto no_args = [&](RuleSpec rule) {
        if (open != std::string::npos && !args.empty())
            throw ConfigError("rule '" + name + "' takes no arguments");
        return rule;
    };

    if (name == "uniform") return no_args(RuleSpec::uniform());
    if (name == "mean_prop") return no_args(RuleSpec::mean_proportional());
    if (name == "cov_lin") return no_args(RuleSpec::covariance_linear());
    if (name == "var_lin") return no_args(RuleSpec::variance_linear());
    if (name == "cond_mean") return no_args(RuleSpec::conditional_mean());
    if (name == "order_stat") return no_args(RuleSpec::order_statistics());
    if (name == "all_in_one") return no_args(RuleSpec::all_in_one());
    if (name == "stand_alone") return no_args(RuleSpec::stand_alone());
    if (name == "q_prop") return RuleSpec::q_proportional(metric_or_rethrow(args));
    if (name == "hybrid") return RuleSpec::hybrid_counterexample(metric_or_rethrow(args));
    if (name == "w_q_prop") {
        const std::size_t semi = args.find(';');
        if (semi == std::string::npos)
            throw ConfigError("w_q_prop needs '<metric>;w1,w2,...', got '" + args + "'");
        // Accept the canonical id form "w_q_prop(mean;w=1,2)" as well.
        std::string weight_text = args.substr(semi + 1);
        if (weight_text.rfind("w=", 0) == 0) weight_text = weight_text.substr(2);
        std::vector<double> weights = parse_weight_list(weight_text);
        require_positive_weights(weights);
        return RuleSpec::weighted_q_proportional(metric_or_rethrow(args.substr(0, semi)),
                                                 std::move(weights));
    }
    if (name == "q1q2_lin") {
        const std::size_t comma = args.find(',');
        if (comma == std::string::npos)
            throw ConfigError("q1q2_lin needs '<q1>,<q2>', got '" + args + "'");
        return RuleSpec::q1q2_linear(metric_or_rethrow(args.substr(0, comma)),
                                     bimetric_or_rethrow(args.substr(comma + 1)));
    }
    if (name == "scen_prop") return RuleSpec::scenario_proportional(parse_index(args, "scenario atom"));
    if (name == "scen_lin") {
        const std::vector<std::string> parts = split(args, ',');
        if (parts.size() != 3)
            throw ConfigError("scen_lin needs '<typical>,<hi>,<lo>', got '" + args + "'");
        return RuleSpec::scenario_linear(parse_index(parts[0], "typical atom"),
                                         parse_index(parts[1], "hi atom"),
                                         parse_index(parts[2], "lo atom"));
    }
    throw ConfigError(
        "unknown rule '" + name +
        "'; expected one of uniform, mean_prop, q_prop, w_q_prop, q1q2_lin, scen_prop, "
        "scen_lin, cov_lin, var_lin, cond_mean, order_stat, all_in_one, stand_alone, hybrid");
}

RuleSpec make_rule(const std::string& name, const std::optional<std::string>& q,
                   const std::optional<std::string>& q1, const std::optional<std::string>& q2,
                   const std::vector<std::size_t>& omegas, const std::vector<double>& weights,
                   DegeneratePolicy policy) {
    if (name.find('(') != std::string::npos)
        return parse_rule_spec(name).with_policy(policy);

    auto need_q = [&] {
        if (!q) throw ConfigError("rule '" + name + "' needs a risk metric (q)");
        return metric_or_rethrow(*q);
    };

    if (name == "q_prop") return RuleSpec::q_proportional(need_q()).with_policy(policy);
    if (name == "hybrid") return RuleSpec::hybrid_counterexample(need_q()).with_policy(policy);
    if (name == "w_q_prop") {
        require_positive_weights(weights);
        return RuleSpec::weighted_q_proportional(need_q(), weights).with_policy(policy);
    }
    if (name == "q1q2_lin") {
        if (!q1 || !q2) throw ConfigError("rule 'q1q2_lin' needs both q1 and q2 metrics");
        return RuleSpec::q1q2_linear(metric_or_rethrow(*q1), bimetric_or_rethrow(*q2))
            .with_policy(policy);
    }
    if (name == "scen_prop") {
        if (omegas.size() != 1)
            throw ConfigError("rule 'scen_prop' needs exactly one scenario atom (omegas)");
        return RuleSpec::scenario_proportional(omegas[0]).with_policy(policy);
    }
    if (name == "scen_lin") {
        if (omegas.size() != 3)
            throw ConfigError(
                "rule 'scen_lin' needs three scenario atoms: typical, hi, lo (omegas)");
        return RuleSpec::scenario_linear(omegas[0], omegas[1], omegas[2]).with_policy(policy);
    }
    return parse_rule_spec(name).with_policy(policy);
}

PropertyKind parse_property(const std::string& name) {
    static const std::pair<const char*, PropertyKind> table[] = {
        {"full_allocation", PropertyKind::FullAllocation},
        {"reshuffling", PropertyKind::Reshuffling},
        {"source_anonymous", PropertyKind::SourceAnonymous},
        {"aggregate", PropertyKind::Aggregate},
        {"strongly_aggregate", PropertyKind::StronglyAggregate},
        {"source_anonymous_q_ratio", PropertyKind::SourceAnonymousQRatio},
        {"strongly_aggregate_q_ratio", PropertyKind::StronglyAggregateQRatio},
        {"source_anonymous_std", PropertyKind::SourceAnonymousStd},
        {"strongly_aggregate_std", PropertyKind::StronglyAggregateStd},
    };
    for (const auto& [key, kind] : table)
        if (name == key) return kind;
    std::string valid;
    for (const auto& [key, kind] : table) {
        if (!valid.empty()) valid += ", ";
        valid += key;
    }
    throw ConfigError("unknown property '" + name + "'; expected one of: " + valid);
}

TheoremId parse_theorem(const std::string& name) {
    std::string norm = name;
    if (!norm.empty()) norm[0] = char(std::toupper(static_cast<unsigned char>(norm[0])));
    if (norm == "T1") return TheoremId::T1;
    if (norm == "T2") return TheoremId::T2;
    if (norm == "T3") return TheoremId::T3;
    if (norm == "T4") return TheoremId::T4;
    if (norm == "T5") return TheoremId::T5;
    if (norm == "T6") return TheoremId::T6;
    throw ConfigError("unknown theorem '" + name + "'; expected T1..T6");
}

DegeneratePolicy parse_policy(const std::string& name) {
    if (name == "error") return DegeneratePolicy::Error;
    if (name == "uniform") return DegeneratePolicy::UniformFallback;
    throw ConfigError("unknown degenerate policy '" + name + "'; expected 'error' or 'uniform'");
}

// ---- run config ------------------------------------------------------------

RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    static const std::set<std::string> allowed = {
        "rule", "q",     "q1",     "q2",        "omegas", "weights", "degenerate", "seed",
        "tol_abs", "tol_rel", "battery", "properties", "rules", "theorems", "out", "format"};
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");

    RunConfig c;
    try {
        if (j.contains("rule")) c.rule = j.at("rule").get<std::string>();
        if (j.contains("q")) c.q = j.at("q").get<std::string>();
        if (j.contains("q1")) c.q1 = j.at("q1").get<std::string>();
        if (j.contains("q2")) c.q2 = j.at("q2").get<std::string>();
        if (j.contains("omegas"))
            for (const auto& v : j.at("omegas")) c.omegas.push_back(v.get<std::size_t>());
        if (j.contains("weights"))
            for (const auto& v : j.at("weights")) c.weights.push_back(v.get<double>());
        if (j.contains("degenerate"))
            c.degenerate = parse_policy(j.at("degenerate").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("tol_abs")) c.tol.abs = j.at("tol_abs").get<double>();
        if (j.contains("tol_rel")) c.tol.rel = j.at("tol_rel").get<double>();
        if (j.contains("battery")) {
            const auto& b = j.at("battery");
            if (!b.is_object()) throw ConfigError("config key 'battery' must be an object");
            static const std::set<std::string> battery_allowed = {"participants", "atoms",
                                                                  "random_pools", "loss_scale"};
            for (const auto& [key, value] : b.items())
                if (!battery_allowed.count(key))
                    throw ConfigError("unknown battery key '" + key + "'");
            if (b.contains("participants"))
                c.battery.participants = b.at("participants").get<std::size_t>();
            if (b.contains("atoms")) c.battery.atoms = b.at("atoms").get<std::size_t>();
            if (b.contains("random_pools"))
                c.battery.random_pools = b.at("random_pools").get<std::size_t>();
            if (b.contains("loss_scale")) c.battery.loss_scale = b.at("loss_scale").get<double>();
        }
        if (j.contains("properties"))
            for (const auto& v : j.at("properties")) c.properties.push_back(v.get<std::string>());
        if (j.contains("rules"))
            for (const auto& v : j.at("rules")) c.rules.push_back(v.get<std::string>());
        if (j.contains("theorems"))
            for (const auto& v : j.at("theorems")) c.theorems.push_back(v.get<std::string>());
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("format")) c.format = j.at("format").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (!(c.tol.abs > 0.0) || !(c.tol.rel >= 0.0))
        throw ConfigError("tol_abs must be positive and tol_rel nonnegative");
    if (c.format != "json" && c.format != "md" && c.format != "both")
        throw ConfigError("format must be one of 'json', 'md', 'both'");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config '") + path + "': " + e.what());
    }
    return parse_config(j);
}

RuleSpec config_rule(const RunConfig& config) {
    if (!config.rule) throw ConfigError("config names no rule");
    return make_rule(*config.rule, config.q, config.q1, config.q2, config.omegas, config.weights,
                     config.degenerate);
}

}  // namespace riskshare
