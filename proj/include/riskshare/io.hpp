#pragma once
// CSV pool input / contribution output plus the JSON run-config loader shared
// by the command line tool and the tests.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/axioms.hpp"
#include "riskshare/prob_core.hpp"
#include "riskshare/rules.hpp"

// vendor/json.hpp
#include "json.hpp"

namespace riskshare {

class CsvError : public std::runtime_error {
   public:
    explicit CsvError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
   public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Reads "prob,X1,...,Xn", one data row per atom. Probabilities must be
// strictly positive and sum to 1 within 1e-9; the stored weights are
// renormalized so downstream code sees an exact-as-possible unit sum. Losses
// must be finite and nonnegative. Errors cite the 1-based file row.
Pool read_pool_csv(std::istream& in);
Pool read_pool_csv_file(const std::string& path);

// Writes "prob,S,C1,...,Cn", one row per atom. Doubles are rendered with
// std::to_chars shortest form, which round-trips exactly.
void write_contributions_csv(std::ostream& out, const Pool& pool, const ContributionMatrix& c);
std::string contributions_csv(const Pool& pool, const ContributionMatrix& c);

// One rule given as a self-contained spec string, mirroring RuleSpec::id():
//   uniform | mean_prop | cov_lin | var_lin | cond_mean | order_stat |
//   all_in_one | stand_alone | q_prop(<q>) | w_q_prop(<q>;w1,w2,...) |
//   q1q2_lin(<q1>,<q2>) | scen_prop(<typ>) | scen_lin(<typ>,<hi>,<lo>) |
//   hybrid(<q>)
// Metric specs are those of parse_metric / parse_bimetric; <q1> must not
// contain a comma (the first comma splits q1 from q2).
RuleSpec parse_rule_spec(const std::string& spec);

// Assembles a rule from a bare name plus separately supplied pieces (the CLI
// flag style). Passing a parenthesized spec forwards to parse_rule_spec, in
// which case no separate pieces may be given.
RuleSpec make_rule(const std::string& name, const std::optional<std::string>& q,
                   const std::optional<std::string>& q1, const std::optional<std::string>& q2,
                   const std::vector<std::size_t>& omegas, const std::vector<double>& weights,
                   DegeneratePolicy policy);

PropertyKind parse_property(const std::string& name);
TheoremId parse_theorem(const std::string& name);
DegeneratePolicy parse_policy(const std::string& name);

// JSON run configuration. Unknown keys are rejected so that typos cannot
// silently fall back to defaults.
struct RunConfig {
    std::optional<std::string> rule;
    std::optional<std::string> q;
    std::optional<std::string> q1;
    std::optional<std::string> q2;
    std::vector<std::size_t> omegas;
    std::vector<double> weights;
    DegeneratePolicy degenerate = DegeneratePolicy::Error;
    std::uint64_t seed = 0;
    Tolerances tol;
    BatterySizes battery;
    std::vector<std::string> properties;
    std::vector<std::string> rules;
    std::vector<std::string> theorems;
    std::optional<std::string> out;
    std::string format = "json";
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// The rule a RunConfig describes (config must name one). Throws ConfigError
// when the rule is missing or malformed.
RuleSpec config_rule(const RunConfig& config);

}  // namespace riskshare
