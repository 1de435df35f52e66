#pragma once
// The catalog of risk-sharing rules: each maps a pool X to a contribution
// matrix C with sum_i C_i(w) = S_X(w) per atom. Rules never mutate inputs and
// report division-by-nothing situations through the degenerate policy.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/metrics.hpp"
#include "riskshare/prob_core.hpp"

namespace riskshare {

// A pool for which the rule's defining denominator vanishes. `condition`
// names the unmet requirement, e.g. "var(S) = 0".
class DegeneratePoolError : public std::runtime_error {
   public:
    DegeneratePoolError(std::string rule, std::string condition);

    const std::string& rule() const { return rule_; }
    const std::string& condition() const { return condition_; }

   private:
    std::string rule_;
    std::string condition_;
};

enum class DegeneratePolicy {
    Error,           // throw DegeneratePoolError
    UniformFallback  // read the undefined fractions as 1/n
};

enum class RuleKind {
    Uniform,
    QProportional,
    WeightedQProportional,
    Q1Q2Linear,
    ScenarioProportional,
    ScenarioLinear,
    CovarianceLinear,
    VarianceLinear,
    ConditionalMean,
    OrderStatistics,
    AllInOne,
    StandAlone,
    HybridCounterexample,
};

// Value object describing one rule instance; `apply` does the work.
//
//   uniform                 C_i = S/n
//   q_proportional(q)       C_i = q[X_i] / sum_k q[X_k] * S
//   weighted(q, w)          C_i = w_i q[X_i] / sum_k w_k q[X_k] * S
//   q1q2_linear(q1, q2)     C_i = q1[X_i] + q2[X_i,S]/sum_k q2[X_k,S] * (S - sum_k q1[X_k])
//   scenario_proportional   q_proportional with q = scenario(typical)
//   scenario_linear         C_i = X_i(typ) + (X_i(hi)-X_i(lo))/(S(hi)-S(lo)) * (S - S(typ))
//   covariance_linear       q1q2_linear(mean, cov); slope cov(X_i,S)/var(S)
//   variance_linear         q1q2_linear(mean, first_variance)
//   conditional_mean        C_i = E[X_i | S]   (level sets of S)
//   order_statistics        per-atom ascending sort of the loss column
//   all_in_one              C_0 = S, everyone else 0
//   stand_alone             C = X
//   hybrid_counterexample   order_statistics when all q[X_i] coincide, else q_proportional
class RuleSpec {
   public:
    static RuleSpec uniform();
    static RuleSpec mean_proportional();  // q_proportional(mean)
    static RuleSpec q_proportional(RiskMetric q);
    static RuleSpec weighted_q_proportional(RiskMetric q, std::vector<double> weights);
    static RuleSpec q1q2_linear(RiskMetric q1, BiMetric q2);
    static RuleSpec scenario_proportional(std::size_t typical);
    static RuleSpec scenario_linear(std::size_t typical, std::size_t hi, std::size_t lo);
    static RuleSpec covariance_linear();
    static RuleSpec variance_linear();
    static RuleSpec conditional_mean();
    static RuleSpec order_statistics();
    static RuleSpec all_in_one();
    static RuleSpec stand_alone();
    static RuleSpec hybrid_counterexample(RiskMetric q);

    RuleSpec with_policy(DegeneratePolicy policy) const;

    RuleKind kind() const { return kind_; }
    DegeneratePolicy policy() const { return policy_; }
    const std::optional<RiskMetric>& q() const { return q_; }
    const std::optional<RiskMetric>& q1() const { return q1_; }
    const std::optional<BiMetric>& q2() const { return q2_; }
    const std::vector<double>& participant_weights() const { return weights_; }
    const std::vector<std::size_t>& scenario_atoms() const { return scenario_atoms_; }

    // Canonical identifier, e.g. "q_prop(mean)" or "scen_lin(0,5,0)".
    std::string id() const;

   private:
    explicit RuleSpec(RuleKind kind) : kind_(kind) {}

    RuleKind kind_;
    DegeneratePolicy policy_ = DegeneratePolicy::Error;
    std::optional<RiskMetric> q_;
    std::optional<RiskMetric> q1_;
    std::optional<BiMetric> q2_;
    std::vector<double> weights_;            // positional, one per participant
    std::vector<std::size_t> scenario_atoms_;  // typical[, hi, lo]
};

ContributionMatrix apply(const RuleSpec& rule, const Pool& pool);

// Standalone entry point for the piecewise rule used by the independence
// arguments; apply() delegates here for RuleKind::HybridCounterexample.
ContributionMatrix apply_hybrid_counterexample(const RiskMetric& q, const Pool& pool);

// E[C_i] per participant.
std::vector<double> expected_contributions(const ContributionMatrix& contributions,
                                           const ProbSpace& space);

// A rule bound to an applier; axiom checks run against this so that test code
// can also probe deliberately broken rules.
struct BoundRule {
    std::string id;
    std::function<ContributionMatrix(const Pool&)> fn;

    ContributionMatrix operator()(const Pool& pool) const { return fn(pool); }
};

BoundRule bind_rule(const RuleSpec& rule);

}  // namespace riskshare
