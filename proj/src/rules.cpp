#include "riskshare/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace riskshare {

namespace {

// A defining denominator counts as vanished when it is at or below noise
// level relative to the magnitudes that formed it. This catches both exact
// zeros and float residue such as the covariance of a constant aggregate.
constexpr double DENOMINATOR_REL_TOL = 1e-9;

bool denominator_vanishes(double den, double term_magnitude_sum) {
    return std::abs(den) <= DENOMINATOR_REL_TOL * std::max(1.0, term_magnitude_sum);
}

ContributionMatrix from_shares(const Pool& pool, const std::vector<double>& shares) {
    const RandomVariable s = aggregate(pool);
    Matrix c(pool.participants(), pool.atoms());
    for (std::size_t i = 0; i < pool.participants(); ++i)
        for (std::size_t j = 0; j < pool.atoms(); ++j) c.at(i, j) = shares[i] * s[j];
    return ContributionMatrix(std::move(c));
}

ContributionMatrix uniform_contributions(const Pool& pool) {
    const RandomVariable s = aggregate(pool);
    const double n = static_cast<double>(pool.participants());
    Matrix c(pool.participants(), pool.atoms());
    for (std::size_t i = 0; i < pool.participants(); ++i)
        for (std::size_t j = 0; j < pool.atoms(); ++j) c.at(i, j) = s[j] / n;
    return ContributionMatrix(std::move(c));
}

// Shared core of the proportional family. `weights` empty means unweighted.
ContributionMatrix proportional_contributions(const Pool& pool, const RiskMetric& q,
                                              const std::vector<double>& weights,
                                              DegeneratePolicy policy, const std::string& rule_id) {
    const std::size_t n = pool.participants();
    std::vector<double> terms(n);
    double den = 0.0, magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double qi = q(pool.loss(i));
        terms[i] = weights.empty() ? qi : weights[i] * qi;
        den += terms[i];
        magnitude += std::abs(terms[i]);
    }

    if (denominator_vanishes(den, magnitude)) {
        if (policy == DegeneratePolicy::Error)
            throw DegeneratePoolError(rule_id, "sum of " + q.name() + " terms over the pool is 0");
        return uniform_contributions(pool);
    }

    // All metric values identical: the shares are exactly 1/n, so hand the
    // atom values to the same division the uniform rule performs. This keeps
    // q_proportional with a constant metric bit-identical to uniform.
    if (weights.empty() &&
        std::all_of(terms.begin(), terms.end(), [&](double t) { return t == terms.front(); }))
        return uniform_contributions(pool);

    std::vector<double> shares(n);
    for (std::size_t i = 0; i < n; ++i) shares[i] = terms[i] / den;
    return from_shares(pool, shares);
}

// C_i = q1[X_i] + frac_i * (S - sum_k q1[X_k]) with frac_i = q2 share.
ContributionMatrix standardized_linear(const Pool& pool, const RiskMetric& q1, const BiMetric& q2,
                                       DegeneratePolicy policy, const std::string& rule_id,
                                       const std::string& degenerate_condition) {
    const std::size_t n = pool.participants();
    const RandomVariable s = aggregate(pool);

    std::vector<double> base(n);
    double base_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = q1(pool.loss(i));
        base_sum += base[i];
    }

    std::vector<double> fracs(n);
    double den = 0.0, magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        fracs[i] = q2(pool.loss(i), s);
        den += fracs[i];
        magnitude += std::abs(fracs[i]);
    }

    if (denominator_vanishes(den, magnitude)) {
        if (policy == DegeneratePolicy::Error)
            throw DegeneratePoolError(rule_id, degenerate_condition);
        std::fill(fracs.begin(), fracs.end(), 1.0 / static_cast<double>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) fracs[i] /= den;
    }

    Matrix c(n, pool.atoms());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < pool.atoms(); ++j)
            c.at(i, j) = base[i] + fracs[i] * (s[j] - base_sum);
    return ContributionMatrix(std::move(c));
}

ContributionMatrix scenario_linear_contributions(const Pool& pool, std::size_t typ, std::size_t hi,
                                                 std::size_t lo, DegeneratePolicy policy,
                                                 const std::string& rule_id) {
    if (typ >= pool.atoms() || hi >= pool.atoms() || lo >= pool.atoms())
        throw std::out_of_range(rule_id + ": scenario atom out of range for " +
                                std::to_string(pool.atoms()) + " atoms");
    const std::size_t n = pool.participants();
    const RandomVariable s = aggregate(pool);
    const double spread = s[hi] - s[lo];

    std::vector<double> slope(n);
    if (denominator_vanishes(spread, std::abs(s[hi]) + std::abs(s[lo]))) {
        if (policy == DegeneratePolicy::Error)
            throw DegeneratePoolError(rule_id, "S(hi) = S(lo), aggregate spread between the chosen scenarios is 0");
        std::fill(slope.begin(), slope.end(), 1.0 / static_cast<double>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i)
            slope[i] = (pool.losses().at(i, hi) - pool.losses().at(i, lo)) / spread;
    }

    Matrix c(n, pool.atoms());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < pool.atoms(); ++j)
            c.at(i, j) = pool.losses().at(i, typ) + slope[i] * (s[j] - s[typ]);
    return ContributionMatrix(std::move(c));
}

ContributionMatrix conditional_mean_contributions(const Pool& pool) {
    const std::size_t n = pool.participants();
    const RandomVariable s = aggregate(pool);
    const auto groups = level_groups(s.values());
    const auto& w = pool.space().weights();

    Matrix c(n, pool.atoms());
    for (const auto& group : groups) {
        if (group.size() == 1) {
            // Singleton level set: the conditional mean is the realization
            // itself; copying keeps distinct-S pools bit-equal to stand-alone.
            const std::size_t j = group.front();
            for (std::size_t i = 0; i < n; ++i) c.at(i, j) = pool.losses().at(i, j);
            continue;
        }
        double wsum = 0.0;
        for (std::size_t j : group) wsum += w[j];
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : group) acc += w[j] * pool.losses().at(i, j);
            const double mean = acc / wsum;
            for (std::size_t j : group) c.at(i, j) = mean;
        }
    }
    return ContributionMatrix(std::move(c));
}

ContributionMatrix order_statistics_contributions(const Pool& pool) {
    const std::size_t n = pool.participants();
    Matrix c(n, pool.atoms());
    std::vector<double> col(n);
    for (std::size_t j = 0; j < pool.atoms(); ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = pool.losses().at(i, j);
        std::sort(col.begin(), col.end());
        for (std::size_t i = 0; i < n; ++i) c.at(i, j) = col[i];
    }
    return ContributionMatrix(std::move(c));
}

}  // namespace

DegeneratePoolError::DegeneratePoolError(std::string rule, std::string condition)
    : std::runtime_error("rule '" + rule + "' is degenerate on this pool: " + condition),
      rule_(std::move(rule)),
      condition_(std::move(condition)) {}

RuleSpec RuleSpec::uniform() { return RuleSpec(RuleKind::Uniform); }

RuleSpec RuleSpec::mean_proportional() { return q_proportional(RiskMetric::mean()); }

RuleSpec RuleSpec::q_proportional(RiskMetric q) {
    RuleSpec r(RuleKind::QProportional);
    r.q_ = std::move(q);
    return r;
}

RuleSpec RuleSpec::weighted_q_proportional(RiskMetric q, std::vector<double> weights) {
    if (weights.empty())
        throw std::invalid_argument("weighted_q_proportional: weights must not be empty");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("weighted_q_proportional: weights must be strictly positive");
    RuleSpec r(RuleKind::WeightedQProportional);
    r.q_ = std::move(q);
    r.weights_ = std::move(weights);
    return r;
}

RuleSpec RuleSpec::q1q2_linear(RiskMetric q1, BiMetric q2) {
    RuleSpec r(RuleKind::Q1Q2Linear);
    r.q1_ = std::move(q1);
    r.q2_ = std::move(q2);
    return r;
}

RuleSpec RuleSpec::scenario_proportional(std::size_t typical) {
    RuleSpec r(RuleKind::ScenarioProportional);
    r.q_ = RiskMetric::scenario(typical);
    r.scenario_atoms_ = {typical};
    return r;
}

RuleSpec RuleSpec::scenario_linear(std::size_t typical, std::size_t hi, std::size_t lo) {
    RuleSpec r(RuleKind::ScenarioLinear);
    r.scenario_atoms_ = {typical, hi, lo};
    return r;
}

RuleSpec RuleSpec::covariance_linear() {
    RuleSpec r(RuleKind::CovarianceLinear);
    r.q1_ = RiskMetric::mean();
    r.q2_ = BiMetric::covariance();
    return r;
}

RuleSpec RuleSpec::variance_linear() {
    RuleSpec r(RuleKind::VarianceLinear);
    r.q1_ = RiskMetric::mean();
    r.q2_ = BiMetric::first_variance();
    return r;
}

RuleSpec RuleSpec::conditional_mean() { return RuleSpec(RuleKind::ConditionalMean); }
RuleSpec RuleSpec::order_statistics() { return RuleSpec(RuleKind::OrderStatistics); }
RuleSpec RuleSpec::all_in_one() { return RuleSpec(RuleKind::AllInOne); }
RuleSpec RuleSpec::stand_alone() { return RuleSpec(RuleKind::StandAlone); }

RuleSpec RuleSpec::hybrid_counterexample(RiskMetric q) {
    RuleSpec r(RuleKind::HybridCounterexample);
    r.q_ = std::move(q);
    return r;
}

RuleSpec RuleSpec::with_policy(DegeneratePolicy policy) const {
    RuleSpec r = *this;
    r.policy_ = policy;
    return r;
}

std::string RuleSpec::id() const {
    switch (kind_) {
        case RuleKind::Uniform:
            return "uniform";
        case RuleKind::QProportional:
            return q_->name() == "mean" ? "mean_prop" : "q_prop(" + q_->name() + ")";
        case RuleKind::WeightedQProportional: {
            std::ostringstream os;
            os << "w_q_prop(" << q_->name() << ";w=";
            for (std::size_t i = 0; i < weights_.size(); ++i) os << (i ? "," : "") << weights_[i];
            os << ")";
            return os.str();
        }
        case RuleKind::Q1Q2Linear:
            return "q1q2_lin(" + q1_->name() + "," + q2_->name() + ")";
        case RuleKind::ScenarioProportional:
            return "scen_prop(" + std::to_string(scenario_atoms_[0]) + ")";
        case RuleKind::ScenarioLinear:
            return "scen_lin(" + std::to_string(scenario_atoms_[0]) + "," +
                   std::to_string(scenario_atoms_[1]) + "," + std::to_string(scenario_atoms_[2]) +
                   ")";
        case RuleKind::CovarianceLinear:
            return "cov_lin";
        case RuleKind::VarianceLinear:
            return "var_lin";
        case RuleKind::ConditionalMean:
            return "cond_mean";
        case RuleKind::OrderStatistics:
            return "order_stat";
        case RuleKind::AllInOne:
            return "all_in_one";
        case RuleKind::StandAlone:
            return "stand_alone";
        case RuleKind::HybridCounterexample:
            return "hybrid(" + q_->name() + ")";
    }
    return "unknown";
}

ContributionMatrix apply(const RuleSpec& rule, const Pool& pool) {
    switch (rule.kind()) {
        case RuleKind::Uniform:
            return uniform_contributions(pool);

        case RuleKind::QProportional:
            return proportional_contributions(pool, *rule.q(), {}, rule.policy(), rule.id());

        case RuleKind::WeightedQProportional: {
            if (rule.participant_weights().size() != pool.participants())
                throw std::invalid_argument(rule.id() + ": " +
                                            std::to_string(rule.participant_weights().size()) +
                                            " weights for " + std::to_string(pool.participants()) +
                                            " participants");
            return proportional_contributions(pool, *rule.q(), rule.participant_weights(),
                                              rule.policy(), rule.id());
        }

        case RuleKind::ScenarioProportional:
            if (rule.scenario_atoms()[0] >= pool.atoms())
                throw std::out_of_range(rule.id() + ": scenario atom out of range for " +
                                        std::to_string(pool.atoms()) + " atoms");
            return proportional_contributions(pool, *rule.q(), {}, rule.policy(), rule.id());

        case RuleKind::Q1Q2Linear:
            return standardized_linear(pool, *rule.q1(), *rule.q2(), rule.policy(), rule.id(),
                                       "sum of " + rule.q2()->name() +
                                           " terms over the pool is 0");

        case RuleKind::CovarianceLinear:
            return standardized_linear(pool, *rule.q1(), *rule.q2(), rule.policy(), rule.id(),
                                       "var(S) = 0, the aggregate loss is deterministic");

        case RuleKind::VarianceLinear:
            return standardized_linear(pool, *rule.q1(), *rule.q2(), rule.policy(), rule.id(),
                                       "all individual losses are deterministic");

        case RuleKind::ScenarioLinear:
            return scenario_linear_contributions(pool, rule.scenario_atoms()[0],
                                                 rule.scenario_atoms()[1], rule.scenario_atoms()[2],
                                                 rule.policy(), rule.id());

        case RuleKind::ConditionalMean:
            return conditional_mean_contributions(pool);

        case RuleKind::OrderStatistics:
            return order_statistics_contributions(pool);

        case RuleKind::AllInOne: {
            Matrix c(pool.participants(), pool.atoms(), 0.0);
            const RandomVariable s = aggregate(pool);
            for (std::size_t j = 0; j < pool.atoms(); ++j) c.at(0, j) = s[j];
            return ContributionMatrix(std::move(c));
        }

        case RuleKind::StandAlone:
            return ContributionMatrix(pool.losses());

        case RuleKind::HybridCounterexample:
            return apply_hybrid_counterexample(*rule.q(), pool);
    }
    throw std::logic_error("apply: unhandled rule kind");
}

ContributionMatrix apply_hybrid_counterexample(const RiskMetric& q, const Pool& pool) {
    std::vector<double> qs(pool.participants());
    for (std::size_t i = 0; i < pool.participants(); ++i) qs[i] = q(pool.loss(i));

    const bool all_equal = std::all_of(qs.begin(), qs.end(), [&](double v) {
        return std::abs(v - qs.front()) <= 1e-9 * std::max(1.0, std::abs(qs.front()));
    });
    if (all_equal) return order_statistics_contributions(pool);

    // Unequal metric values imply a positive total (metrics are nonnegative),
    // so the proportional branch cannot be degenerate.
    return proportional_contributions(pool, q, {}, DegeneratePolicy::Error,
                                      "hybrid(" + q.name() + ")");
}

std::vector<double> expected_contributions(const ContributionMatrix& contributions,
                                           const ProbSpace& space) {
    if (contributions.atoms() != space.atom_count())
        throw std::invalid_argument("expected_contributions: atom count mismatch");
    std::vector<double> out(contributions.participants(), 0.0);
    for (std::size_t i = 0; i < contributions.participants(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < contributions.atoms(); ++j)
            acc += space.weight(j) * contributions.at(i, j);
        out[i] = acc;
    }
    return out;
}

BoundRule bind_rule(const RuleSpec& rule) {
    return BoundRule{rule.id(), [rule](const Pool& pool) { return apply(rule, pool); }};
}

}  // namespace riskshare
