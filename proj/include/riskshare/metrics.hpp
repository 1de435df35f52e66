#pragma once
// Risk metrics q[X] and bimetrics q2[X, S] used to parameterize sharing rules,
// together with the attribute flags (normalized / additive) that the stronger
// axiom checks require, and a battery-driven audit of those flags.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskshare/prob_core.hpp"

namespace riskshare {

struct MetricAttributes {
    bool normalized = false;  // q[0] == 0
    bool additive = false;    // q[sum X_k] == sum q[X_k]
};

// Scalar risk metric. Builtins: constant(c), mean, variance, stddev,
// scenario(atom). Custom metrics carry their own evaluator and declared flags.
class RiskMetric {
   public:
    RiskMetric(std::string name, std::function<double(const RandomVariable&)> fn,
               MetricAttributes attrs);

    static RiskMetric constant(double c);  // c > 0; neither normalized nor additive
    static RiskMetric mean();              // normalized + additive
    static RiskMetric variance();          // normalized, not additive (correlation)
    static RiskMetric stddev();            // normalized, not additive
    static RiskMetric scenario(std::size_t atom);  // X(atom); normalized + additive

    const std::string& name() const { return name_; }
    const MetricAttributes& attributes() const { return attrs_; }

    // Largest atom index the metric reads, if any; io validates it per pool.
    std::optional<std::size_t> scenario_atom() const { return scenario_atom_; }

    double operator()(const RandomVariable& x) const;

   private:
    std::string name_;
    std::function<double(const RandomVariable&)> fn_;
    MetricAttributes attrs_;
    std::optional<std::size_t> scenario_atom_;
};

// q[X] >= 0 enforced at evaluation; a negative result is a contract breach.
double eval_metric(const RiskMetric& q, const RandomVariable& x);

struct BiMetricAttributes {
    bool additive_in_first = false;  // q2[X+Y, S] == q2[X, S] + q2[Y, S]
    bool zero_at_zero = false;       // q2[0, S] == 0
};

// Two-argument metric q2[X, S]. Builtins: covariance, first_variance (ignores
// the second argument), scenario_range(hi, lo), lift(q) (ignores the second
// argument and evaluates q on the first).
class BiMetric {
   public:
    BiMetric(std::string name,
             std::function<double(const RandomVariable&, const RandomVariable&)> fn,
             BiMetricAttributes attrs);

    static BiMetric covariance();
    static BiMetric first_variance();
    static BiMetric scenario_range(std::size_t hi, std::size_t lo);
    static BiMetric lift(const RiskMetric& q);

    const std::string& name() const { return name_; }
    const BiMetricAttributes& attributes() const { return attrs_; }
    std::optional<std::size_t> scenario_atom() const { return scenario_atom_; }

    double operator()(const RandomVariable& x, const RandomVariable& s) const;

   private:
    std::string name_;
    std::function<double(const RandomVariable&, const RandomVariable&)> fn_;
    BiMetricAttributes attrs_;
    std::optional<std::size_t> scenario_atom_;
};

double eval_bimetric(const BiMetric& q2, const RandomVariable& x, const RandomVariable& s);

// Outcome of probing a declared flag against a battery of pools. A flag
// "holds" when no pool produced a counterexample; the first counterexample is
// kept as a witness.
struct FlagObservation {
    bool declared = false;
    bool observed = true;
    std::optional<std::size_t> witness_pool;
    double lhs = 0.0;  // metric of the sum (or of the zero variable)
    double rhs = 0.0;  // sum of metrics (or 0)
};

struct AttributeReport {
    std::string metric;
    FlagObservation normalized;
    FlagObservation additive;

    // Declared flags are confirmed by the battery and nothing observed
    // contradicts a declaration.
    bool confirms_declared() const {
        return (!normalized.declared || normalized.observed) &&
               (!additive.declared || additive.observed);
    }
};

struct BiAttributeReport {
    std::string metric;
    FlagObservation additive_in_first;
    FlagObservation zero_at_zero;

    bool confirms_declared() const {
        return (!additive_in_first.declared || additive_in_first.observed) &&
               (!zero_at_zero.declared || zero_at_zero.observed);
    }
};

// Probes q[0] == 0 and per-pool q[S] == sum q[X_i] within `tol`.
AttributeReport verify_attributes(const RiskMetric& q, std::span<const Pool> pools,
                                  const Tolerances& tol = {});

// Probes q2[0, S] == 0 and per-pool q2[S, S] == sum q2[X_i, S] within `tol`.
BiAttributeReport verify_attributes(const BiMetric& q2, std::span<const Pool> pools,
                                    const Tolerances& tol = {});

// Name-keyed construction for CLI/config use: "mean", "const:2.5", "var",
// "sd", "scenario:1" and "cov", "first_var", "scenario_range:2,0", "lift:mean".
// User code may register additional factories at startup; the registry is
// written once and read-only afterwards.
class MetricRegistry {
   public:
    using MetricFactory = std::function<RiskMetric(std::string_view args)>;
    using BiMetricFactory = std::function<BiMetric(std::string_view args)>;

    static MetricRegistry& instance();

    void register_metric(const std::string& name, MetricFactory factory);
    void register_bimetric(const std::string& name, BiMetricFactory factory);

    // Spec format: "name" or "name:args". Throws std::invalid_argument for
    // unknown names or malformed arguments.
    RiskMetric make_metric(std::string_view spec) const;
    BiMetric make_bimetric(std::string_view spec) const;

   private:
    MetricRegistry();
    std::vector<std::pair<std::string, MetricFactory>> metric_factories_;
    std::vector<std::pair<std::string, BiMetricFactory>> bimetric_factories_;
};

RiskMetric parse_metric(std::string_view spec);
BiMetric parse_bimetric(std::string_view spec);

}  // namespace riskshare
