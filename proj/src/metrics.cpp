#include "riskshare/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace riskshare {

namespace {

double parse_double_arg(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument(context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

std::size_t parse_index_arg(std::string_view s, const std::string& context) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument(context + ": cannot parse atom index '" + std::string(s) + "'");
    return v;
}

// Pool rows summed atom-wise; used by the additivity probes.
RandomVariable pool_sum(const Pool& pool) { return aggregate(pool); }

}  // namespace

RiskMetric::RiskMetric(std::string name, std::function<double(const RandomVariable&)> fn,
                       MetricAttributes attrs)
    : name_(std::move(name)), fn_(std::move(fn)), attrs_(attrs) {
    if (!fn_) throw std::invalid_argument("RiskMetric: null evaluator");
}

RiskMetric RiskMetric::constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("RiskMetric::constant: c must be strictly positive");
    return RiskMetric("const:" + std::to_string(c),
                      [c](const RandomVariable&) { return c; },
                      MetricAttributes{false, false});
}

RiskMetric RiskMetric::mean() {
    return RiskMetric("mean", [](const RandomVariable& x) { return expectation(x); },
                      MetricAttributes{true, true});
}

RiskMetric RiskMetric::variance() {
    return RiskMetric("var",
                      [](const RandomVariable& x) { return std::max(0.0, riskshare::variance(x)); },
                      MetricAttributes{true, false});
}

RiskMetric RiskMetric::stddev() {
    return RiskMetric(
        "sd",
        [](const RandomVariable& x) { return std::sqrt(std::max(0.0, riskshare::variance(x))); },
        MetricAttributes{true, false});
}

RiskMetric RiskMetric::scenario(std::size_t atom) {
    RiskMetric q("scenario:" + std::to_string(atom),
                 [atom](const RandomVariable& x) {
                     if (atom >= x.size())
                         throw std::out_of_range("scenario metric: atom " + std::to_string(atom) +
                                                 " out of range for " + std::to_string(x.size()) +
                                                 " atoms");
                     return x[atom];
                 },
                 MetricAttributes{true, true});
    q.scenario_atom_ = atom;
    return q;
}

double RiskMetric::operator()(const RandomVariable& x) const {
    const double v = fn_(x);
    if (!std::isfinite(v))
        throw std::domain_error("risk metric '" + name_ + "' produced a non-finite value");
    if (v < 0.0)
        throw std::domain_error("risk metric '" + name_ + "' produced " + std::to_string(v) +
                                "; metrics must be nonnegative on nonnegative losses");
    return v;
}

double eval_metric(const RiskMetric& q, const RandomVariable& x) { return q(x); }

BiMetric::BiMetric(std::string name,
                   std::function<double(const RandomVariable&, const RandomVariable&)> fn,
                   BiMetricAttributes attrs)
    : name_(std::move(name)), fn_(std::move(fn)), attrs_(attrs) {
    if (!fn_) throw std::invalid_argument("BiMetric: null evaluator");
}

BiMetric BiMetric::covariance() {
    return BiMetric(
        "cov",
        [](const RandomVariable& x, const RandomVariable& s) { return riskshare::covariance(x, s); },
        BiMetricAttributes{true, true});
}

BiMetric BiMetric::first_variance() {
    return BiMetric("first_var",
                    [](const RandomVariable& x, const RandomVariable&) {
                        return std::max(0.0, riskshare::variance(x));
                    },
                    BiMetricAttributes{false, true});
}

BiMetric BiMetric::scenario_range(std::size_t hi, std::size_t lo) {
    BiMetric q2("scenario_range:" + std::to_string(hi) + "," + std::to_string(lo),
                [hi, lo](const RandomVariable& x, const RandomVariable& s) {
                    if (hi >= x.size() || lo >= x.size())
                        throw std::out_of_range("scenario_range metric: atom out of range");
                    return (x[hi] - x[lo]) * (s[hi] - s[lo]);
                },
                BiMetricAttributes{true, true});
    q2.scenario_atom_ = std::max(hi, lo);
    return q2;
}

BiMetric BiMetric::lift(const RiskMetric& q) {
    BiMetric q2("lift:" + q.name(),
                [q](const RandomVariable& x, const RandomVariable&) { return q(x); },
                BiMetricAttributes{q.attributes().additive, q.attributes().normalized});
    q2.scenario_atom_ = q.scenario_atom();
    return q2;
}

double BiMetric::operator()(const RandomVariable& x, const RandomVariable& s) const {
    if (!same_space(x, s))
        throw std::invalid_argument("bimetric '" + name_ + "': arguments live on different spaces");
    const double v = fn_(x, s);
    if (!std::isfinite(v))
        throw std::domain_error("bimetric '" + name_ + "' produced a non-finite value");
    return v;
}

double eval_bimetric(const BiMetric& q2, const RandomVariable& x, const RandomVariable& s) {
    return q2(x, s);
}

AttributeReport verify_attributes(const RiskMetric& q, std::span<const Pool> pools,
                                  const Tolerances& tol) {
    AttributeReport report;
    report.metric = q.name();
    report.normalized.declared = q.attributes().normalized;
    report.additive.declared = q.attributes().additive;

    if (!pools.empty()) {
        const double at_zero = q(zero_rv(pools.front().space_ptr()));
        report.normalized.lhs = at_zero;
        report.normalized.rhs = 0.0;
        if (!tol.close(at_zero, 0.0)) {
            report.normalized.observed = false;
            report.normalized.witness_pool = 0;
        }
    }

    for (std::size_t p = 0; p < pools.size(); ++p) {
        const Pool& pool = pools[p];
        double sum_of_metrics = 0.0;
        for (std::size_t i = 0; i < pool.participants(); ++i) sum_of_metrics += q(pool.loss(i));
        const double metric_of_sum = q(pool_sum(pool));
        if (!tol.close(metric_of_sum, sum_of_metrics)) {
            report.additive.observed = false;
            report.additive.witness_pool = p;
            report.additive.lhs = metric_of_sum;
            report.additive.rhs = sum_of_metrics;
            break;
        }
    }
    return report;
}

BiAttributeReport verify_attributes(const BiMetric& q2, std::span<const Pool> pools,
                                    const Tolerances& tol) {
    BiAttributeReport report;
    report.metric = q2.name();
    report.additive_in_first.declared = q2.attributes().additive_in_first;
    report.zero_at_zero.declared = q2.attributes().zero_at_zero;

    for (std::size_t p = 0; p < pools.size(); ++p) {
        const Pool& pool = pools[p];
        const RandomVariable s = aggregate(pool);

        const double at_zero = q2(zero_rv(pool.space_ptr()), s);
        if (!tol.close(at_zero, 0.0) && report.zero_at_zero.observed) {
            report.zero_at_zero.observed = false;
            report.zero_at_zero.witness_pool = p;
            report.zero_at_zero.lhs = at_zero;
            report.zero_at_zero.rhs = 0.0;
        }

        double sum_of_metrics = 0.0;
        for (std::size_t i = 0; i < pool.participants(); ++i) sum_of_metrics += q2(pool.loss(i), s);
        const double metric_of_sum = q2(s, s);
        if (!tol.close(metric_of_sum, sum_of_metrics) && report.additive_in_first.observed) {
            report.additive_in_first.observed = false;
            report.additive_in_first.witness_pool = p;
            report.additive_in_first.lhs = metric_of_sum;
            report.additive_in_first.rhs = sum_of_metrics;
        }
    }
    return report;
}

MetricRegistry::MetricRegistry() {
    register_metric("mean", [](std::string_view) { return RiskMetric::mean(); });
    register_metric("var", [](std::string_view) { return RiskMetric::variance(); });
    register_metric("sd", [](std::string_view) { return RiskMetric::stddev(); });
    register_metric("const", [](std::string_view args) {
        if (args.empty()) throw std::invalid_argument("const metric: missing value, use const:<c>");
        return RiskMetric::constant(parse_double_arg(args, "const metric"));
    });
    register_metric("scenario", [](std::string_view args) {
        if (args.empty())
            throw std::invalid_argument("scenario metric: missing atom, use scenario:<atom>");
        return RiskMetric::scenario(parse_index_arg(args, "scenario metric"));
    });

    register_bimetric("cov", [](std::string_view) { return BiMetric::covariance(); });
    register_bimetric("first_var", [](std::string_view) { return BiMetric::first_variance(); });
    register_bimetric("scenario_range", [](std::string_view args) {
        const auto comma = args.find(',');
        if (comma == std::string_view::npos)
            throw std::invalid_argument(
                "scenario_range metric: expected scenario_range:<hi>,<lo>");
        return BiMetric::scenario_range(
            parse_index_arg(args.substr(0, comma), "scenario_range metric"),
            parse_index_arg(args.substr(comma + 1), "scenario_range metric"));
    });
    register_bimetric("lift", [](std::string_view args) {
        if (args.empty()) throw std::invalid_argument("lift metric: use lift:<metric spec>");
        return BiMetric::lift(parse_metric(args));
    });
}

MetricRegistry& MetricRegistry::instance() {
    static MetricRegistry registry;
    return registry;
}

void MetricRegistry::register_metric(const std::string& name, MetricFactory factory) {
    metric_factories_.emplace_back(name, std::move(factory));
}

void MetricRegistry::register_bimetric(const std::string& name, BiMetricFactory factory) {
    bimetric_factories_.emplace_back(name, std::move(factory));
}

namespace {
std::pair<std::string_view, std::string_view> split_spec(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) return {spec, {}};
    return {spec.substr(0, colon), spec.substr(colon + 1)};
}
}  // namespace

RiskMetric MetricRegistry::make_metric(std::string_view spec) const {
    auto [name, args] = split_spec(spec);
    for (const auto& [key, factory] : metric_factories_)
        if (key == name) return factory(args);
    throw std::invalid_argument("unknown risk metric '" + std::string(spec) + "'");
}

BiMetric MetricRegistry::make_bimetric(std::string_view spec) const {
    auto [name, args] = split_spec(spec);
    for (const auto& [key, factory] : bimetric_factories_)
        if (key == name) return factory(args);
    throw std::invalid_argument("unknown bimetric '" + std::string(spec) + "'");
}

RiskMetric parse_metric(std::string_view spec) {
    return MetricRegistry::instance().make_metric(spec);
}

BiMetric parse_bimetric(std::string_view spec) {
    return MetricRegistry::instance().make_bimetric(spec);
}

}  // namespace riskshare
