#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "riskshare/axioms.hpp"

namespace riskshare {

std::string to_string(TheoremId id) {
    switch (id) {
        case TheoremId::T1: return "T1";
        case TheoremId::T2: return "T2";
        case TheoremId::T3: return "T3";
        case TheoremId::T4: return "T4";
        case TheoremId::T5: return "T5";
        case TheoremId::T6: return "T6";
    }
    return "?";
}

// ---- classification --------------------------------------------------------

std::vector<RuleSpec> table_rules(std::size_t atoms) {
    if (atoms < 2) throw std::invalid_argument("classification needs at least 2 atoms");
    std::vector<RuleSpec> rules = {
        RuleSpec::order_statistics(),
        RuleSpec::conditional_mean(),
        RuleSpec::mean_proportional(),
        RuleSpec::scenario_proportional(0),
        RuleSpec::scenario_linear(0, atoms - 1, 0),
        RuleSpec::all_in_one(),
        RuleSpec::uniform(),
    };
    for (RuleSpec& r : rules) r = r.with_policy(DegeneratePolicy::UniformFallback);
    return rules;
}

const std::vector<std::vector<bool>>& expected_table_pattern() {
    // Rows follow table_rules(); columns are reshuffling, source anonymity,
    // aggregate, strongly aggregate. true means "violated".
    static const std::vector<std::vector<bool>> pattern = {
        {true, false, true, true},    // order_stat
        {false, true, false, true},   // cond_mean
        {false, true, false, true},   // mean_prop
        {false, true, false, true},   // scen_prop
        {false, true, false, true},   // scen_lin
        {true, false, false, false},  // all_in_one
        {false, false, false, false}, // uniform
    };
    return pattern;
}

ClassificationMatrix classify(std::span<const RuleSpec> rules, const Battery& battery,
                              const Tolerances& tol) {
    ClassificationMatrix matrix;
    matrix.seed = battery.seed();
    matrix.sizes = battery.sizes();
    matrix.properties = {PropertyKind::Reshuffling, PropertyKind::SourceAnonymous,
                         PropertyKind::Aggregate, PropertyKind::StronglyAggregate};

    for (const RuleSpec& spec : rules) {
        const BoundRule rule = bind_rule(spec);
        matrix.rule_ids.push_back(rule.id);
        std::vector<PropertyReport> row;
        row.reserve(matrix.properties.size());
        for (PropertyKind kind : matrix.properties)
            row.push_back(check_on_battery({kind, {}, {}, {}}, rule, battery, tol));
        matrix.cells.push_back(std::move(row));
    }

    // Compare against the reference pattern when the default rule set ran.
    const std::vector<RuleSpec> defaults = table_rules(std::max<std::size_t>(2, battery.sizes().atoms));
    if (rules.size() == defaults.size()) {
        bool same_ids = true;
        for (std::size_t r = 0; r < rules.size(); ++r)
            if (matrix.rule_ids[r] != defaults[r].id()) same_ids = false;
        if (same_ids) matrix.matches_expected = matches_table_pattern(matrix);
    }
    return matrix;
}

bool matches_table_pattern(const ClassificationMatrix& matrix) {
    const auto& pattern = expected_table_pattern();
    if (matrix.cells.size() != pattern.size()) return false;
    for (std::size_t r = 0; r < pattern.size(); ++r) {
        if (matrix.cells[r].size() != pattern[r].size()) return false;
        for (std::size_t p = 0; p < pattern[r].size(); ++p) {
            const Verdict expected =
                pattern[r][p] ? Verdict::Violated : Verdict::HoldsOnBattery;
            if (matrix.cells[r][p].verdict != expected) return false;
        }
    }
    return true;
}

// ---- theorems --------------------------------------------------------------

namespace {

// Every catalog rule the uniqueness scans probe, bound with the uniform
// fallback so degenerate pools cannot hide a violation behind a skip.
std::vector<RuleSpec> uniqueness_catalog(const TheoremMetrics& metrics, std::size_t participants,
                                         std::size_t atoms) {
    std::vector<double> weights(participants);
    for (std::size_t i = 0; i < participants; ++i) weights[i] = double(i + 1);

    std::vector<RuleSpec> catalog = {
        RuleSpec::uniform(),
        RuleSpec::q_proportional(metrics.q),
        RuleSpec::mean_proportional(),
        RuleSpec::q_proportional(RiskMetric::variance()),
        RuleSpec::q_proportional(RiskMetric::stddev()),
        RuleSpec::scenario_proportional(0),
        RuleSpec::weighted_q_proportional(metrics.q, weights),
        RuleSpec::q1q2_linear(metrics.q1, metrics.q2),
        RuleSpec::covariance_linear(),
        RuleSpec::variance_linear(),
        RuleSpec::scenario_linear(0, atoms - 1, 0),
        RuleSpec::conditional_mean(),
        RuleSpec::order_statistics(),
        RuleSpec::all_in_one(),
        RuleSpec::stand_alone(),
        RuleSpec::hybrid_counterexample(metrics.q),
    };

    std::vector<RuleSpec> out;
    for (RuleSpec& r : catalog) {
        RuleSpec with_fallback = r.with_policy(DegeneratePolicy::UniformFallback);
        const std::string id = with_fallback.id();
        bool seen = false;
        for (const RuleSpec& existing : out)
            if (existing.id() == id) seen = true;
        if (!seen) out.push_back(std::move(with_fallback));
    }
    return out;
}

struct AxiomSet {
    std::vector<CheckRequest> requests;
};

AxiomSet axioms_for(TheoremId id, const TheoremMetrics& metrics) {
    switch (id) {
        case TheoremId::T1:
            return {{{PropertyKind::Reshuffling, {}, {}, {}},
                     {PropertyKind::SourceAnonymous, {}, {}, {}}}};
        case TheoremId::T2:
            return {{{PropertyKind::Reshuffling, {}, {}, {}},
                     {PropertyKind::StronglyAggregate, {}, {}, {}}}};
        case TheoremId::T3:
            return {{{PropertyKind::Reshuffling, {}, {}, {}},
                     {PropertyKind::SourceAnonymousQRatio, metrics.q, {}, {}}}};
        case TheoremId::T4:
            return {{{PropertyKind::StronglyAggregateQRatio, metrics.q, {}, {}}}};
        case TheoremId::T5:
            return {{{PropertyKind::Reshuffling, {}, {}, {}},
                     {PropertyKind::SourceAnonymousStd, {}, metrics.q1, metrics.q2}}};
        case TheoremId::T6:
            return {{{PropertyKind::StronglyAggregateStd, {}, metrics.q1, metrics.q2}}};
    }
    throw std::logic_error("unknown theorem");
}

RuleSpec named_rule_for(TheoremId id, const TheoremMetrics& metrics) {
    switch (id) {
        case TheoremId::T1:
        case TheoremId::T2:
            return RuleSpec::uniform();
        case TheoremId::T3:
        case TheoremId::T4:
            return RuleSpec::q_proportional(metrics.q);
        case TheoremId::T5:
        case TheoremId::T6:
            return RuleSpec::q1q2_linear(metrics.q1, metrics.q2);
    }
    throw std::logic_error("unknown theorem");
}

struct IndependencePlan {
    RuleSpec rule;
    std::size_t pass_axiom;  // index into the axiom set
    std::size_t fail_axiom;
};

std::vector<IndependencePlan> independence_plans(TheoremId id, const TheoremMetrics& metrics) {
    switch (id) {
        case TheoremId::T1:
            return {{RuleSpec::stand_alone(), 0, 1}, {RuleSpec::order_statistics(), 1, 0}};
        case TheoremId::T2:
            return {{RuleSpec::stand_alone(), 0, 1}, {RuleSpec::all_in_one(), 1, 0}};
        case TheoremId::T3:
            return {{RuleSpec::stand_alone(), 0, 1},
                    {RuleSpec::hybrid_counterexample(metrics.q), 1, 0}};
        case TheoremId::T4:
            return {};
        case TheoremId::T5:
            return {{RuleSpec::stand_alone(), 0, 1}};
        case TheoremId::T6:
            return {};
    }
    throw std::logic_error("unknown theorem");
}

// Largest |a - b| over all pools, participants and atoms, plus a per-slot
// closeness verdict under `tol`.
std::pair<double, bool> compare_rules(const BoundRule& a, const BoundRule& b,
                                      std::span<const Pool> pools, const Tolerances& tol) {
    double max_dev = 0.0;
    bool all_close = true;
    for (const Pool& pool : pools) {
        const ContributionMatrix ca = a(pool);
        const ContributionMatrix cb = b(pool);
        for (std::size_t i = 0; i < ca.participants(); ++i)
            for (std::size_t j = 0; j < ca.atoms(); ++j) {
                const double dev = std::abs(ca.at(i, j) - cb.at(i, j));
                max_dev = std::max(max_dev, dev);
                if (!tol.close(ca.at(i, j), cb.at(i, j))) all_close = false;
            }
    }
    return {max_dev, all_close};
}

}  // namespace

TheoremReport run_theorem(TheoremId id, const Battery& battery, const TheoremMetrics& metrics,
                          const Tolerances& tol) {
    TheoremReport report;
    report.id = id;

    const AxiomSet axioms = axioms_for(id, metrics);
    const RuleSpec named_spec =
        named_rule_for(id, metrics).with_policy(DegeneratePolicy::UniformFallback);
    const BoundRule named = bind_rule(named_spec);
    report.named_rule_id = named.id;

    report.only_if_ok = true;
    for (const CheckRequest& request : axioms.requests) {
        PropertyReport r = check_on_battery(request, named, battery, tol);
        if (!r.holds()) report.only_if_ok = false;
        report.named_rule_reports.push_back(std::move(r));
    }

    const std::size_t n = battery.pools().empty() ? 1 : battery.pools().front().participants();
    const std::size_t m = battery.sizes().atoms;

    report.uniqueness_ok = true;
    for (const RuleSpec& spec : uniqueness_catalog(metrics, n, m)) {
        const BoundRule rule = bind_rule(spec);
        UniquenessRecord record;
        record.rule_id = rule.id;
        record.passes_all = true;
        for (const CheckRequest& request : axioms.requests) {
            const PropertyReport r = check_on_battery(request, rule, battery, tol);
            if (!r.holds()) {
                record.passes_all = false;
                break;
            }
        }
        if (record.passes_all) {
            const auto [max_dev, all_close] = compare_rules(rule, named, battery.pools(), tol);
            record.max_deviation_vs_named = max_dev;
            record.coincides = all_close;
            if (!record.coincides) report.uniqueness_ok = false;
        }
        report.uniqueness.push_back(std::move(record));
    }

    report.independence_ok = true;
    for (const IndependencePlan& plan : independence_plans(id, metrics)) {
        const BoundRule rule = bind_rule(plan.rule.with_policy(DegeneratePolicy::UniformFallback));
        IndependenceRecord record;
        record.rule_id = rule.id;
        record.expected_pass = axioms.requests[plan.pass_axiom].kind;
        record.expected_fail = axioms.requests[plan.fail_axiom].kind;
        record.pass_report = check_on_battery(axioms.requests[plan.pass_axiom], rule, battery, tol);
        record.fail_report = check_on_battery(axioms.requests[plan.fail_axiom], rule, battery, tol);
        record.as_expected = record.pass_report.holds() && record.fail_report.violated();
        if (!record.as_expected) report.independence_ok = false;
        report.independence.push_back(std::move(record));
    }

    return report;
}

// ---- implication audit -----------------------------------------------------

std::vector<std::string> implication_audit(std::span<const PropertyReport> reports) {
    std::vector<std::string> offenders;
    for (const PropertyReport& strong : reports) {
        if (strong.kind != PropertyKind::StronglyAggregate || !strong.holds()) continue;
        for (const PropertyReport& anon : reports) {
            if (anon.kind != PropertyKind::SourceAnonymous || anon.rule_id != strong.rule_id)
                continue;
            if (anon.violated() &&
                std::find(offenders.begin(), offenders.end(), strong.rule_id) == offenders.end())
                offenders.push_back(strong.rule_id);
        }
    }
    return offenders;
}

std::vector<std::string> implication_audit(const ClassificationMatrix& matrix) {
    std::vector<PropertyReport> flat;
    for (const auto& row : matrix.cells)
        for (const auto& cell : row) flat.push_back(cell);
    return implication_audit(flat);
}

}  // namespace riskshare
