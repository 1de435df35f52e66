#include "riskshare/axioms.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace riskshare {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::HoldsOnBattery: return "holds_on_battery";
        case Verdict::Violated: return "violated";
        case Verdict::Skipped: return "skipped";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(PropertyKind k) {
    switch (k) {
        case PropertyKind::FullAllocation: return "full_allocation";
        case PropertyKind::Reshuffling: return "reshuffling";
        case PropertyKind::SourceAnonymous: return "source_anonymous";
        case PropertyKind::Aggregate: return "aggregate";
        case PropertyKind::StronglyAggregate: return "strongly_aggregate";
        case PropertyKind::SourceAnonymousQRatio: return "source_anonymous_q_ratio";
        case PropertyKind::StronglyAggregateQRatio: return "strongly_aggregate_q_ratio";
        case PropertyKind::SourceAnonymousStd: return "source_anonymous_std";
        case PropertyKind::StronglyAggregateStd: return "strongly_aggregate_std";
    }
    return "?";
}

namespace {

PropertyReport make_report(const BoundRule& rule, PropertyKind kind) {
    PropertyReport r;
    r.rule_id = rule.id;
    r.rule = rule;
    r.kind = kind;
    return r;
}

void mark_skipped(PropertyReport& report, const std::string& reason) {
    report.verdict = Verdict::Skipped;
    report.reason = reason;
    ++report.pools_skipped;
}

// Evaluate the metric on every pool row once.
std::vector<double> metric_row_values(const RiskMetric& q, const Pool& pool) {
    std::vector<double> out(pool.participants());
    for (std::size_t i = 0; i < pool.participants(); ++i) out[i] = q(pool.loss(i));
    return out;
}

std::vector<double> bimetric_row_values(const BiMetric& q2, const Pool& pool,
                                        const RandomVariable& s) {
    std::vector<double> out(pool.participants());
    for (std::size_t i = 0; i < pool.participants(); ++i) out[i] = q2(pool.loss(i), s);
    return out;
}

// Distinguishes structural zeros from rounding garbage: a metric value within
// 1e-12 of zero, relative to the largest value in its pool, acts as an exact
// zero. The ratio scopes divide by these values, and e.g. the covariance of a
// constant loss row computes to ~1e-28 instead of 0, which would turn pure
// noise into astronomical ratios.
constexpr double METRIC_ZERO_REL = 1e-12;

std::vector<bool> effective_zeros(const std::vector<double>& vals) {
    double scale = 1.0;
    for (double v : vals) scale = std::max(scale, std::abs(v));
    std::vector<bool> zero(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        zero[i] = std::abs(vals[i]) <= METRIC_ZERO_REL * scale;
    return zero;
}

std::string label_at(std::span<const std::string> labels, std::size_t index) {
    return index < labels.size() ? labels[index] : "pool_" + std::to_string(index);
}

}  // namespace

PropertyReport check_full_allocation(const BoundRule& rule, const Pool& pool,
                                     const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::FullAllocation);
    const Tolerances tol = full_allocation_tolerances();

    ContributionMatrix c;
    try {
        c = rule(pool);
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
        return report;
    }

    const RandomVariable s = aggregate(pool);
    report.pools_checked = 1;
    for (std::size_t j = 0; j < pool.atoms(); ++j) {
        double col_sum = 0.0;
        for (std::size_t i = 0; i < c.participants(); ++i) col_sum += c.at(i, j);
        if (!tol.close(col_sum, s[j])) {
            report.verdict = Verdict::Violated;
            report.witness = Witness{pool_label, pool,          std::nullopt, j, std::nullopt,
                                     "",         std::nullopt, std::nullopt, col_sum, s[j], tol};
            return report;
        }
    }
    return report;
}

PropertyReport check_reshuffling(const BoundRule& rule, const Pool& pool,
                                 std::span<const Permutation> perms, const Tolerances& tol,
                                 const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::Reshuffling);
    try {
        const ContributionMatrix c = rule(pool);
        report.pools_checked = 1;
        for (const Permutation& perm : perms) {
            ++report.perms_used;
            const ContributionMatrix cp = rule(reshuffle(pool, perm));
            for (std::size_t i = 0; i < pool.participants(); ++i)
                for (std::size_t j = 0; j < pool.atoms(); ++j) {
                    const double lhs = cp.at(i, j);
                    const double rhs = c.at(perm(i), j);
                    if (!tol.close(lhs, rhs)) {
                        report.verdict = Verdict::Violated;
                        report.witness = Witness{pool_label, pool,          perm,        j, i, "",
                                                 std::nullopt, std::nullopt, lhs, rhs, tol};
                        return report;
                    }
                }
        }
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
    }
    return report;
}

PropertyReport check_source_anonymous(const BoundRule& rule, const Pool& pool,
                                      std::span<const Permutation> perms, const Tolerances& tol,
                                      const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::SourceAnonymous);
    try {
        const ContributionMatrix c = rule(pool);
        report.pools_checked = 1;
        for (const Permutation& perm : perms) {
            ++report.perms_used;
            const ContributionMatrix cp = rule(reshuffle(pool, perm));
            for (std::size_t i = 0; i < pool.participants(); ++i)
                for (std::size_t j = 0; j < pool.atoms(); ++j) {
                    const double lhs = cp.at(i, j);
                    const double rhs = c.at(i, j);
                    if (!tol.close(lhs, rhs)) {
                        report.verdict = Verdict::Violated;
                        report.witness = Witness{pool_label, pool,          perm,        j, i, "",
                                                 std::nullopt, std::nullopt, lhs, rhs, tol};
                        return report;
                    }
                }
        }
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
    }
    return report;
}

PropertyReport check_aggregate(const BoundRule& rule, const Pool& pool, const Tolerances& tol,
                               const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::Aggregate);
    ContributionMatrix c;
    try {
        c = rule(pool);
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
        return report;
    }

    const RandomVariable s = aggregate(pool);
    report.pools_checked = 1;
    for (const auto& group : level_groups(s.values())) {
        const std::size_t ref = group.front();
        for (std::size_t k = 1; k < group.size(); ++k) {
            const std::size_t j = group[k];
            for (std::size_t i = 0; i < pool.participants(); ++i) {
                const double lhs = c.at(i, j);
                const double rhs = c.at(i, ref);
                if (!tol.close(lhs, rhs)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{pool_label, pool, std::nullopt, j,  i,
                                             pool_label, std::nullopt, ref, lhs, rhs, tol};
                    return report;
                }
            }
        }
    }
    return report;
}

PropertyReport check_strongly_aggregate(const BoundRule& rule, std::span<const Pool> pools,
                                        const Tolerances& tol,
                                        std::span<const std::string> labels) {
    PropertyReport report = make_report(rule, PropertyKind::StronglyAggregate);

    struct Slot {
        std::size_t pool;
        std::size_t atom;
        double s;
    };
    std::vector<Slot> slots;
    std::vector<std::optional<ContributionMatrix>> contributions(pools.size());
    std::vector<RandomVariable> aggregates;
    aggregates.reserve(pools.size());

    for (std::size_t p = 0; p < pools.size(); ++p) {
        aggregates.push_back(aggregate(pools[p]));
        try {
            contributions[p] = rule(pools[p]);
        } catch (const DegeneratePoolError&) {
            ++report.pools_skipped;
            continue;
        }
        ++report.pools_checked;
        for (std::size_t j = 0; j < pools[p].atoms(); ++j)
            slots.push_back({p, j, aggregates[p][j]});
    }

    if (report.pools_checked < 2) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "needs at least two non-degenerate pools on a shared space";
        return report;
    }

    bool cross_collision = false;
    for (std::size_t a = 0; a < slots.size(); ++a)
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            if (!same_level(slots[a].s, slots[b].s)) continue;
            if (slots[a].pool != slots[b].pool) cross_collision = true;
            const auto& ca = *contributions[slots[a].pool];
            const auto& cb = *contributions[slots[b].pool];
            for (std::size_t i = 0; i < ca.participants(); ++i) {
                const double lhs = ca.at(i, slots[a].atom);
                const double rhs = cb.at(i, slots[b].atom);
                if (!tol.close(lhs, rhs)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{label_at(labels, slots[a].pool),
                                             pools[slots[a].pool],
                                             std::nullopt,
                                             slots[a].atom,
                                             i,
                                             label_at(labels, slots[b].pool),
                                             pools[slots[b].pool],
                                             slots[b].atom,
                                             lhs,
                                             rhs,
                                             tol};
                    return report;
                }
            }
        }

    if (!cross_collision) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "battery produced no cross-pool aggregate collision";
    }
    return report;
}

PropertyReport check_source_anonymous_q_ratio(const BoundRule& rule, const RiskMetric& q,
                                              const Pool& pool,
                                              std::span<const Permutation> perms,
                                              const Tolerances& tol,
                                              const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::SourceAnonymousQRatio);
    report.q = q;
    try {
        const ContributionMatrix c = rule(pool);
        const std::vector<double> qs = metric_row_values(q, pool);
        const std::vector<bool> zero = effective_zeros(qs);
        report.pools_checked = 1;
        for (const Permutation& perm : perms) {
            ++report.perms_used;
            const ContributionMatrix cp = rule(reshuffle(pool, perm));
            for (std::size_t i = 0; i < pool.participants(); ++i) {
                if (zero[i]) continue;  // the ratio property scopes q[X_i] > 0
                const double ratio = qs[perm(i)] / qs[i];
                for (std::size_t j = 0; j < pool.atoms(); ++j) {
                    const double lhs = cp.at(i, j);
                    const double rhs = ratio * c.at(i, j);
                    if (!tol.close(lhs, rhs)) {
                        report.verdict = Verdict::Violated;
                        report.witness = Witness{pool_label, pool,          perm,        j, i, "",
                                                 std::nullopt, std::nullopt, lhs, rhs, tol};
                        return report;
                    }
                }
            }
        }
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
    }
    return report;
}

namespace {

void require_metric_audit(const RiskMetric& q, std::span<const Pool> pools, const Tolerances& tol) {
    if (!q.attributes().normalized || !q.attributes().additive)
        throw MetricAuditError("metric '" + q.name() +
                               "' is not flagged normalized+additive; the strongly aggregate "
                               "ratio checks refuse unflagged metrics");
    const AttributeReport audit = verify_attributes(q, pools, tol);
    if (!audit.confirms_declared())
        throw MetricAuditError("battery audit contradicts the declared flags of metric '" +
                               q.name() + "'");
}

void require_bimetric_audit(const BiMetric& q2, std::span<const Pool> pools,
                            const Tolerances& tol) {
    if (!q2.attributes().zero_at_zero || !q2.attributes().additive_in_first)
        throw MetricAuditError("bimetric '" + q2.name() +
                               "' is not flagged zero-at-zero + additive-in-first; the strongly "
                               "aggregate standardized check refuses unflagged metrics");
    const BiAttributeReport audit = verify_attributes(q2, pools, tol);
    if (!audit.confirms_declared())
        throw MetricAuditError("battery audit contradicts the declared flags of bimetric '" +
                               q2.name() + "'");
}

}  // namespace

PropertyReport check_strongly_aggregate_q_ratio(const BoundRule& rule, const RiskMetric& q,
                                                std::span<const Pool> pools,
                                                const Tolerances& tol,
                                                std::span<const std::string> labels) {
    require_metric_audit(q, pools, tol);

    PropertyReport report = make_report(rule, PropertyKind::StronglyAggregateQRatio);
    report.q = q;

    struct PoolData {
        ContributionMatrix c;
        RandomVariable s;
        double q_of_s;
        std::vector<double> qs;
        std::vector<bool> zero;
    };
    std::vector<std::optional<PoolData>> data(pools.size());

    for (std::size_t p = 0; p < pools.size(); ++p) {
        try {
            ContributionMatrix c = rule(pools[p]);
            RandomVariable s = aggregate(pools[p]);
            const double q_of_s = q(s);
            std::vector<double> qs = metric_row_values(q, pools[p]);
            std::vector<bool> zero = effective_zeros(qs);
            data[p] = PoolData{std::move(c), std::move(s), q_of_s, std::move(qs),
                               std::move(zero)};
            ++report.pools_checked;
        } catch (const DegeneratePoolError&) {
            ++report.pools_skipped;
        }
    }

    // Zero-metric participants must contribute nothing: C_i = q[X_i] * h_i(...).
    for (std::size_t p = 0; p < pools.size(); ++p) {
        if (!data[p]) continue;
        const PoolData& d = *data[p];
        for (std::size_t i = 0; i < pools[p].participants(); ++i) {
            if (!d.zero[i]) continue;
            for (std::size_t j = 0; j < pools[p].atoms(); ++j) {
                const double lhs = d.c.at(i, j);
                if (!tol.close(lhs, 0.0)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{label_at(labels, p), pools[p], std::nullopt, j,   i,
                                             "",  std::nullopt,  std::nullopt,           lhs, 0.0,
                                             tol};
                    return report;
                }
            }
        }
    }

    // Contribution-over-metric ratios must agree wherever (S(w), q[S]) match.
    struct Slot {
        std::size_t pool;
        std::size_t atom;
    };
    std::vector<Slot> slots;
    for (std::size_t p = 0; p < pools.size(); ++p) {
        if (!data[p]) continue;
        for (std::size_t j = 0; j < pools[p].atoms(); ++j) slots.push_back({p, j});
    }

    if (report.pools_checked < 2) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "needs at least two non-degenerate pools on a shared space";
        return report;
    }

    bool cross_collision = false;
    for (std::size_t a = 0; a < slots.size(); ++a)
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            const PoolData& da = *data[slots[a].pool];
            const PoolData& db = *data[slots[b].pool];
            if (!same_level(da.s[slots[a].atom], db.s[slots[b].atom])) continue;
            if (!same_level(da.q_of_s, db.q_of_s)) continue;
            if (slots[a].pool != slots[b].pool) cross_collision = true;
            for (std::size_t i = 0; i < da.c.participants(); ++i) {
                if (da.zero[i] || db.zero[i]) continue;
                const double lhs = da.c.at(i, slots[a].atom) / da.qs[i];
                const double rhs = db.c.at(i, slots[b].atom) / db.qs[i];
                if (!tol.close(lhs, rhs)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{label_at(labels, slots[a].pool),
                                             pools[slots[a].pool],
                                             std::nullopt,
                                             slots[a].atom,
                                             i,
                                             label_at(labels, slots[b].pool),
                                             pools[slots[b].pool],
                                             slots[b].atom,
                                             lhs,
                                             rhs,
                                             tol};
                    return report;
                }
            }
        }

    if (!cross_collision) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "battery produced no cross-pool collision on (S, q[S])";
    }
    return report;
}

PropertyReport check_source_anonymous_std(const BoundRule& rule, const RiskMetric& q1,
                                          const BiMetric& q2, const Pool& pool,
                                          std::span<const Permutation> perms,
                                          const Tolerances& tol, const std::string& pool_label) {
    PropertyReport report = make_report(rule, PropertyKind::SourceAnonymousStd);
    report.q1 = q1;
    report.q2 = q2;
    try {
        const ContributionMatrix c = rule(pool);
        const RandomVariable s = aggregate(pool);
        const std::vector<double> q1s = metric_row_values(q1, pool);
        const std::vector<double> q2s = bimetric_row_values(q2, pool, s);
        const std::vector<bool> zero = effective_zeros(q2s);
        report.pools_checked = 1;
        for (const Permutation& perm : perms) {
            ++report.perms_used;
            const ContributionMatrix cp = rule(reshuffle(pool, perm));
            for (std::size_t i = 0; i < pool.participants(); ++i) {
                if (zero[i]) continue;  // standardization scopes q2[X_i, S] != 0
                const double ratio = q2s[perm(i)] / q2s[i];
                for (std::size_t j = 0; j < pool.atoms(); ++j) {
                    const double lhs = cp.at(i, j) - q1s[perm(i)];
                    const double rhs = ratio * (c.at(i, j) - q1s[i]);
                    if (!tol.close(lhs, rhs)) {
                        report.verdict = Verdict::Violated;
                        report.witness = Witness{pool_label, pool,          perm,        j, i, "",
                                                 std::nullopt, std::nullopt, lhs, rhs, tol};
                        return report;
                    }
                }
            }
        }
    } catch (const DegeneratePoolError& e) {
        mark_skipped(report, e.what());
    }
    return report;
}

PropertyReport check_strongly_aggregate_std(const BoundRule& rule, const RiskMetric& q1,
                                            const BiMetric& q2, std::span<const Pool> pools,
                                            const Tolerances& tol,
                                            std::span<const std::string> labels) {
    require_metric_audit(q1, pools, tol);
    require_bimetric_audit(q2, pools, tol);

    PropertyReport report = make_report(rule, PropertyKind::StronglyAggregateStd);
    report.q1 = q1;
    report.q2 = q2;

    struct PoolData {
        ContributionMatrix c;
        RandomVariable s;
        double q1_of_s;
        double q2_of_ss;
        std::vector<double> q1s;
        std::vector<double> q2s;
        std::vector<bool> zero;
    };
    std::vector<std::optional<PoolData>> data(pools.size());

    for (std::size_t p = 0; p < pools.size(); ++p) {
        try {
            ContributionMatrix c = rule(pools[p]);
            RandomVariable s = aggregate(pools[p]);
            const double q1_of_s = q1(s);
            const double q2_of_ss = q2(s, s);
            data[p] = PoolData{std::move(c),       std::move(s),
                               q1_of_s,            q2_of_ss,
                               metric_row_values(q1, pools[p]),
                               {},                 {}};
            data[p]->q2s = bimetric_row_values(q2, pools[p], data[p]->s);
            data[p]->zero = effective_zeros(data[p]->q2s);
            ++report.pools_checked;
        } catch (const DegeneratePoolError&) {
            ++report.pools_skipped;
        }
    }

    // Participants the bimetric cannot see must sit at their q1 base:
    // C_i = q1[X_i] + q2[X_i, S] * h_i(...) with q2[X_i, S] = 0.
    for (std::size_t p = 0; p < pools.size(); ++p) {
        if (!data[p]) continue;
        const PoolData& d = *data[p];
        for (std::size_t i = 0; i < pools[p].participants(); ++i) {
            if (!d.zero[i]) continue;
            for (std::size_t j = 0; j < pools[p].atoms(); ++j) {
                const double lhs = d.c.at(i, j);
                const double rhs = d.q1s[i];
                if (!tol.close(lhs, rhs)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{label_at(labels, p), pools[p], std::nullopt, j,   i,
                                             "",  std::nullopt,  std::nullopt,           lhs, rhs,
                                             tol};
                    return report;
                }
            }
        }
    }

    struct Slot {
        std::size_t pool;
        std::size_t atom;
    };
    std::vector<Slot> slots;
    for (std::size_t p = 0; p < pools.size(); ++p) {
        if (!data[p]) continue;
        for (std::size_t j = 0; j < pools[p].atoms(); ++j) slots.push_back({p, j});
    }

    if (report.pools_checked < 2) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "needs at least two non-degenerate pools on a shared space";
        return report;
    }

    bool cross_collision = false;
    for (std::size_t a = 0; a < slots.size(); ++a)
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            const PoolData& da = *data[slots[a].pool];
            const PoolData& db = *data[slots[b].pool];
            if (!same_level(da.s[slots[a].atom], db.s[slots[b].atom])) continue;
            if (!same_level(da.q1_of_s, db.q1_of_s)) continue;
            if (!same_level(da.q2_of_ss, db.q2_of_ss)) continue;
            if (slots[a].pool != slots[b].pool) cross_collision = true;
            for (std::size_t i = 0; i < da.c.participants(); ++i) {
                if (da.zero[i] || db.zero[i]) continue;
                const double lhs = (da.c.at(i, slots[a].atom) - da.q1s[i]) / da.q2s[i];
                const double rhs = (db.c.at(i, slots[b].atom) - db.q1s[i]) / db.q2s[i];
                if (!tol.close(lhs, rhs)) {
                    report.verdict = Verdict::Violated;
                    report.witness = Witness{label_at(labels, slots[a].pool),
                                             pools[slots[a].pool],
                                             std::nullopt,
                                             slots[a].atom,
                                             i,
                                             label_at(labels, slots[b].pool),
                                             pools[slots[b].pool],
                                             slots[b].atom,
                                             lhs,
                                             rhs,
                                             tol};
                    return report;
                }
            }
        }

    if (!cross_collision) {
        report.verdict = Verdict::Inconclusive;
        report.reason = "battery produced no cross-pool collision on (S, q1[S], q2[S,S])";
    }
    return report;
}

// ---- replay ----------------------------------------------------------------

bool replay(const PropertyReport& report) {
    if (report.verdict != Verdict::Violated || !report.witness || !report.witness->pool)
        return false;
    const Witness& w = *report.witness;
    const Pool& pool = *w.pool;

    double lhs = 0.0, rhs = 0.0;
    switch (report.kind) {
        case PropertyKind::FullAllocation: {
            const ContributionMatrix c = report.rule(pool);
            const RandomVariable s = aggregate(pool);
            double col_sum = 0.0;
            for (std::size_t i = 0; i < c.participants(); ++i) col_sum += c.at(i, *w.atom);
            lhs = col_sum;
            rhs = s[*w.atom];
            break;
        }
        case PropertyKind::Reshuffling: {
            const ContributionMatrix c = report.rule(pool);
            const ContributionMatrix cp = report.rule(reshuffle(pool, *w.perm));
            lhs = cp.at(*w.participant, *w.atom);
            rhs = c.at((*w.perm)(*w.participant), *w.atom);
            break;
        }
        case PropertyKind::SourceAnonymous: {
            const ContributionMatrix c = report.rule(pool);
            const ContributionMatrix cp = report.rule(reshuffle(pool, *w.perm));
            lhs = cp.at(*w.participant, *w.atom);
            rhs = c.at(*w.participant, *w.atom);
            break;
        }
        case PropertyKind::Aggregate: {
            const ContributionMatrix c = report.rule(pool);
            lhs = c.at(*w.participant, *w.atom);
            rhs = c.at(*w.participant, *w.atom_b);
            break;
        }
        case PropertyKind::StronglyAggregate: {
            const ContributionMatrix ca = report.rule(pool);
            const ContributionMatrix cb = report.rule(w.pool_b ? *w.pool_b : pool);
            lhs = ca.at(*w.participant, *w.atom);
            rhs = cb.at(*w.participant, w.atom_b ? *w.atom_b : *w.atom);
            break;
        }
        case PropertyKind::SourceAnonymousQRatio: {
            const ContributionMatrix c = report.rule(pool);
            const ContributionMatrix cp = report.rule(reshuffle(pool, *w.perm));
            const std::vector<double> qs = metric_row_values(*report.q, pool);
            lhs = cp.at(*w.participant, *w.atom);
            rhs = qs[(*w.perm)(*w.participant)] / qs[*w.participant] *
                  c.at(*w.participant, *w.atom);
            break;
        }
        case PropertyKind::StronglyAggregateQRatio: {
            const ContributionMatrix ca = report.rule(pool);
            const std::vector<double> qa = metric_row_values(*report.q, pool);
            if (!w.pool_b) {
                // zero-metric participant: contribution itself must vanish
                lhs = ca.at(*w.participant, *w.atom);
                rhs = 0.0;
            } else {
                const ContributionMatrix cb = report.rule(*w.pool_b);
                const std::vector<double> qb = metric_row_values(*report.q, *w.pool_b);
                lhs = ca.at(*w.participant, *w.atom) / qa[*w.participant];
                rhs = cb.at(*w.participant, *w.atom_b) / qb[*w.participant];
            }
            break;
        }
        case PropertyKind::SourceAnonymousStd: {
            const ContributionMatrix c = report.rule(pool);
            const ContributionMatrix cp = report.rule(reshuffle(pool, *w.perm));
            const RandomVariable s = aggregate(pool);
            const std::vector<double> q1s = metric_row_values(*report.q1, pool);
            const std::vector<double> q2s = bimetric_row_values(*report.q2, pool, s);
            const std::size_t i = *w.participant;
            lhs = cp.at(i, *w.atom) - q1s[(*w.perm)(i)];
            rhs = q2s[(*w.perm)(i)] / q2s[i] * (c.at(i, *w.atom) - q1s[i]);
            break;
        }
        case PropertyKind::StronglyAggregateStd: {
            const ContributionMatrix ca = report.rule(pool);
            const RandomVariable sa = aggregate(pool);
            const std::vector<double> q1a = metric_row_values(*report.q1, pool);
            const std::vector<double> q2a = bimetric_row_values(*report.q2, pool, sa);
            const std::size_t i = *w.participant;
            if (!w.pool_b) {
                lhs = ca.at(i, *w.atom);
                rhs = q1a[i];
            } else {
                const ContributionMatrix cb = report.rule(*w.pool_b);
                const RandomVariable sb = aggregate(*w.pool_b);
                const std::vector<double> q1b = metric_row_values(*report.q1, *w.pool_b);
                const std::vector<double> q2b = bimetric_row_values(*report.q2, *w.pool_b, sb);
                lhs = (ca.at(i, *w.atom) - q1a[i]) / q2a[i];
                rhs = (cb.at(i, *w.atom_b) - q1b[i]) / q2b[i];
            }
            break;
        }
    }

    const bool bits_match =
        std::memcmp(&lhs, &w.lhs, sizeof(double)) == 0 && std::memcmp(&rhs, &w.rhs, sizeof(double)) == 0;
    return bits_match && !w.tol.close(lhs, rhs);
}

}  // namespace riskshare
