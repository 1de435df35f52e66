#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "riskshare/axioms.hpp"

namespace riskshare {

double round_sig12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

namespace {

using nlohmann::ordered_json;

ordered_json pool_json(const std::string& label, const Pool& pool) {
    ordered_json j;
    j["label"] = label;
    ordered_json weights = ordered_json::array();
    for (double w : pool.space().weights()) weights.push_back(round_sig12(w));
    j["weights"] = std::move(weights);
    ordered_json losses = ordered_json::array();
    for (std::size_t i = 0; i < pool.participants(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t a = 0; a < pool.atoms(); ++a)
            row.push_back(round_sig12(pool.losses().at(i, a)));
        losses.push_back(std::move(row));
    }
    j["losses"] = std::move(losses);
    return j;
}

ordered_json witness_json(const Witness& w) {
    ordered_json j;
    if (w.pool) j["pool"] = pool_json(w.pool_label, *w.pool);
    if (w.perm) {
        ordered_json mapping = ordered_json::array();
        for (std::size_t v : w.perm->mapping()) mapping.push_back(v);
        j["perm"] = std::move(mapping);
    }
    if (w.atom) j["atom"] = *w.atom;
    if (w.participant) j["participant"] = *w.participant;
    if (w.pool_b) j["pool_b"] = pool_json(w.pool_b_label, *w.pool_b);
    if (w.atom_b) j["atom_b"] = *w.atom_b;
    j["lhs"] = round_sig12(w.lhs);
    j["rhs"] = round_sig12(w.rhs);
    j["tol_abs"] = round_sig12(w.tol.abs);
    j["tol_rel"] = round_sig12(w.tol.rel);
    return j;
}

const char* verdict_mark(Verdict v) {
    switch (v) {
        case Verdict::HoldsOnBattery: return "✓";
        case Verdict::Violated: return "−";
        case Verdict::Skipped: return "skip";
        case Verdict::Inconclusive: return "?";
    }
    return "?";
}

}  // namespace

ordered_json to_json(const PropertyReport& report) {
    ordered_json j;
    j["rule"] = report.rule_id;
    j["property"] = to_string(report.kind);
    if (report.q) j["q"] = report.q->name();
    if (report.q1) j["q1"] = report.q1->name();
    if (report.q2) j["q2"] = report.q2->name();
    j["verdict"] = to_string(report.verdict);
    if (!report.reason.empty()) j["reason"] = report.reason;
    j["pools_checked"] = report.pools_checked;
    j["pools_skipped"] = report.pools_skipped;
    j["perms_used"] = report.perms_used;
    if (report.witness) j["witness"] = witness_json(*report.witness);
    return j;
}

ordered_json to_json(const ClassificationMatrix& matrix) {
    ordered_json j;
    j["seed"] = matrix.seed;
    j["participants"] = matrix.sizes.participants;
    j["atoms"] = matrix.sizes.atoms;
    j["random_pools"] = matrix.sizes.random_pools;
    j["loss_scale"] = round_sig12(matrix.sizes.loss_scale);
    ordered_json props = ordered_json::array();
    for (PropertyKind p : matrix.properties) props.push_back(to_string(p));
    j["properties"] = std::move(props);
    ordered_json rules = ordered_json::array();
    for (std::size_t r = 0; r < matrix.rule_ids.size(); ++r) {
        ordered_json row;
        row["rule"] = matrix.rule_ids[r];
        ordered_json checks = ordered_json::array();
        for (const PropertyReport& cell : matrix.cells[r]) checks.push_back(to_json(cell));
        row["checks"] = std::move(checks);
        rules.push_back(std::move(row));
    }
    j["rules"] = std::move(rules);
    if (matrix.matches_expected) j["matches_expected"] = *matrix.matches_expected;
    const std::vector<std::string> offenders = implication_audit(matrix);
    j["implication_consistent"] = offenders.empty();
    if (!offenders.empty()) j["implication_offenders"] = offenders;
    return j;
}

ordered_json to_json(const TheoremReport& report) {
    ordered_json j;
    j["theorem"] = to_string(report.id);
    j["named_rule"] = report.named_rule_id;
    ordered_json axioms = ordered_json::array();
    for (const PropertyReport& r : report.named_rule_reports) axioms.push_back(to_string(r.kind));
    j["axioms"] = std::move(axioms);
    ordered_json named = ordered_json::array();
    for (const PropertyReport& r : report.named_rule_reports) named.push_back(to_json(r));
    j["named_rule_reports"] = std::move(named);
    ordered_json uniq = ordered_json::array();
    for (const UniquenessRecord& u : report.uniqueness) {
        ordered_json row;
        row["rule"] = u.rule_id;
        row["passes_all"] = u.passes_all;
        if (u.passes_all) {
            row["max_deviation_vs_named"] = round_sig12(u.max_deviation_vs_named);
            row["coincides"] = u.coincides;
        }
        uniq.push_back(std::move(row));
    }
    j["uniqueness"] = std::move(uniq);
    ordered_json indep = ordered_json::array();
    for (const IndependenceRecord& i : report.independence) {
        ordered_json row;
        row["rule"] = i.rule_id;
        row["expected_pass"] = to_string(i.expected_pass);
        row["expected_fail"] = to_string(i.expected_fail);
        row["pass_verdict"] = to_string(i.pass_report.verdict);
        row["fail_verdict"] = to_string(i.fail_report.verdict);
        row["as_expected"] = i.as_expected;
        indep.push_back(std::move(row));
    }
    j["independence"] = std::move(indep);
    j["only_if_ok"] = report.only_if_ok;
    j["uniqueness_ok"] = report.uniqueness_ok;
    j["independence_ok"] = report.independence_ok;
    j["ok"] = report.ok();
    return j;
}

std::string markdown_table(const ClassificationMatrix& matrix) {
    std::string out = "| rule |";
    for (PropertyKind p : matrix.properties) out += " " + to_string(p) + " |";
    out += "\n|---|";
    for (std::size_t p = 0; p < matrix.properties.size(); ++p) out += "---|";
    out += "\n";
    for (std::size_t r = 0; r < matrix.rule_ids.size(); ++r) {
        out += "| " + matrix.rule_ids[r] + " |";
        for (const PropertyReport& cell : matrix.cells[r])
            out += std::string(" ") + verdict_mark(cell.verdict) + " |";
        out += "\n";
    }
    if (matrix.matches_expected)
        out += std::string("\nmatches expected pattern: ") +
               (*matrix.matches_expected ? "yes" : "NO") + "\n";
    const std::vector<std::string> offenders = implication_audit(matrix);
    if (!offenders.empty()) {
        out += "\nWARNING: strongly-aggregate holds while source anonymity fails for:";
        for (const std::string& id : offenders) out += " " + id;
        out += "\n";
    }
    return out;
}

std::string markdown_summary(std::span<const PropertyReport> reports) {
    std::string out;
    for (const PropertyReport& r : reports) {
        out += "- " + r.rule_id + " / " + to_string(r.kind) + ": " + to_string(r.verdict);
        if (!r.reason.empty()) out += " (" + r.reason + ")";
        if (r.witness && r.witness->pool) {
            out += " [witness: pool " + r.witness->pool_label;
            if (r.witness->participant) out += ", participant " + std::to_string(*r.witness->participant);
            if (r.witness->atom) out += ", atom " + std::to_string(*r.witness->atom);
            char nums[96];
            std::snprintf(nums, sizeof nums, ", lhs %.12g vs rhs %.12g", r.witness->lhs,
                          r.witness->rhs);
            out += nums;
            out += "]";
        }
        out += "\n";
    }
    return out;
}

std::string markdown_summary(std::span<const TheoremReport> reports) {
    std::string out;
    for (const TheoremReport& t : reports) {
        out += "- " + to_string(t.id) + " [" + t.named_rule_id + "]: " +
               (t.ok() ? "ok" : "FAILED");
        if (!t.ok()) {
            if (!t.only_if_ok) out += " (named rule fails an axiom)";
            if (!t.uniqueness_ok) out += " (a non-coinciding rule passes every axiom)";
            if (!t.independence_ok) out += " (an independence example misbehaved)";
        }
        out += "\n";
    }
    return out;
}

}  // namespace riskshare
