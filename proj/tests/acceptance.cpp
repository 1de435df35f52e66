// Acceptance harness: end-to-end checks of the library's headline guarantees.
// Each criterion prints exactly one PASS/FAIL line; the process exits nonzero
// if any criterion fails. Tolerances are pinned here on purpose — do not
// loosen them to make a failure go away.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "riskshare/axioms.hpp"
#include "riskshare/io.hpp"
#include "riskshare/metrics.hpp"
#include "riskshare/oracle.hpp"
#include "riskshare/prob_core.hpp"
#include "riskshare/rules.hpp"

using namespace riskshare;
namespace fs = std::filesystem;

namespace {

// Failure text accumulator: empty string means the criterion passed.
class Fails {
   public:
    template <typename... Args>
    void expect(bool ok, Args&&... parts) {
        if (ok) return;
        std::ostringstream ss;
        (ss << ... << parts);
        if (!text_.empty()) text_ += "; ";
        text_ += ss.str();
    }
    const std::string& text() const { return text_; }

   private:
    std::string text_;
};

std::vector<RuleSpec> full_catalog(std::size_t participants, std::size_t atoms) {
    std::vector<double> weights(participants);
    for (std::size_t i = 0; i < participants; ++i) weights[i] = static_cast<double>(i + 1);
    std::vector<RuleSpec> rules = {
        RuleSpec::uniform(),
        RuleSpec::mean_proportional(),
        RuleSpec::q_proportional(RiskMetric::variance()),
        RuleSpec::q_proportional(RiskMetric::stddev()),
        RuleSpec::weighted_q_proportional(RiskMetric::mean(), std::move(weights)),
        RuleSpec::q1q2_linear(RiskMetric::mean(), BiMetric::covariance()),
        RuleSpec::scenario_proportional(0),
        RuleSpec::scenario_linear(0, atoms - 1, 0),
        RuleSpec::covariance_linear(),
        RuleSpec::variance_linear(),
        RuleSpec::conditional_mean(),
        RuleSpec::order_statistics(),
        RuleSpec::all_in_one(),
        RuleSpec::stand_alone(),
        RuleSpec::hybrid_counterexample(RiskMetric::mean()),
    };
    for (auto& rule : rules) rule = rule.with_policy(DegeneratePolicy::UniformFallback);
    return rules;
}

// ---- criterion 1: full allocation over a wide random sweep -----------------

std::string criterion_full_allocation() {
    Fails fails;
    const auto start = std::chrono::steady_clock::now();

    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<std::size_t> nd(1, 6), md(1, 32);
    std::size_t applications = 0;

    for (int k = 0; k < 1000 && fails.text().empty(); ++k) {
        const std::size_t n = nd(rng), m = md(rng);
        const Pool pool = random_pool(rng, n, m, 100.0);
        const RandomVariable s = aggregate(pool);
        for (const RuleSpec& rule : full_catalog(n, m)) {
            const ContributionMatrix c = apply(rule, pool);
            ++applications;
            for (std::size_t j = 0; j < m; ++j) {
                double col = 0.0;
                for (std::size_t i = 0; i < n; ++i) col += c.at(i, j);
                const double bound = 1e-9 + 1e-12 * std::abs(s[j]);
                fails.expect(std::abs(col - s[j]) <= bound, "pool ", k, " rule ", rule.id(),
                             " atom ", j, ": |sum C - S| = ", std::abs(col - s[j]), " > ",
                             bound);
            }
        }
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fails.expect(seconds < 10.0, "sweep took ", seconds, " s, budget is 10 s");
    if (!fails.text().empty()) return fails.text();
    char note[96];
    std::snprintf(note, sizeof note, "1000 pools, %zu rule applications, %.2f s", applications,
                  seconds);
    return std::string("PASSNOTE:") + note;
}

// ---- criterion 2: classification matrix ------------------------------------

std::string criterion_classification() {
    Fails fails;
    const Battery battery = Battery::standard(0);
    const auto matrix = classify(table_rules(battery.sizes().atoms), battery);

    fails.expect(matrix.matches_expected.has_value() && *matrix.matches_expected,
                 "matrix deviates from the expected verdict pattern");

    std::size_t replayed = 0;
    for (const auto& row : matrix.cells)
        for (const auto& cell : row) {
            if (!cell.violated()) continue;
            fails.expect(cell.witness.has_value(), cell.rule_id, "/", to_string(cell.kind),
                         " violated without witness");
            if (cell.witness) {
                fails.expect(replay(cell), cell.rule_id, "/", to_string(cell.kind),
                             " witness does not replay bit-for-bit");
                ++replayed;
            }
        }
    fails.expect(replayed > 0, "no violated cells found — pattern cannot match");
    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:7x4 matrix, " + std::to_string(replayed) + " witnesses replayed";
}

// ---- criteria 3-5: theorem harnesses ---------------------------------------

const IndependenceRecord* find_independence(const TheoremReport& report,
                                            const std::string& rule_id) {
    for (const auto& rec : report.independence)
        if (rec.rule_id == rule_id) return &rec;
    return nullptr;
}

void expect_independence(Fails& fails, const TheoremReport& report, const std::string& rule_id,
                         PropertyKind pass, PropertyKind fail) {
    const IndependenceRecord* rec = find_independence(report, rule_id);
    fails.expect(rec != nullptr, to_string(report.id), ": no independence record for ",
                 rule_id);
    if (!rec) return;
    fails.expect(rec->expected_pass == pass && rec->expected_fail == fail, to_string(report.id),
                 ": ", rule_id, " probes the wrong axiom pair");
    fails.expect(rec->as_expected, to_string(report.id), ": ", rule_id,
                 " did not pass/fail as assigned");
    fails.expect(rec->fail_report.witness.has_value(), to_string(report.id), ": ", rule_id,
                 " failure lacks a witness");
}

void expect_unique(Fails& fails, const TheoremReport& report) {
    for (const auto& rec : report.uniqueness)
        if (rec.passes_all && rec.rule_id != report.named_rule_id)
            fails.expect(rec.coincides, to_string(report.id), ": ", rec.rule_id,
                         " passes every axiom but does not coincide with ",
                         report.named_rule_id);
}

std::string criterion_theorems_1_2() {
    Fails fails;
    const Battery battery = Battery::standard(0);

    const auto t1 = run_theorem(TheoremId::T1, battery);
    fails.expect(t1.ok(), "T1 harness not ok");
    fails.expect(t1.named_rule_id == "uniform", "T1 named rule is ", t1.named_rule_id);
    expect_independence(fails, t1, "stand_alone", PropertyKind::Reshuffling,
                        PropertyKind::SourceAnonymous);
    expect_independence(fails, t1, "order_stat", PropertyKind::SourceAnonymous,
                        PropertyKind::Reshuffling);
    expect_unique(fails, t1);

    const auto t2 = run_theorem(TheoremId::T2, battery);
    fails.expect(t2.ok(), "T2 harness not ok");
    expect_independence(fails, t2, "stand_alone", PropertyKind::Reshuffling,
                        PropertyKind::StronglyAggregate);
    expect_independence(fails, t2, "all_in_one", PropertyKind::StronglyAggregate,
                        PropertyKind::Reshuffling);
    expect_unique(fails, t2);

    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:T1 and T2 ok with independence witnesses";
}

std::string criterion_theorems_3_4() {
    Fails fails;
    const Battery battery = Battery::standard(0);

    for (const auto& q : {RiskMetric::mean(), RiskMetric::scenario(0)}) {
        TheoremMetrics metrics;
        metrics.q = q;
        const auto t3 = run_theorem(TheoremId::T3, battery, metrics);
        fails.expect(t3.ok(), "T3(q=", q.name(), ") not ok");
        expect_independence(fails, t3, "stand_alone", PropertyKind::Reshuffling,
                            PropertyKind::SourceAnonymousQRatio);
        expect_independence(fails, t3, "hybrid(" + q.name() + ")",
                            PropertyKind::SourceAnonymousQRatio, PropertyKind::Reshuffling);
        expect_unique(fails, t3);

        const auto t4 = run_theorem(TheoremId::T4, battery, metrics);
        fails.expect(t4.ok(), "T4(q=", q.name(), ") not ok");
        expect_unique(fails, t4);
    }

    // Metric audits backing the q-ratio hypotheses.
    const auto mean_report = verify_attributes(RiskMetric::mean(), battery.pools());
    fails.expect(mean_report.normalized.observed && mean_report.additive.observed,
                 "mean metric failed its audit");
    const auto scen_report = verify_attributes(RiskMetric::scenario(0), battery.pools());
    fails.expect(scen_report.normalized.observed && scen_report.additive.observed,
                 "scenario metric failed its audit");
    const auto sd_report = verify_attributes(RiskMetric::stddev(), battery.pools());
    fails.expect(!sd_report.additive.observed && sd_report.additive.witness_pool.has_value(),
                 "stddev unexpectedly passed the additivity audit");

    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:T3/T4 ok for q=mean and q=scenario:0; stddev additivity refuted on pool " +
           std::to_string(*sd_report.additive.witness_pool);
}

std::string criterion_theorems_5_6() {
    Fails fails;
    const Battery battery = Battery::standard(0);

    const auto t5 = run_theorem(TheoremId::T5, battery);
    fails.expect(t5.ok(), "T5(q2=cov) not ok");
    expect_unique(fails, t5);
    const auto t6 = run_theorem(TheoremId::T6, battery);
    fails.expect(t6.ok(), "T6(q2=cov) not ok");
    expect_unique(fails, t6);

    // Uniform must fail the strongly aggregate standardized axiom, with a
    // replayable witness.
    const auto uniform_fail = check_strongly_aggregate_std(
        bind_rule(RuleSpec::uniform()), RiskMetric::mean(), BiMetric::covariance(),
        battery.pools(), {}, battery.labels());
    fails.expect(uniform_fail.violated() && uniform_fail.witness.has_value(),
                 "uniform did not fail the standardized strongly-aggregate axiom");
    if (uniform_fail.witness)
        fails.expect(replay(uniform_fail), "uniform's failure witness does not replay");

    // covariance_linear passes both standardized axioms directly.
    CheckRequest sa_std{PropertyKind::SourceAnonymousStd, {}, RiskMetric::mean(),
                        BiMetric::covariance()};
    fails.expect(
        check_on_battery(sa_std, bind_rule(RuleSpec::covariance_linear()), battery).holds(),
        "cov_lin fails the source-anonymous standardized axiom");
    fails.expect(check_strongly_aggregate_std(bind_rule(RuleSpec::covariance_linear()),
                                              RiskMetric::mean(), BiMetric::covariance(),
                                              battery.pools(), {}, battery.labels())
                     .holds(),
                 "cov_lin fails the strongly aggregate standardized axiom");

    // first-variance branch: the pairwise axiom works and T5 passes, but the
    // strongly aggregate variant refuses the metric because first-variance is
    // not additive in its first argument. The audit refusal is asserted here
    // as the correct behavior; variance_linear therefore has no strongly-
    // aggregate standardized certificate.
    TheoremMetrics fv;
    fv.q2 = BiMetric::first_variance();
    const auto t5fv = run_theorem(TheoremId::T5, battery, fv);
    fails.expect(t5fv.ok(), "T5(q2=first_var) not ok");
    CheckRequest sa_std_fv{PropertyKind::SourceAnonymousStd, {}, RiskMetric::mean(),
                           BiMetric::first_variance()};
    fails.expect(
        check_on_battery(sa_std_fv, bind_rule(RuleSpec::variance_linear()), battery).holds(),
        "var_lin fails the source-anonymous standardized axiom under first-variance");
    bool refused = false;
    try {
        run_theorem(TheoremId::T6, battery, fv);
    } catch (const MetricAuditError&) {
        refused = true;
    }
    fails.expect(refused, "T6 accepted the non-additive first-variance metric");

    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:T5/T6 ok with cov; uniform refuted with witness; first_var audit-refused "
           "for T6 as required";
}

// ---- criterion 6: rule equivalences ----------------------------------------

std::string criterion_equivalences() {
    Fails fails;
    const Battery battery = Battery::standard(0);

    struct Pair {
        RuleSpec a;
        RuleSpec b;
    };
    const std::vector<Pair> pairs = {
        {RuleSpec::q_proportional(RiskMetric::constant(2.5)), RuleSpec::uniform()},
        {RuleSpec::q1q2_linear(RiskMetric::mean(), BiMetric::covariance()),
         RuleSpec::covariance_linear()},
        {RuleSpec::q1q2_linear(RiskMetric::mean(), BiMetric::first_variance()),
         RuleSpec::variance_linear()},
        {RuleSpec::q1q2_linear(RiskMetric::mean(), BiMetric::lift(RiskMetric::mean())),
         RuleSpec::mean_proportional()},
    };
    for (const auto& pair : pairs) {
        const auto report = oracle::rule_equivalence(pair.a, pair.b, battery.pools());
        fails.expect(report.pools_compared > 0, report.rule_a, " vs ", report.rule_b,
                     ": no comparable pools");
        fails.expect(report.max_deviation <= 1e-9, report.rule_a, " vs ", report.rule_b,
                     ": max deviation ", report.max_deviation, " > 1e-9");
    }

    // The witness pool where mean-proportional visibly differs from uniform.
    const Pool witness =
        Pool::from_rows(ProbSpace::make({0.5, 0.25, 0.25}), {{0, 4, 8}, {2, 2, 2}});
    const std::vector<Pool> one{witness};
    const auto apart =
        oracle::rule_equivalence(RuleSpec::mean_proportional(), RuleSpec::uniform(), one);
    fails.expect(apart.max_deviation >= 0.1, "mean_prop vs uniform deviation ",
                 apart.max_deviation, " < 0.1 on the witness pool");

    if (!fails.text().empty()) return fails.text();
    char note[96];
    std::snprintf(note, sizeof note, "4 equivalences within 1e-9; separation %.3g >= 0.1",
                  apart.max_deviation);
    return std::string("PASSNOTE:") + note;
}

// ---- criterion 7: conditional mean vs oracle -------------------------------

std::string criterion_conditional_mean() {
    Fails fails;
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<std::size_t> nd(1, 5), md(2, 16);
    std::uniform_int_distribution<int> id(0, 10);

    std::size_t distinct_pools = 0, tied_pools = 0;
    for (int k = 0; k < 200 && fails.text().empty(); ++k) {
        Pool pool = [&] {
            if (k < 100) return random_pool(rng, nd(rng), md(rng), 100.0);
            // Integer pool with column 1 a row-rotation of column 0: the two
            // aggregates tie exactly while the columns differ.
            const std::size_t n = nd(rng), m = md(rng);
            Matrix losses(n, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = id(rng);
            for (std::size_t i = 0; i < n; ++i) losses.at(i, 1) = losses.at((i + 1) % n, 0);
            return Pool(ProbSpace::uniform(m), std::move(losses));
        }();

        const auto engine = apply(RuleSpec::conditional_mean(), pool);
        const auto reference = oracle::conditional_mean(pool);
        for (std::size_t i = 0; i < pool.participants(); ++i)
            for (std::size_t j = 0; j < pool.atoms(); ++j)
                fails.expect(std::abs(engine.at(i, j) - reference.at(i, j)) <= 1e-12, "pool ",
                             k, " (", i, ",", j, "): engine ", engine.at(i, j), " vs oracle ",
                             reference.at(i, j));

        const auto groups = level_groups(aggregate(pool).values());
        const bool all_distinct = std::all_of(groups.begin(), groups.end(),
                                              [](const auto& g) { return g.size() == 1; });
        if (all_distinct) {
            ++distinct_pools;
            fails.expect(engine.values() == pool.losses(),
                         "pool ", k, ": conditional mean is not bitwise stand-alone");
        } else {
            ++tied_pools;
        }
    }
    fails.expect(tied_pools >= 100, "only ", tied_pools, " tied-aggregate pools generated");
    fails.expect(distinct_pools >= 50, "only ", distinct_pools, " distinct-aggregate pools");

    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:200 pools (" + std::to_string(tied_pools) + " tied, " +
           std::to_string(distinct_pools) + " distinct), oracle gap <= 1e-12";
}

// ---- criterion 8: implication audit ----------------------------------------

std::string criterion_implication_audit() {
    Fails fails;
    const Battery battery = Battery::standard(0);

    const auto matrix = classify(table_rules(battery.sizes().atoms), battery);
    const auto offenders = implication_audit(matrix);
    fails.expect(offenders.empty(), "classification matrix offenders: ",
                 offenders.empty() ? "" : offenders.front());

    // Also sweep the wider catalog: both properties for every rule.
    std::vector<PropertyReport> reports;
    for (const RuleSpec& rule : full_catalog(battery.sizes().participants,
                                             battery.sizes().atoms)) {
        const BoundRule bound = bind_rule(rule);
        reports.push_back(check_on_battery({PropertyKind::StronglyAggregate, {}, {}, {}},
                                           bound, battery));
        reports.push_back(check_on_battery({PropertyKind::SourceAnonymous, {}, {}, {}}, bound,
                                           battery));
    }
    const auto wide = implication_audit(reports);
    fails.expect(wide.empty(), "catalog sweep offenders: ", wide.empty() ? "" : wide.front());

    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:no rule is strongly aggregate yet source-dependent (" +
           std::to_string(reports.size()) + " reports audited)";
}

// ---- criterion 9: byte-identical reruns ------------------------------------

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string criterion_determinism() {
    Fails fails;
    const fs::path scratch = "acceptance_scratch";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const std::string cli = RISKSHARE_CLI_PATH;
    const auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };

    fails.expect(run("check --rule mean_prop --out " + (scratch / "check1").string()) == 0,
                 "first check run failed");
    fails.expect(run("check --rule mean_prop --out " + (scratch / "check2").string()) == 0,
                 "second check run failed");
    const std::string c1 = slurp(scratch / "check1" / "check.json");
    fails.expect(!c1.empty() && c1 == slurp(scratch / "check2" / "check.json"),
                 "check reruns differ byte-wise");

    fails.expect(run("classify --out " + (scratch / "cls1").string()) == 0,
                 "first classify run failed");
    fails.expect(run("classify --out " + (scratch / "cls2").string()) == 0,
                 "second classify run failed");
    const std::string m1 = slurp(scratch / "cls1" / "classification.json");
    fails.expect(!m1.empty() && m1 == slurp(scratch / "cls2" / "classification.json"),
                 "classify reruns differ byte-wise");

    fs::remove_all(scratch);
    if (!fails.text().empty()) return fails.text();
    return "PASSNOTE:check and classify JSON byte-identical across reruns";
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {"full allocation sweep", criterion_full_allocation},
        {"classification matrix", criterion_classification},
        {"uniform characterizations", criterion_theorems_1_2},
        {"proportional characterizations", criterion_theorems_3_4},
        {"linear characterizations", criterion_theorems_5_6},
        {"rule equivalences", criterion_equivalences},
        {"conditional mean oracle", criterion_conditional_mean},
        {"implication audit", criterion_implication_audit},
        {"deterministic reports", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        std::string result;
        try {
            result = criteria[k].run();
        } catch (const std::exception& e) {
            result = std::string("exception: ") + e.what();
        }
        const bool passed = result.rfind("PASSNOTE:", 0) == 0;
        std::cout << "criterion " << (k + 1) << " [" << criteria[k].name << "]: "
                  << (passed ? "PASS" : "FAIL");
        if (passed)
            std::cout << " (" << result.substr(9) << ")";
        else
            std::cout << " (" << result << ")";
        std::cout << "\n";
        if (!passed) ++failures;
    }
    if (failures > 0) std::cout << failures << " criterion(s) failed\n";
    return failures;
}
