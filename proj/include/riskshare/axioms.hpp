#pragma once
// Property checks for sharing rules: full allocation, invariance under
// reshuffling, source anonymity, measurability in the aggregate (per pool and
// across pools), and the metric-standardized variants of the latter two.
// Each check returns a PropertyReport whose violation witness can be replayed
// standalone and must reproduce the stored comparison bit for bit.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "riskshare/metrics.hpp"
#include "riskshare/prob_core.hpp"
#include "riskshare/rules.hpp"

// vendor/json.hpp
#include "json.hpp"

namespace riskshare {

enum class Verdict {
    HoldsOnBattery,  // no counterexample found on the inputs probed
    Violated,        // witness attached
    Skipped,         // e.g. degenerate pool under the error policy
    Inconclusive,    // the battery cannot exercise the property
};

std::string to_string(Verdict v);

enum class PropertyKind {
    FullAllocation,
    Reshuffling,
    SourceAnonymous,
    Aggregate,
    StronglyAggregate,
    SourceAnonymousQRatio,
    StronglyAggregateQRatio,
    SourceAnonymousStd,
    StronglyAggregateStd,
};

std::string to_string(PropertyKind k);

// One concrete counterexample. `pool` (plus `perm` / the secondary slot where
// applicable) contains everything needed to recompute lhs and rhs.
struct Witness {
    std::string pool_label;
    std::optional<Pool> pool;
    std::optional<Permutation> perm;
    std::optional<std::size_t> atom;
    std::optional<std::size_t> participant;
    // Secondary slot for cross-pool and within-group comparisons.
    std::string pool_b_label;
    std::optional<Pool> pool_b;
    std::optional<std::size_t> atom_b;
    double lhs = 0.0;
    double rhs = 0.0;
    Tolerances tol;
};

struct PropertyReport {
    std::string rule_id;
    PropertyKind kind = PropertyKind::FullAllocation;
    Verdict verdict = Verdict::HoldsOnBattery;
    std::string reason;  // set for Skipped / Inconclusive
    std::optional<Witness> witness;
    std::size_t pools_checked = 0;
    std::size_t pools_skipped = 0;
    std::size_t perms_used = 0;

    // Retained for standalone replay; not serialized.
    BoundRule rule;
    std::optional<RiskMetric> q;
    std::optional<RiskMetric> q1;
    std::optional<BiMetric> q2;

    bool holds() const { return verdict == Verdict::HoldsOnBattery; }
    bool violated() const { return verdict == Verdict::Violated; }
};

// Re-runs the single comparison recorded in the witness. True iff the
// recomputed lhs/rhs are bit-identical to the stored ones and still violate
// the stored tolerance.
bool replay(const PropertyReport& report);

// Thrown when a standardized check is asked to run with a metric whose
// declared flags are missing or fail the battery audit.
class MetricAuditError : public std::runtime_error {
   public:
    explicit MetricAuditError(const std::string& what) : std::runtime_error(what) {}
};

// ---- single-property checks ------------------------------------------------

PropertyReport check_full_allocation(const BoundRule& rule, const Pool& pool,
                                     const std::string& pool_label = "pool");

PropertyReport check_reshuffling(const BoundRule& rule, const Pool& pool,
                                 std::span<const Permutation> perms, const Tolerances& tol = {},
                                 const std::string& pool_label = "pool");

PropertyReport check_source_anonymous(const BoundRule& rule, const Pool& pool,
                                      std::span<const Permutation> perms,
                                      const Tolerances& tol = {},
                                      const std::string& pool_label = "pool");

PropertyReport check_aggregate(const BoundRule& rule, const Pool& pool, const Tolerances& tol = {},
                               const std::string& pool_label = "pool");

PropertyReport check_strongly_aggregate(const BoundRule& rule, std::span<const Pool> pools,
                                        const Tolerances& tol = {},
                                        std::span<const std::string> labels = {});

PropertyReport check_source_anonymous_q_ratio(const BoundRule& rule, const RiskMetric& q,
                                              const Pool& pool,
                                              std::span<const Permutation> perms,
                                              const Tolerances& tol = {},
                                              const std::string& pool_label = "pool");

// Requires q declared and battery-verified normalized + additive.
PropertyReport check_strongly_aggregate_q_ratio(const BoundRule& rule, const RiskMetric& q,
                                                std::span<const Pool> pools,
                                                const Tolerances& tol = {},
                                                std::span<const std::string> labels = {});

PropertyReport check_source_anonymous_std(const BoundRule& rule, const RiskMetric& q1,
                                          const BiMetric& q2, const Pool& pool,
                                          std::span<const Permutation> perms,
                                          const Tolerances& tol = {},
                                          const std::string& pool_label = "pool");

// Requires q1 normalized + additive and q2 zero-at-zero + additive in its
// first argument, all battery-verified.
PropertyReport check_strongly_aggregate_std(const BoundRule& rule, const RiskMetric& q1,
                                            const BiMetric& q2, std::span<const Pool> pools,
                                            const Tolerances& tol = {},
                                            std::span<const std::string> labels = {});

// ---- battery ---------------------------------------------------------------

struct BatterySizes {
    std::size_t participants = 3;
    std::size_t atoms = 6;
    std::size_t random_pools = 4;
    double loss_scale = 100.0;
};

// Deterministic, seeded collection of pools on one shared space. Alongside
// uniform random pools it plants the structured cases the checks need:
// zero losses, constant losses, comonotone losses, a pool with all aggregate
// values distinct, engineered aggregate ties, anticorrelated rows with a
// constant aggregate, a zero row, rows with coinciding means / coinciding
// first-scenario losses, and two row-rebalancings of one common aggregate
// (guaranteed cross-pool collisions).
class Battery {
   public:
    static Battery standard(std::uint64_t seed, const BatterySizes& sizes = {});

    const SpacePtr& space() const { return space_; }
    const std::vector<Pool>& pools() const { return pools_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::uint64_t seed() const { return seed_; }
    const BatterySizes& sizes() const { return sizes_; }

   private:
    Battery() = default;
    SpacePtr space_;
    std::vector<Pool> pools_;
    std::vector<std::string> labels_;
    std::uint64_t seed_ = 0;
    BatterySizes sizes_;
};

// Standalone pool with its own space; used by the wide full-allocation sweeps.
Pool random_pool(std::mt19937_64& rng, std::size_t participants, std::size_t atoms,
                 double loss_scale = 100.0);

// ---- battery-level drivers -------------------------------------------------

struct CheckRequest {
    PropertyKind kind;
    std::optional<RiskMetric> q;
    std::optional<RiskMetric> q1;
    std::optional<BiMetric> q2;
};

// Runs one property over every battery pool (single-pool properties) or over
// the battery as a whole (the strongly-* properties). Verdict merging:
// violated beats holds; a report merged from zero checked pools is skipped.
PropertyReport check_on_battery(const CheckRequest& request, const BoundRule& rule,
                                const Battery& battery, const Tolerances& tol = {});

// ---- classification --------------------------------------------------------

struct ClassificationMatrix {
    std::uint64_t seed = 0;
    BatterySizes sizes;
    std::vector<std::string> rule_ids;
    std::vector<PropertyKind> properties;
    // cells[r][p] aligned with rule_ids x properties.
    std::vector<std::vector<PropertyReport>> cells;
    std::optional<bool> matches_expected;  // set when the default rule set ran
};

// The seven standard rules classified against the four plain properties.
std::vector<RuleSpec> table_rules(std::size_t atoms);

ClassificationMatrix classify(std::span<const RuleSpec> rules, const Battery& battery,
                              const Tolerances& tol = {});

// Expected verdict pattern for table_rules(); true entries mean "violated".
const std::vector<std::vector<bool>>& expected_table_pattern();

bool matches_table_pattern(const ClassificationMatrix& matrix);

// ---- theorem harness -------------------------------------------------------

enum class TheoremId { T1, T2, T3, T4, T5, T6 };

std::string to_string(TheoremId id);

struct TheoremMetrics {
    RiskMetric q = RiskMetric::mean();       // T3 / T4
    RiskMetric q1 = RiskMetric::mean();      // T5 / T6
    BiMetric q2 = BiMetric::covariance();    // T5 / T6
};

struct UniquenessRecord {
    std::string rule_id;
    bool passes_all = false;
    double max_deviation_vs_named = 0.0;  // meaningful when passes_all
    bool coincides = false;
};

struct IndependenceRecord {
    std::string rule_id;
    PropertyKind expected_pass;
    PropertyKind expected_fail;
    PropertyReport pass_report;
    PropertyReport fail_report;
    bool as_expected = false;
};

struct TheoremReport {
    TheoremId id = TheoremId::T1;
    std::string named_rule_id;
    std::vector<PropertyReport> named_rule_reports;  // one per axiom
    std::vector<UniquenessRecord> uniqueness;
    std::vector<IndependenceRecord> independence;
    bool only_if_ok = false;      // the named rule satisfies every axiom
    bool uniqueness_ok = false;   // every passer coincides with the named rule
    bool independence_ok = false;

    bool ok() const { return only_if_ok && uniqueness_ok && independence_ok; }
};

TheoremReport run_theorem(TheoremId id, const Battery& battery, const TheoremMetrics& metrics = {},
                          const Tolerances& tol = {});

// ---- implication audit -----------------------------------------------------

// Scans reports for the forbidden combination "strongly aggregate holds while
// source anonymity is violated" for the same rule; returns the offending rule
// ids (empty means consistent).
std::vector<std::string> implication_audit(std::span<const PropertyReport> reports);

std::vector<std::string> implication_audit(const ClassificationMatrix& matrix);

// ---- serialization ---------------------------------------------------------

// All doubles in emitted JSON are rounded to 12 significant digits; key order
// is fixed, so identical inputs serialize byte-identically.
nlohmann::ordered_json to_json(const PropertyReport& report);
nlohmann::ordered_json to_json(const ClassificationMatrix& matrix);
nlohmann::ordered_json to_json(const TheoremReport& report);

std::string markdown_table(const ClassificationMatrix& matrix);
std::string markdown_summary(std::span<const PropertyReport> reports);
std::string markdown_summary(std::span<const TheoremReport> reports);

double round_sig12(double v);

}  // namespace riskshare
