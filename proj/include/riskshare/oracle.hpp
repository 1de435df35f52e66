#pragma once
// Reference implementations kept deliberately separate from the rule engine:
// straight transcriptions of the defining formulas, written against different
// algorithms (pairwise level matching instead of sort-and-split), used by the
// test suite to cross-check the production code.

#include <cstddef>
#include <span>
#include <string>

#include "riskshare/prob_core.hpp"
#include "riskshare/rules.hpp"

namespace riskshare::oracle {

// E[X_i | S] by O(m^2) pairwise comparison of aggregate values; shares no
// grouping code with the rule engine.
ContributionMatrix conditional_mean(const Pool& pool);

struct EquivalenceReport {
    std::string rule_a;
    std::string rule_b;
    std::size_t pools_compared = 0;
    std::size_t pools_skipped = 0;  // degenerate under either rule's policy
    double max_deviation = 0.0;
    // Location of the maximum deviation.
    std::size_t argmax_pool = 0;
    std::size_t argmax_participant = 0;
    std::size_t argmax_atom = 0;
};

// Largest |C_a - C_b| over every (pool, participant, atom) slot.
EquivalenceReport rule_equivalence(const RuleSpec& a, const RuleSpec& b,
                                   std::span<const Pool> pools);

}  // namespace riskshare::oracle
