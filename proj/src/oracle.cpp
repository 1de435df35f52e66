#include "riskshare/oracle.hpp"

#include <cmath>

namespace riskshare::oracle {

ContributionMatrix conditional_mean(const Pool& pool) {
    const std::size_t n = pool.participants();
    const std::size_t m = pool.atoms();
    const auto& w = pool.space().weights();

    // Aggregate by direct transcription: S(w_j) = sum_i X_i(w_j).
    std::vector<double> s(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) s[j] += pool.losses().at(i, j);

    Matrix c(n, m);
    for (std::size_t j = 0; j < m; ++j) {
        // Atoms sharing the level set of atom j, by pairwise comparison.
        double wsum = 0.0;
        std::vector<std::size_t> members;
        for (std::size_t k = 0; k < m; ++k) {
            if (std::abs(s[j] - s[k]) <= 1e-9 * std::max(1.0, std::abs(s[j]))) {
                members.push_back(k);
                wsum += w[k];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k : members) acc += w[k] * pool.losses().at(i, k);
            c.at(i, j) = acc / wsum;
        }
    }
    return ContributionMatrix(std::move(c));
}

EquivalenceReport rule_equivalence(const RuleSpec& a, const RuleSpec& b,
                                   std::span<const Pool> pools) {
    EquivalenceReport report;
    report.rule_a = a.id();
    report.rule_b = b.id();

    for (std::size_t p = 0; p < pools.size(); ++p) {
        ContributionMatrix ca, cb;
        try {
            ca = apply(a, pools[p]);
            cb = apply(b, pools[p]);
        } catch (const DegeneratePoolError&) {
            ++report.pools_skipped;
            continue;
        }
        ++report.pools_compared;
        for (std::size_t i = 0; i < ca.participants(); ++i)
            for (std::size_t j = 0; j < ca.atoms(); ++j) {
                const double dev = std::abs(ca.at(i, j) - cb.at(i, j));
                if (dev > report.max_deviation) {
                    report.max_deviation = dev;
                    report.argmax_pool = p;
                    report.argmax_participant = i;
                    report.argmax_atom = j;
                }
            }
    }
    return report;
}

}  // namespace riskshare::oracle
