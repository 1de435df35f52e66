#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "riskshare/axioms.hpp"

namespace riskshare {

namespace {

std::vector<double> normalized_weights(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> dist(0.2, 1.0);
    std::vector<double> w(count);
    for (double& x : w) x = dist(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
}

Matrix uniform_losses(std::mt19937_64& rng, std::size_t n, std::size_t m, double scale) {
    std::uniform_real_distribution<double> dist(0.0, scale);
    Matrix losses(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = dist(rng);
    return losses;
}

// Positive coefficients summing to one; used to split an aggregate into rows.
std::vector<double> split_coefficients(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    std::vector<double> alpha(n);
    for (double& a : alpha) a = dist(rng);
    const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    for (double& a : alpha) a /= total;
    return alpha;
}

Pool proportional_split(const SpacePtr& space, const RandomVariable& s,
                        const std::vector<double>& alpha) {
    Matrix losses(alpha.size(), s.size());
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) losses.at(i, j) = alpha[i] * s[j];
    return Pool(space, std::move(losses));
}

}  // namespace

Pool random_pool(std::mt19937_64& rng, std::size_t participants, std::size_t atoms,
                 double loss_scale) {
    std::vector<double> w = normalized_weights(rng, atoms);
    Matrix losses = uniform_losses(rng, participants, atoms, loss_scale);
    return Pool(ProbSpace::make(std::move(w)), std::move(losses));
}

Battery Battery::standard(std::uint64_t seed, const BatterySizes& sizes) {
    if (sizes.participants < 1 || sizes.atoms < 2)
        throw std::invalid_argument("battery needs at least 1 participant and 2 atoms");
    if (!(sizes.loss_scale > 0.0))
        throw std::invalid_argument("battery loss scale must be positive");

    const std::size_t n = sizes.participants;
    const std::size_t m = sizes.atoms;

    Battery battery;
    battery.seed_ = seed;
    battery.sizes_ = sizes;

    std::mt19937_64 rng(seed);
    battery.space_ = ProbSpace::make(normalized_weights(rng, m));
    const SpacePtr& space = battery.space_;

    auto add = [&](std::string label, Matrix losses) {
        battery.pools_.emplace_back(space, std::move(losses));
        battery.labels_.push_back(std::move(label));
    };

    add("zero", Matrix(n, m, 0.0));

    {
        Matrix losses(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = 1.5 * double(i + 1);
        add("constant", std::move(losses));
    }

    {
        // X_i(w_j) = (i+1)(j+1): all rows increase together and the aggregate
        // takes a different value in every atom.
        Matrix losses(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = double((i + 1) * (j + 1));
        add("comonotone", std::move(losses));
    }

    for (std::size_t k = 0; k < sizes.random_pools; ++k)
        add("random_" + std::to_string(k), uniform_losses(rng, n, m, sizes.loss_scale));

    {
        // Integer losses; atom 1 repeats atom 0's aggregate exactly while the
        // sorted loss column differs (mass moves from row 1 onto row 0).
        std::uniform_int_distribution<int> dist(1, 20);
        Matrix losses(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = double(dist(rng));
        if (n >= 2) {
            losses.at(0, 1) = losses.at(0, 0) + losses.at(1, 0);
            losses.at(1, 1) = 0.0;
            for (std::size_t i = 2; i < n; ++i) losses.at(i, 1) = losses.at(i, 0);
        } else {
            losses.at(0, 1) = losses.at(0, 0);
        }
        add("int_tied", std::move(losses));
    }

    {
        // Row 1 mirrors row 0 around 10, other rows are flat: the aggregate is
        // the same integer in every atom while row 0 genuinely varies.
        std::uniform_int_distribution<int> dist(0, 10);
        Matrix losses(n, m);
        for (std::size_t j = 0; j < m; ++j) losses.at(0, j) = double(dist(rng));
        losses.at(0, 0) = 2.0;
        losses.at(0, 1) = 7.0;
        if (n >= 2)
            for (std::size_t j = 0; j < m; ++j) losses.at(1, j) = 10.0 - losses.at(0, j);
        else
            for (std::size_t j = 0; j < m; ++j) losses.at(0, j) = 5.0;
        for (std::size_t i = 2; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = 2.0 * double(i + 1);
        add("anticorrelated", std::move(losses));
    }

    {
        Matrix losses = uniform_losses(rng, n, m, sizes.loss_scale);
        for (std::size_t j = 0; j < m; ++j) losses.at(0, j) = 0.0;
        add("zero_row", std::move(losses));
    }

    std::size_t equal_mean_index = 0;
    {
        // Every row has the same mean: row 0 is random, the others sit at its
        // expectation.
        Matrix losses(n, m);
        std::uniform_real_distribution<double> dist(0.0, sizes.loss_scale);
        for (std::size_t j = 0; j < m; ++j) losses.at(0, j) = dist(rng);
        Pool probe(space, losses);
        const double mu = expectation(probe.loss(0));
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) losses.at(i, j) = mu;
        add("equal_mean", std::move(losses));
        equal_mean_index = battery.pools_.size() - 1;
    }

    std::size_t equal_scenario_index = 0;
    {
        // Every row shows the same loss in atom 0.
        Matrix losses = uniform_losses(rng, n, m, sizes.loss_scale);
        for (std::size_t i = 0; i < n; ++i) losses.at(i, 0) = 5.0;
        add("equal_scenario", std::move(losses));
        equal_scenario_index = battery.pools_.size() - 1;
    }

    {
        // Two rebalancings of one earlier pool's aggregate: everything on row
        // 0, and a fixed proportional split. Their atoms collide with the base
        // pool's on S, which is what the cross-pool checks feed on.
        const std::size_t base_index = sizes.random_pools > 0 ? 3 : 2;
        const RandomVariable s = aggregate(battery.pools_[base_index]);
        Matrix concentrated(n, m, 0.0);
        for (std::size_t j = 0; j < m; ++j) concentrated.at(0, j) = s[j];
        add("rebalance_concentrated", std::move(concentrated));
        add("rebalance_proportional",
            proportional_split(space, s, split_coefficients(rng, n)).losses());
    }

    {
        // Proportional rebalancings of the equal-mean and equal-scenario
        // pools, so the ordered-vs-proportional hybrids face cross-pool
        // collisions on their ordered branches.
        const RandomVariable s_mean = aggregate(battery.pools_[equal_mean_index]);
        add("equal_mean_rebalanced",
            proportional_split(space, s_mean, split_coefficients(rng, n)).losses());
        const RandomVariable s_scen = aggregate(battery.pools_[equal_scenario_index]);
        add("equal_scenario_rebalanced",
            proportional_split(space, s_scen, split_coefficients(rng, n)).losses());
    }

    return battery;
}

// ---- battery-level driver --------------------------------------------------

namespace {

PropertyReport run_single_pool(const CheckRequest& request, const BoundRule& rule,
                               const Pool& pool, std::span<const Permutation> perms,
                               const Tolerances& tol, const std::string& label) {
    switch (request.kind) {
        case PropertyKind::FullAllocation:
            return check_full_allocation(rule, pool, label);
        case PropertyKind::Reshuffling:
            return check_reshuffling(rule, pool, perms, tol, label);
        case PropertyKind::SourceAnonymous:
            return check_source_anonymous(rule, pool, perms, tol, label);
        case PropertyKind::Aggregate:
            return check_aggregate(rule, pool, tol, label);
        case PropertyKind::SourceAnonymousQRatio:
            return check_source_anonymous_q_ratio(rule, *request.q, pool, perms, tol, label);
        case PropertyKind::SourceAnonymousStd:
            return check_source_anonymous_std(rule, *request.q1, *request.q2, pool, perms, tol,
                                              label);
        default:
            throw std::logic_error("not a single-pool property");
    }
}

}  // namespace

PropertyReport check_on_battery(const CheckRequest& request, const BoundRule& rule,
                                const Battery& battery, const Tolerances& tol) {
    const auto& pools = battery.pools();
    const auto& labels = battery.labels();

    const bool needs_q = request.kind == PropertyKind::SourceAnonymousQRatio ||
                         request.kind == PropertyKind::StronglyAggregateQRatio;
    const bool needs_q1q2 = request.kind == PropertyKind::SourceAnonymousStd ||
                            request.kind == PropertyKind::StronglyAggregateStd;
    if (needs_q && !request.q)
        throw std::invalid_argument("property '" + to_string(request.kind) +
                                    "' needs a risk metric q");
    if (needs_q1q2 && (!request.q1 || !request.q2))
        throw std::invalid_argument("property '" + to_string(request.kind) +
                                    "' needs metrics q1 and q2");

    switch (request.kind) {
        case PropertyKind::StronglyAggregate:
            return check_strongly_aggregate(rule, pools, tol, labels);
        case PropertyKind::StronglyAggregateQRatio:
            return check_strongly_aggregate_q_ratio(rule, *request.q, pools, tol, labels);
        case PropertyKind::StronglyAggregateStd:
            return check_strongly_aggregate_std(rule, *request.q1, *request.q2, pools, tol,
                                                labels);
        default:
            break;
    }

    const std::size_t n = pools.empty() ? 0 : pools.front().participants();
    const std::vector<Permutation> perms = permutation_set(n, battery.seed());

    PropertyReport merged;
    merged.rule_id = rule.id;
    merged.rule = rule;
    merged.kind = request.kind;
    merged.q = request.q;
    merged.q1 = request.q1;
    merged.q2 = request.q2;

    for (std::size_t p = 0; p < pools.size(); ++p) {
        PropertyReport r = run_single_pool(request, rule, pools[p], perms, tol, labels[p]);
        merged.pools_checked += r.pools_checked;
        merged.pools_skipped += r.pools_skipped;
        merged.perms_used += r.perms_used;
        if (r.violated()) {
            merged.verdict = Verdict::Violated;
            merged.witness = std::move(r.witness);
            return merged;
        }
    }

    if (merged.pools_checked == 0) {
        merged.verdict = Verdict::Skipped;
        merged.reason = "every battery pool is degenerate for this rule";
    }
    return merged;
}

}  // namespace riskshare
