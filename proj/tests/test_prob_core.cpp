#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "riskshare/prob_core.hpp"

using namespace riskshare;

namespace {

SpacePtr quarter_space() { return ProbSpace::make({0.5, 0.25, 0.25}); }

Pool example_pool() { return Pool::from_rows(quarter_space(), {{0, 4, 8}, {2, 2, 2}}); }

}  // namespace

TEST_CASE("ProbSpace validates weights") {
    CHECK_THROWS_AS(ProbSpace::make({}), std::invalid_argument);
    CHECK_THROWS_AS(ProbSpace::make({0.5, 0.5, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(ProbSpace::make({0.5, -0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ProbSpace::make({0.5, 0.4}), std::invalid_argument);  // sums to 0.9

    const auto s = quarter_space();
    CHECK(s->atom_count() == 3);
    CHECK(s->weight(0) == 0.5);

    const auto u = ProbSpace::uniform(4);
    CHECK(u->atom_count() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(u->weight(j) == 0.25);
}

TEST_CASE("RandomVariable and Pool validate shapes") {
    const auto s = quarter_space();
    CHECK_THROWS_AS(RandomVariable(s, {1.0, 2.0}), std::invalid_argument);  // length 2 != 3
    CHECK_THROWS_AS(Pool::from_rows(s, {{0, 4, 8}, {2, -1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(Pool::from_rows(s, {}), std::invalid_argument);

    const Pool pool = example_pool();
    CHECK(pool.participants() == 2);
    CHECK(pool.atoms() == 3);
    CHECK(pool.loss(1).values() == std::vector<double>{2, 2, 2});
}

TEST_CASE("aggregate sums columns") {
    CHECK(aggregate(example_pool()).values() == std::vector<double>{2, 6, 10});

    const auto half = ProbSpace::make({0.5, 0.5});
    const Pool zero = Pool::from_rows(half, {{0, 0}, {0, 0}});
    CHECK(aggregate(zero).values() == std::vector<double>{0, 0});

    const Pool tied = Pool::from_rows(half, {{1, 3}, {3, 1}});
    CHECK(aggregate(tied).values() == std::vector<double>{4, 4});
}

TEST_CASE("aggregate is bit-identical under reshuffles") {
    // Columns accumulate in sorted value order, so row order cannot change
    // the floating-point sum.
    const auto s = ProbSpace::make({0.3, 0.3, 0.4});
    const Pool pool = Pool::from_rows(s, {{0.1, 7.3, 2.2}, {0.7, 0.01, 5.5}, {3.3, 1.9, 0.002}});
    const auto base = aggregate(pool).values();
    for (const auto& perm : all_permutations(3)) {
        CHECK(aggregate(reshuffle(pool, perm)).values() == base);
    }
}

TEST_CASE("Permutation basics") {
    CHECK_THROWS_AS(Permutation({0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Permutation({0, 2}), std::invalid_argument);

    const Permutation p({2, 0, 1});
    CHECK(p(0) == 2);
    CHECK(p.inverse().mapping() == std::vector<std::size_t>{1, 2, 0});
    CHECK(Permutation::identity(3).is_identity());
    CHECK(!p.is_identity());
}

TEST_CASE("reshuffle takes row perm(i)") {
    const Pool pool = example_pool();

    SUBCASE("swap") {
        const Pool swapped = reshuffle(pool, Permutation({1, 0}));
        CHECK(swapped.losses().row(0)[0] == 2);
        CHECK(swapped.losses().row(0)[1] == 2);
        CHECK(swapped.losses().row(1)[2] == 8);
    }
    SUBCASE("identity is a no-op") {
        CHECK(reshuffle(pool, Permutation::identity(2)) == pool);
    }
    SUBCASE("three rows, pi=(2,0,1) reorders as (X3,X1,X2)") {
        const auto s = quarter_space();
        const Pool p3 = Pool::from_rows(s, {{1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
        const Pool r = reshuffle(p3, Permutation({2, 0, 1}));
        CHECK(r.losses().row(0)[0] == 3);
        CHECK(r.losses().row(1)[0] == 1);
        CHECK(r.losses().row(2)[0] == 2);
    }
    SUBCASE("size mismatch throws") {
        CHECK_THROWS_AS(reshuffle(pool, Permutation({0, 2, 1})), std::invalid_argument);
    }
    SUBCASE("round trip through the inverse is exact") {
        const auto s = quarter_space();
        const Pool p3 = Pool::from_rows(s, {{1, 4, 2}, {0.5, 2, 7}, {3, 0, 1}});
        for (const auto& perm : all_permutations(3)) {
            CHECK(reshuffle(reshuffle(p3, perm), perm.inverse()) == p3);
        }
    }
}

TEST_CASE("all_permutations enumerates lexicographically") {
    CHECK(all_permutations(1).size() == 1);
    const auto perms = all_permutations(3);
    REQUIRE(perms.size() == 6);
    CHECK(perms.front().is_identity());
    CHECK(perms.back().mapping() == std::vector<std::size_t>{2, 1, 0});
    CHECK_THROWS_AS(all_permutations(7), std::invalid_argument);

    // permutation_set: exhaustive at small n, sampled above the cap.
    CHECK(permutation_set(3).size() == 6);
    const auto sampled = permutation_set(8, 42);
    CHECK(sampled.size() == 120);
    CHECK(sampled == permutation_set(8, 42));  // seeded determinism
}

TEST_CASE("expectation is the weight dot product") {
    const auto s = quarter_space();
    CHECK(expectation(RandomVariable(s, {0, 4, 8})) == 3.0);
    CHECK(expectation(constant_rv(s, 7.5)) == doctest::Approx(7.5).epsilon(1e-15));
    CHECK(expectation(RandomVariable(ProbSpace::uniform(2), {1, 3})) == 2.0);
}

TEST_CASE("covariance and variance") {
    const auto s = quarter_space();
    const RandomVariable x(s, {0, 4, 8});
    const RandomVariable agg(s, {2, 6, 10});

    // E[xS] = 26, E[x] = 3, E[S] = 5 -> cov = 11.
    CHECK(covariance(x, agg) == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(covariance(constant_rv(s, 4.0), agg) == doctest::Approx(0.0).epsilon(1e-12));
    // var(S) = E[S^2] - 25 = 36 - 25 = 11.
    CHECK(variance(agg) == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(covariance(agg, agg) == variance(agg));

    const RandomVariable other(ProbSpace::uniform(3), {1, 2, 3});
    CHECK_THROWS_AS(covariance(x, other), std::invalid_argument);
}

TEST_CASE("variance is nonnegative and covariance is bilinear over pools") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(0.0, 50.0);
    const auto s = ProbSpace::uniform(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> rows(3, std::vector<double>(5));
        for (auto& row : rows)
            for (auto& v : row) v = dist(rng);
        const Pool pool(s, Matrix::from_rows(rows));
        const RandomVariable agg = aggregate(pool);

        double cov_sum = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(variance(pool.loss(i)) >= -1e-12);
            cov_sum += covariance(pool.loss(i), agg);
        }
        const double var_s = variance(agg);
        CHECK(cov_sum == doctest::Approx(var_s).epsilon(1e-9));
    }
}

TEST_CASE("same_level and level_groups") {
    CHECK(same_level(4.0, 4.0));
    CHECK(same_level(100.0, 100.0 + 5e-8));      // inside 1e-9 * 100
    CHECK(!same_level(100.0, 100.0 + 5e-7));     // outside
    CHECK(same_level(0.0, 5e-10));               // absolute floor max(1,...)
    CHECK(!same_level(0.0, 5e-9));

    const std::vector<double> vals{4.0, 1.0, 4.0, 9.0};
    const auto groups = level_groups(vals);
    REQUIRE(groups.size() == 3);  // ascending value order
    CHECK(groups[0] == std::vector<std::size_t>{1});
    CHECK(groups[1] == std::vector<std::size_t>{0, 2});  // tie keeps atom order
    CHECK(groups[2] == std::vector<std::size_t>{3});
}

TEST_CASE("Tolerances::close mixes absolute and relative slack") {
    const Tolerances tol;  // 1e-9 / 1e-9
    CHECK(tol.close(1.0, 1.0 + 5e-10));
    CHECK(!tol.close(1.0, 1.0 + 5e-9));
    CHECK(tol.close(1e6, 1e6 + 5e-4));   // relative term dominates
    CHECK(!tol.close(1e6, 1e6 + 5e-3));

    const Tolerances fa = full_allocation_tolerances();
    CHECK(fa.abs == 1e-9);
    CHECK(fa.rel == 1e-12);
}
