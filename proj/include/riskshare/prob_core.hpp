#pragma once
// Finite probability spaces, random variables as realization vectors, pools of
// participant losses, permutations and contribution matrices. Everything here
// is an immutable value after construction; all operations are pure functions,
// so concurrent use needs no synchronization.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskshare {

// Atom weights must be strictly positive and sum to 1 within this tolerance.
inline constexpr double ATOM_SUM_TOL = 1e-12;

// Two aggregate-loss realizations belong to the same level set when
// |a - b| <= S_LEVEL_REL * max(1, |a|, |b|). Conditional means, measurability
// checks and cross-pool slot matching all share this single definition.
inline constexpr double S_LEVEL_REL = 1e-9;

// Absolute + relative comparison used by every axiom check.
struct Tolerances {
    double abs = 1e-9;
    double rel = 1e-9;

    bool close(double a, double b) const;
};

// Full allocation is checked at a fixed |sum C - S| <= 1e-9 + 1e-12*|S|.
Tolerances full_allocation_tolerances();

class ProbSpace;
using SpacePtr = std::shared_ptr<const ProbSpace>;

// Finite atom set with strictly positive weights summing to one.
class ProbSpace {
   public:
    explicit ProbSpace(std::vector<double> weights);

    static SpacePtr make(std::vector<double> weights);
    static SpacePtr uniform(std::size_t atom_count);

    std::size_t atom_count() const { return weights_.size(); }
    double weight(std::size_t atom) const { return weights_.at(atom); }
    const std::vector<double>& weights() const { return weights_; }

    bool operator==(const ProbSpace& rhs) const { return weights_ == rhs.weights_; }

   private:
    std::vector<double> weights_;
};

// Dense row-major matrix; rows are participants, columns are atoms.
class Matrix {
   public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const;

    bool operator==(const Matrix& rhs) const = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// A loss (or any scalar quantity) realized atom by atom on a ProbSpace.
class RandomVariable {
   public:
    RandomVariable(SpacePtr space, std::vector<double> values);

    const ProbSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t atom) const { return values_[atom]; }
    const std::vector<double>& values() const { return values_; }

   private:
    SpacePtr space_;
    std::vector<double> values_;
};

RandomVariable zero_rv(SpacePtr space);
RandomVariable constant_rv(SpacePtr space, double value);

bool same_space(const RandomVariable& a, const RandomVariable& b);

// A pool of n nonnegative participant losses over a shared space.
class Pool {
   public:
    Pool(SpacePtr space, Matrix losses);

    static Pool from_rows(SpacePtr space, const std::vector<std::vector<double>>& rows);

    const ProbSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    std::size_t participants() const { return losses_.rows(); }
    std::size_t atoms() const { return losses_.cols(); }
    const Matrix& losses() const { return losses_; }

    // Row i as a RandomVariable on the pool's space.
    RandomVariable loss(std::size_t participant) const;

    bool operator==(const Pool& rhs) const;

   private:
    SpacePtr space_;
    Matrix losses_;
};

// Result position i takes source index mapping[i]: reshuffled row i = X_{pi(i)}.
class Permutation {
   public:
    explicit Permutation(std::vector<std::size_t> mapping);

    static Permutation identity(std::size_t n);

    std::size_t size() const { return mapping_.size(); }
    std::size_t operator()(std::size_t i) const { return mapping_[i]; }
    const std::vector<std::size_t>& mapping() const { return mapping_; }

    Permutation inverse() const;
    bool is_identity() const;

    bool operator==(const Permutation& rhs) const = default;

   private:
    std::vector<std::size_t> mapping_;
};

// Every permutation of {0..n-1} in lexicographic order; n! entries, n <= 6 only.
std::vector<Permutation> all_permutations(std::size_t n);

// Seeded sample of distinct-ish random permutations for larger n.
std::vector<Permutation> sample_permutations(std::size_t n, std::size_t count, std::uint64_t seed);

// Exhaustive below the cap, sampled (120 draws) above it.
std::vector<Permutation> permutation_set(std::size_t n, std::uint64_t seed = 0);

// Per-participant contributions per atom. Entries may be negative: linear
// rules can produce negative realizations even for nonnegative losses.
class ContributionMatrix {
   public:
    ContributionMatrix() = default;
    explicit ContributionMatrix(Matrix values);

    std::size_t participants() const { return values_.rows(); }
    std::size_t atoms() const { return values_.cols(); }
    double at(std::size_t participant, std::size_t atom) const { return values_.at(participant, atom); }
    std::span<const double> row(std::size_t participant) const { return values_.row(participant); }
    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }

    bool operator==(const ContributionMatrix& rhs) const = default;

   private:
    Matrix values_;
};

// S(w_j) = sum_i X_i(w_j). Columns accumulate in sorted value order, which
// makes the aggregate bit-identical under any reshuffle of the rows.
RandomVariable aggregate(const Pool& pool);

// Row i of the result is row perm(i) of the input; the space is shared.
Pool reshuffle(const Pool& pool, const Permutation& perm);

double expectation(const RandomVariable& rv);

// Two-pass centered covariance: sum_j w_j (a_j - E[a])(b_j - E[b]).
double covariance(const RandomVariable& a, const RandomVariable& b);

// covariance(a, a); nonnegative by construction of the centered sum.
double variance(const RandomVariable& a);

bool same_level(double a, double b, double rel = S_LEVEL_REL);

// Partition of atom indices into S-level sets: sort by value, split where the
// gap between sorted neighbours exceeds the tolerance. Groups are reported in
// ascending value order.
std::vector<std::vector<std::size_t>> level_groups(std::span<const double> values,
                                                   double rel = S_LEVEL_REL);

}  // namespace riskshare
