#include "riskshare/prob_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace riskshare {

bool Tolerances::close(double a, double b) const {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

Tolerances full_allocation_tolerances() { return Tolerances{1e-9, 1e-12}; }

ProbSpace::ProbSpace(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("ProbSpace: at least one atom required");
    double sum = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        const double w = weights_[j];
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("ProbSpace: weight of atom " + std::to_string(j) +
                                        " must be strictly positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > ATOM_SUM_TOL)
        throw std::invalid_argument("ProbSpace: weights sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-12");
}

SpacePtr ProbSpace::make(std::vector<double> weights) {
    return std::make_shared<const ProbSpace>(std::move(weights));
}

SpacePtr ProbSpace::uniform(std::size_t atom_count) {
    if (atom_count == 0) throw std::invalid_argument("ProbSpace: at least one atom required");
    return make(std::vector<double>(atom_count, 1.0 / static_cast<double>(atom_count)));
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols_)
            throw std::invalid_argument("Matrix: ragged rows (row " + std::to_string(r) + ")");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
    return out;
}

RandomVariable::RandomVariable(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw std::invalid_argument("RandomVariable: null space");
    if (values_.size() != space_->atom_count())
        throw std::invalid_argument("RandomVariable: got " + std::to_string(values_.size()) +
                                    " values for " + std::to_string(space_->atom_count()) + " atoms");
}

RandomVariable zero_rv(SpacePtr space) { return constant_rv(std::move(space), 0.0); }

RandomVariable constant_rv(SpacePtr space, double value) {
    if (!space) throw std::invalid_argument("constant_rv: null space");
    std::vector<double> v(space->atom_count(), value);
    return {std::move(space), std::move(v)};
}

bool same_space(const RandomVariable& a, const RandomVariable& b) {
    return a.space_ptr() == b.space_ptr() || a.space() == b.space();
}

Pool::Pool(SpacePtr space, Matrix losses) : space_(std::move(space)), losses_(std::move(losses)) {
    if (!space_) throw std::invalid_argument("Pool: null space");
    if (losses_.rows() == 0) throw std::invalid_argument("Pool: at least one participant required");
    if (losses_.cols() != space_->atom_count())
        throw std::invalid_argument("Pool: losses have " + std::to_string(losses_.cols()) +
                                    " atoms, space has " + std::to_string(space_->atom_count()));
    for (std::size_t i = 0; i < losses_.rows(); ++i)
        for (std::size_t j = 0; j < losses_.cols(); ++j) {
            const double v = losses_.at(i, j);
            if (!std::isfinite(v) || v < 0.0)
                throw std::invalid_argument("Pool: loss of participant " + std::to_string(i) +
                                            " at atom " + std::to_string(j) +
                                            " must be finite and nonnegative");
        }
}

Pool Pool::from_rows(SpacePtr space, const std::vector<std::vector<double>>& rows) {
    return Pool(std::move(space), Matrix::from_rows(rows));
}

RandomVariable Pool::loss(std::size_t participant) const {
    if (participant >= participants())
        throw std::out_of_range("Pool::loss: participant index out of range");
    auto r = losses_.row(participant);
    return RandomVariable(space_, std::vector<double>(r.begin(), r.end()));
}

bool Pool::operator==(const Pool& rhs) const {
    return losses_ == rhs.losses_ && (space_ == rhs.space_ || *space_ == *rhs.space_);
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
    if (mapping_.empty()) throw std::invalid_argument("Permutation: empty mapping");
    std::vector<bool> seen(mapping_.size(), false);
    for (std::size_t v : mapping_) {
        if (v >= mapping_.size() || seen[v])
            throw std::invalid_argument("Permutation: mapping is not a bijection of {0..n-1}");
        seen[v] = true;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> inv(mapping_.size());
    for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
    return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
    for (std::size_t i = 0; i < mapping_.size(); ++i)
        if (mapping_[i] != i) return false;
    return true;
}

std::vector<Permutation> all_permutations(std::size_t n) {
    if (n == 0 || n > 6)
        throw std::invalid_argument("all_permutations: supported for 1 <= n <= 6");
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    std::vector<Permutation> out;
    do {
        out.emplace_back(m);
    } while (std::next_permutation(m.begin(), m.end()));
    return out;
}

std::vector<Permutation> sample_permutations(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_permutations: n must be positive");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    std::vector<Permutation> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::shuffle(m.begin(), m.end(), rng);
        out.emplace_back(m);
    }
    return out;
}

std::vector<Permutation> permutation_set(std::size_t n, std::uint64_t seed) {
    if (n <= 6) return all_permutations(n);
    return sample_permutations(n, 120, seed);
}

ContributionMatrix::ContributionMatrix(Matrix values) : values_(std::move(values)) {}

RandomVariable aggregate(const Pool& pool) {
    const std::size_t n = pool.participants();
    const std::size_t m = pool.atoms();
    std::vector<double> s(m, 0.0);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = pool.losses().at(i, j);
        std::sort(col.begin(), col.end());
        double acc = 0.0;
        for (double v : col) acc += v;
        s[j] = acc;
    }
    return {pool.space_ptr(), std::move(s)};
}

Pool reshuffle(const Pool& pool, const Permutation& perm) {
    if (perm.size() != pool.participants())
        throw std::invalid_argument("reshuffle: permutation length " + std::to_string(perm.size()) +
                                    " does not match participant count " +
                                    std::to_string(pool.participants()));
    Matrix out(pool.participants(), pool.atoms());
    for (std::size_t i = 0; i < pool.participants(); ++i) {
        auto src = pool.losses().row(perm(i));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return Pool(pool.space_ptr(), std::move(out));
}

double expectation(const RandomVariable& rv) {
    const auto& w = rv.space().weights();
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * rv[j];
    return acc;
}

double covariance(const RandomVariable& a, const RandomVariable& b) {
    if (!same_space(a, b)) throw std::invalid_argument("covariance: operands live on different spaces");
    const auto& w = a.space().weights();
    const double ma = expectation(a);
    const double mb = expectation(b);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * (a[j] - ma) * (b[j] - mb);
    return acc;
}

double variance(const RandomVariable& a) { return covariance(a, a); }

bool same_level(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<std::vector<std::size_t>> level_groups(std::span<const double> values, double rel) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        // Index tie-break: exact value ties keep ascending atom order, so
        // group accumulation order (and thus the float result) is stable.
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });

    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || !same_level(values[order[k]], values[order[k - 1]], rel))
            groups.emplace_back();
        groups.back().push_back(order[k]);
    }
    return groups;
}

}  // namespace riskshare
