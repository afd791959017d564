#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kplane {

// Accumulated normal equations for a least-squares problem in `dim`
// unknowns: A = sum w * x x^T, b = sum w * y * x. A stays symmetric and
// positive semidefinite by construction.
class SymSystem {
public:
    explicit SymSystem(std::size_t dim);

    void accumulate(std::span<const double> x, double y, double weight = 1.0);
    void merge(const SymSystem& other);

    std::size_t dim() const { return dim_; }
    std::size_t count() const { return n_; }
    double a(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
    const std::vector<double>& rhs() const { return b_; }
    double trace() const;

private:
    std::size_t dim_;
    std::size_t n_ = 0;
    std::vector<double> a_;  // dim x dim, row-major
    std::vector<double> b_;

    friend std::vector<double> solve_spd(const SymSystem&, double);
};

// Solves (A + ridge*I) w = b by Cholesky factorization. Throws
// DegenerateSystemError when the (regularized) matrix is not positive
// definite to working precision.
std::vector<double> solve_spd(const SymSystem& sys, double ridge = 0.0);

// solve_spd with ridge 0 first, then a retry with ridge scaled to
// trace(A)/dim when the plain factorization fails.
std::vector<double> solve_with_fallback(const SymSystem& sys);

}  // namespace kplane
