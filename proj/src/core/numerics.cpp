#include "numerics.hpp"

#include <cmath>

#include "errors.hpp"

namespace kplane {

SymSystem::SymSystem(std::size_t dim)
    : dim_(dim), a_(dim * dim, 0.0), b_(dim, 0.0) {
    if (dim == 0)
        throw InvalidInputError("SymSystem: dimension must be positive");
}

void SymSystem::accumulate(std::span<const double> x, double y, double weight) {
    if (x.size() != dim_)
        throw InvalidInputError("SymSystem::accumulate: dimension mismatch");
    if (weight < 0.0 || !std::isfinite(weight))
        throw InvalidInputError("SymSystem::accumulate: weight must be nonnegative");
    for (std::size_t i = 0; i < dim_; ++i) {
        const double wxi = weight * x[i];
        for (std::size_t j = 0; j < dim_; ++j)
            a_[i * dim_ + j] += wxi * x[j];
        b_[i] += wxi * y;
    }
    ++n_;
}

void SymSystem::merge(const SymSystem& other) {
    if (other.dim_ != dim_)
        throw InvalidInputError("SymSystem::merge: dimension mismatch");
    for (std::size_t i = 0; i < dim_ * dim_; ++i) a_[i] += other.a_[i];
    for (std::size_t i = 0; i < dim_; ++i) b_[i] += other.b_[i];
    n_ += other.n_;
}

double SymSystem::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += a(i, i);
    return t;
}

std::vector<double> solve_spd(const SymSystem& sys, double ridge) {
    if (sys.count() == 0)
        throw InvalidInputError("solve_spd: system has no accumulated points");
    if (ridge < 0.0)
        throw InvalidInputError("solve_spd: ridge must be nonnegative");

    const std::size_t d = sys.dim_;
    std::vector<double> l(sys.a_);  // lower-triangular factor, in place
    for (std::size_t i = 0; i < d; ++i) l[i * d + i] += ridge;

    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        max_diag = std::max(max_diag, std::abs(l[i * d + i]));
    const double pivot_floor = 1e-13 * std::max(max_diag, 1e-300);

    for (std::size_t j = 0; j < d; ++j) {
        double diag = l[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
        if (!(diag > pivot_floor))
            throw DegenerateSystemError("solve_spd: matrix not positive definite");
        diag = std::sqrt(diag);
        l[j * d + j] = diag;
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = l[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            l[i * d + j] = s / diag;
        }
    }

    // forward then backward substitution
    std::vector<double> w(sys.b_);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < i; ++k) w[i] -= l[i * d + k] * w[k];
        w[i] /= l[i * d + i];
    }
    for (std::size_t ii = d; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < d; ++k) w[ii] -= l[k * d + ii] * w[k];
        w[ii] /= l[ii * d + ii];
    }
    return w;
}

std::vector<double> solve_with_fallback(const SymSystem& sys) {
    try {
        return solve_spd(sys, 0.0);
    } catch (const DegenerateSystemError&) {
        const double ridge = 1e-8 * sys.trace() / static_cast<double>(sys.dim());
        if (!(ridge > 0.0))
            throw DegenerateSystemError("solve_with_fallback: all-zero system");
        return solve_spd(sys, ridge);
    }
}

}  // namespace kplane
