#pragma once

#include <cstdint>

#include "model.hpp"

namespace kplane {

enum class Problem { p1 = 1, p2 = 2 };

struct SynthSpec {
    Problem problem = Problem::p1;
    std::size_t n = 500;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
};

// Domain of the piecewise target: [0, 5] for P1, [0, 3] for P2.
double domain_max(Problem problem);

// Piecewise-affine target value; pieces are left-closed at the
// interior breakpoints.
double true_function(Problem problem, double x);

// x uniform on the domain, y = f(x) + Gaussian(0, noise_std^2),
// deterministic in the seed.
Dataset generate(const SynthSpec& spec);

}  // namespace kplane
