#include "synth.hpp"

#include <random>

#include "errors.hpp"
#include "rng.hpp"

namespace kplane {

double domain_max(Problem problem) {
    return problem == Problem::p1 ? 5.0 : 3.0;
}

double true_function(Problem problem, double x) {
    if (x < 0.0 || x > domain_max(problem))
        throw InvalidInputError("true_function: x outside problem domain");
    if (problem == Problem::p1) {
        if (x < 1.0) return x;
        if (x < 2.0) return 2.0 - x;
        if (x < 3.5) return (7.0 - 2.0 * x) / 3.0;
        return (2.0 * x - 7.0) / 3.0;
    }
    // Problem 2
    if (x < 1.0) return x;
    if (x < 2.0) return 1.0;
    return x;
}

Dataset generate(const SynthSpec& spec) {
    if (spec.n < 1)
        throw InvalidInputError("generate: need n >= 1");
    if (spec.noise_std < 0.0)
        throw InvalidInputError("generate: noise_std must be nonnegative");
    auto rng = derived_rng(spec.seed);
    std::uniform_real_distribution<double> ux(0.0, domain_max(spec.problem));
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset data(spec.n, 1);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double x = ux(rng);
        data.row(i)[0] = x;
        double y = true_function(spec.problem, x);
        if (spec.noise_std > 0.0) y += spec.noise_std * noise(rng);
        data.target(i) = y;
    }
    return data;
}

}  // namespace kplane
