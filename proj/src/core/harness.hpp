#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"
#include "solvers.hpp"

namespace kplane {

enum class Algo { kplane, mkplane, em };

Algo algo_from_name(const std::string& name);
const char* to_string(Algo algo);

struct CvSpec {
    int folds = 10;
    int repeats = 10;
    Algo algo = Algo::mkplane;
    std::vector<int> k_values;
    std::vector<double> gamma_grid;
    MixtureConfig base;  // k/gamma overridden per grid cell
    bool scale = true;
    std::uint64_t seed = 0;
};

struct CvCell {
    Algo algo;
    int k = 0;
    double gamma = 0.0;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double time_mean = 0.0;  // seconds, fit only
    double time_std = 0.0;
    int failures = 0;  // fold runs the solver could not complete
};

struct CvReport {
    std::vector<CvCell> cells;
    // lowest mean MSE gamma per k
    std::vector<std::pair<int, double>> chosen_gamma;
};

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed);

CvReport run_cv(const Dataset& data, const CvSpec& spec);

void write_report_csv(const CvReport& report, const std::string& path);
std::string summarize(const CvReport& report);

// Fits one algorithm with optional train-side feature scaling; the
// returned model carries the scaling and predicts from raw features.
FitResult fit_algo(const Dataset& raw_train, Algo algo, const MixtureConfig& config,
                   bool scale);

}  // namespace kplane
