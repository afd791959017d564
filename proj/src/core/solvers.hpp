#pragma once

#include <cstdint>
#include <vector>

#include "model.hpp"

namespace kplane {

enum class EmptyClusterPolicy { reseed_worst_point, drop_cluster };

struct SolverConfig {
    int k = 1;
    double gamma = 0.0;
    int max_iters = 100;
    double objective_rel_tol = 1e-10;
    int restarts = 10;
    std::uint64_t seed = 0;
    EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::reseed_worst_point;
};

struct MixtureConfig : SolverConfig {
    double epsilon = 0.01;
    double anneal_factor = 1.0;
    double epsilon_min = 1e-8;
};

struct MixtureModel {
    std::vector<double> alphas;
    std::vector<AffineModel> planes;
    std::vector<std::vector<double>> centroids;
    double epsilon = 0.01;
    double gamma = 0.0;

    std::size_t k() const { return planes.size(); }
    std::size_t dim() const { return planes.empty() ? 0 : planes[0].dim(); }
    void validate() const;
};

struct FitResult {
    PiecewiseModel model;
    FitTrace trace;
};

struct EmFitResult {
    MixtureModel mixture;
    PiecewiseModel hardened;
    FitTrace trace;
};

// Distance-weighted seeding on feature vectors plus a least-squares fit
// on each seed's Voronoi cell. Deterministic in (config.seed, restart_index).
PiecewiseModel init_model(const Dataset& data, const SolverConfig& config,
                          int restart_index);

// Alternating residual-only assignment and per-cluster least squares;
// centroids of the returned model are the final cluster means.
FitResult fit_kplane(const Dataset& data, const SolverConfig& config);

// Alternating gamma-weighted assignment, per-cluster least squares and
// centroid means. The per-iteration objective is checked to be
// non-increasing.
FitResult fit_mkplane(const Dataset& data, const SolverConfig& config);

// Single run of the modified algorithm from a given starting model
// (no restarts, no re-initialization).
FitResult fit_mkplane_from(const Dataset& data, const SolverConfig& config,
                           PiecewiseModel start);

// Optimal planes and centroid means for a fixed partition (every cluster
// must be nonempty).
PiecewiseModel refit_to_assignment(const Dataset& data, const Assignment& assignment,
                                   double gamma);

// Responsibilities r[n*K + k], rows summing to 1; costs are shifted by
// the row minimum before exponentiating so no row underflows to zero.
std::vector<double> em_e_step(const Dataset& data, const MixtureModel& model);

// Responsibility-weighted updates for alphas, planes and centroids.
// A component whose total responsibility falls below 1e-12 is handled
// by the empty-cluster policy.
MixtureModel em_m_step(const Dataset& data, const std::vector<double>& responsibilities,
                       const MixtureModel& current,
                       EmptyClusterPolicy policy = EmptyClusterPolicy::reseed_worst_point);

EmFitResult fit_em(const Dataset& data, const MixtureConfig& config);

}  // namespace kplane
