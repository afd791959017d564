#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kplane {

// Per-feature (min, max) recorded from a training split; maps features
// affinely onto [-1, 1]. A constant feature maps to 0.
struct ScalingParams {
    std::vector<std::pair<double, double>> min_max;

    std::size_t dim() const { return min_max.size(); }
    double apply_one(std::size_t feature, double value) const;
    void apply(std::span<const double> in, std::span<double> out) const;
    bool operator==(const ScalingParams&) const = default;
};

class Dataset {
public:
    Dataset(std::size_t n, std::size_t d);
    Dataset(std::vector<double> features, std::vector<double> targets, std::size_t d);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    std::span<const double> row(std::size_t i) const { return {features_.data() + i * d_, d_}; }
    std::span<double> row(std::size_t i) { return {features_.data() + i * d_, d_}; }
    double target(std::size_t i) const { return targets_[i]; }
    double& target(std::size_t i) { return targets_[i]; }
    const std::vector<double>& targets() const { return targets_; }

    // Set when the stored features have already been mapped to [-1, 1].
    std::optional<ScalingParams> scaling;

    void validate() const;

private:
    std::size_t n_, d_;
    std::vector<double> features_;  // row-major n x d
    std::vector<double> targets_;
};

struct AffineModel {
    std::vector<double> w;
    double b = 0.0;

    std::size_t dim() const { return w.size(); }
    double eval(std::span<const double> x) const;
};

enum class Termination { partitions_stable, objective_stagnant, max_iters };

const char* to_string(Termination t);

struct FitTrace {
    std::vector<double> objective_per_iter;
    int iterations = 0;
    Termination termination = Termination::max_iters;
    std::vector<std::size_t> final_sizes;
};

struct Assignment {
    std::vector<int> labels;         // cluster index per point, 0-based
    std::vector<std::size_t> sizes;  // per-cluster counts

    bool operator==(const Assignment&) const = default;
};

// K affine pieces selected at prediction time by the nearest centroid.
struct PiecewiseModel {
    std::vector<AffineModel> planes;
    std::vector<std::vector<double>> centroids;
    double gamma = 0.0;
    std::optional<ScalingParams> scaling;

    std::size_t k() const { return planes.size(); }
    std::size_t dim() const { return planes.empty() ? 0 : planes[0].dim(); }
    void validate() const;
};

// Per-point cost used by the modified objective: squared residual plus
// gamma times squared distance to the centroid.
double point_cost(const PiecewiseModel& model, std::size_t cluster,
                  std::span<const double> x, double y, double gamma);

Assignment assign_hard(const Dataset& data, const PiecewiseModel& model, double gamma);

double objective(const Dataset& data, const PiecewiseModel& model,
                 const Assignment& assignment);

// Applies the model's stored scaling to a raw feature vector, then
// evaluates the plane whose centroid is nearest (ties to lowest index).
double predict(const PiecewiseModel& model, std::span<const double> x);

double mse(const PiecewiseModel& model, const Dataset& data);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace kplane
