#include "model.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace kplane {

double ScalingParams::apply_one(std::size_t feature, double value) const {
    const auto [lo, hi] = min_max[feature];
    if (hi == lo) return 0.0;
    return 2.0 * (value - lo) / (hi - lo) - 1.0;
}

void ScalingParams::apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < min_max.size(); ++j) out[j] = apply_one(j, in[j]);
}

Dataset::Dataset(std::size_t n, std::size_t d)
    : n_(n), d_(d), features_(n * d, 0.0), targets_(n, 0.0) {
    if (n < 1 || d < 1)
        throw InvalidInputError("Dataset: need n >= 1 and d >= 1");
}

Dataset::Dataset(std::vector<double> features, std::vector<double> targets, std::size_t d)
    : n_(targets.size()), d_(d),
      features_(std::move(features)), targets_(std::move(targets)) {
    if (n_ < 1 || d_ < 1 || features_.size() != n_ * d_)
        throw InvalidInputError("Dataset: inconsistent sizes");
}

void Dataset::validate() const {
    for (double v : features_)
        if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite feature");
    for (double v : targets_)
        if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite target");
    if (scaling) {
        if (scaling->dim() != d_)
            throw ValidationError("Dataset: scaling dimension mismatch");
        for (double v : features_)
            if (std::abs(v) > 1.0 + 1e-12)
                throw ValidationError("Dataset: scaled feature outside [-1, 1]");
    }
}

double AffineModel::eval(std::span<const double> x) const {
    double s = b;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
    return s;
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::partitions_stable: return "partitions-stable";
        case Termination::objective_stagnant: return "objective-stagnant";
        case Termination::max_iters: return "max-iters";
    }
    return "unknown";
}

void PiecewiseModel::validate() const {
    if (planes.empty())
        throw ValidationError("PiecewiseModel: need at least one plane");
    if (centroids.size() != planes.size())
        throw ValidationError("PiecewiseModel: planes/centroids count mismatch");
    if (!(gamma >= 0.0))
        throw ValidationError("PiecewiseModel: gamma must be nonnegative");
    const std::size_t d = planes[0].dim();
    for (const auto& p : planes) {
        if (p.dim() != d)
            throw ValidationError("PiecewiseModel: inconsistent plane dimension");
        if (!std::isfinite(p.b))
            throw ValidationError("PiecewiseModel: non-finite intercept");
        for (double v : p.w)
            if (!std::isfinite(v)) throw ValidationError("PiecewiseModel: non-finite weight");
    }
    for (const auto& c : centroids) {
        if (c.size() != d)
            throw ValidationError("PiecewiseModel: centroid dimension mismatch");
        for (double v : c)
            if (!std::isfinite(v)) throw ValidationError("PiecewiseModel: non-finite centroid");
    }
    if (scaling && scaling->dim() != d)
        throw ValidationError("PiecewiseModel: scaling dimension mismatch");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

double point_cost(const PiecewiseModel& model, std::size_t cluster,
                  std::span<const double> x, double y, double gamma) {
    const double r = model.planes[cluster].eval(x) - y;
    double c = r * r;
    if (gamma > 0.0) c += gamma * squared_distance(x, model.centroids[cluster]);
    return c;
}

Assignment assign_hard(const Dataset& data, const PiecewiseModel& model, double gamma) {
    if (model.dim() != data.dim())
        throw InvalidInputError("assign_hard: model/data dimension mismatch");
    const std::size_t k = model.k();
    Assignment out;
    out.labels.resize(data.size());
    out.sizes.assign(k, 0);
    for (std::size_t n = 0; n < data.size(); ++n) {
        int best = 0;
        double best_cost = point_cost(model, 0, data.row(n), data.target(n), gamma);
        for (std::size_t j = 1; j < k; ++j) {
            const double c = point_cost(model, j, data.row(n), data.target(n), gamma);
            if (c < best_cost) {
                best_cost = c;
                best = static_cast<int>(j);
            }
        }
        out.labels[n] = best;
        ++out.sizes[best];
    }
    return out;
}

double objective(const Dataset& data, const PiecewiseModel& model,
                 const Assignment& assignment) {
    if (assignment.labels.size() != data.size())
        throw InvalidInputError("objective: assignment/data size mismatch");
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n)
        total += point_cost(model, static_cast<std::size_t>(assignment.labels[n]),
                            data.row(n), data.target(n), model.gamma);
    return total;
}

namespace {

// Nearest-centroid plane on an already-scaled feature vector.
double predict_in_model_space(const PiecewiseModel& model, std::span<const double> x) {
    std::size_t best = 0;
    double best_dist = squared_distance(x, model.centroids[0]);
    for (std::size_t j = 1; j < model.k(); ++j) {
        const double d2 = squared_distance(x, model.centroids[j]);
        if (d2 < best_dist) {
            best_dist = d2;
            best = j;
        }
    }
    return model.planes[best].eval(x);
}

}  // namespace

double predict(const PiecewiseModel& model, std::span<const double> x) {
    if (x.size() != model.dim())
        throw InvalidInputError("predict: feature dimension mismatch");
    if (!model.scaling) return predict_in_model_space(model, x);
    std::vector<double> scaled(x.size());
    model.scaling->apply(x, scaled);
    return predict_in_model_space(model, scaled);
}

double mse(const PiecewiseModel& model, const Dataset& data) {
    if (data.size() == 0)
        throw InvalidInputError("mse: empty dataset");
    if (data.dim() != model.dim())
        throw InvalidInputError("mse: model/data dimension mismatch");
    // A dataset that already carries scaling metadata is in model space.
    const bool rescale = model.scaling.has_value() && !data.scaling.has_value();
    std::vector<double> buf(data.dim());
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        double yhat;
        if (rescale) {
            model.scaling->apply(data.row(n), buf);
            yhat = predict_in_model_space(model, buf);
        } else {
            yhat = predict_in_model_space(model, data.row(n));
        }
        const double r = yhat - data.target(n);
        total += r * r;
    }
    return total / static_cast<double>(data.size());
}

}  // namespace kplane
