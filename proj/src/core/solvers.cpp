#include "solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace kplane {

namespace {

std::vector<double> homogeneous(std::span<const double> x) {
    std::vector<double> xt(x.begin(), x.end());
    xt.push_back(1.0);  // bias last
    return xt;
}

AffineModel from_solution(std::vector<double> wt) {
    AffineModel m;
    m.b = wt.back();
    wt.pop_back();
    m.w = std::move(wt);
    return m;
}

AffineModel fit_single_point(const Dataset& data, std::size_t n) {
    SymSystem sys(data.dim() + 1);
    sys.accumulate(homogeneous(data.row(n)), data.target(n));
    return from_solution(solve_with_fallback(sys));
}

// Least-squares plane and mean centroid per cluster for a fixed partition.
void update_params(const Dataset& data, PiecewiseModel& model, const Assignment& assign) {
    const std::size_t k = model.k();
    const std::size_t d = data.dim();
    std::vector<SymSystem> systems(k, SymSystem(d + 1));
    std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto c = static_cast<std::size_t>(assign.labels[n]);
        systems[c].accumulate(homogeneous(data.row(n)), data.target(n));
        const auto x = data.row(n);
        for (std::size_t j = 0; j < d; ++j) means[c][j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (assign.sizes[c] == 0)
            throw InvalidInputError("update_params: empty cluster");
        model.planes[c] = from_solution(solve_with_fallback(systems[c]));
        for (std::size_t j = 0; j < d; ++j)
            means[c][j] /= static_cast<double>(assign.sizes[c]);
        model.centroids[c] = std::move(means[c]);
    }
}

// Resolves empty clusters in place. Returns true when anything changed.
bool apply_empty_policy(const Dataset& data, PiecewiseModel& model,
                        Assignment& assign, double gamma, EmptyClusterPolicy policy) {
    bool changed = false;
    for (;;) {
        std::size_t empty = model.k();
        for (std::size_t c = 0; c < model.k(); ++c)
            if (assign.sizes[c] == 0) { empty = c; break; }
        if (empty == model.k()) return changed;
        changed = true;

        bool reseeded = false;
        if (policy == EmptyClusterPolicy::reseed_worst_point) {
            // Move the point with the largest current cost, drawn only
            // from clusters that can spare one.
            double worst = -1.0;
            std::size_t worst_n = data.size();
            for (std::size_t n = 0; n < data.size(); ++n) {
                const auto c = static_cast<std::size_t>(assign.labels[n]);
                if (assign.sizes[c] < 2) continue;
                const double cost = point_cost(model, c, data.row(n), data.target(n), gamma);
                if (cost > worst) { worst = cost; worst_n = n; }
            }
            if (worst_n < data.size()) {
                const auto old = static_cast<std::size_t>(assign.labels[worst_n]);
                assign.labels[worst_n] = static_cast<int>(empty);
                --assign.sizes[old];
                ++assign.sizes[empty];
                const auto x = data.row(worst_n);
                model.centroids[empty].assign(x.begin(), x.end());
                model.planes[empty] = fit_single_point(data, worst_n);
                reseeded = true;
            }
        }
        if (!reseeded) {
            // drop-cluster, or nothing left to reseed from
            model.planes.erase(model.planes.begin() + static_cast<long>(empty));
            model.centroids.erase(model.centroids.begin() + static_cast<long>(empty));
            assign.sizes.erase(assign.sizes.begin() + static_cast<long>(empty));
            for (auto& l : assign.labels)
                if (l > static_cast<int>(empty)) --l;
        }
    }
}

void check_decrease(double before, double after, const char* what) {
    const double slack = 1e-9 + 1e-12 * std::abs(before);
    if (after > before + slack)
        throw ValidationError(std::string("monotone decrease violated in ") + what);
}

struct SingleRun {
    PiecewiseModel model;
    FitTrace trace;
    double final_objective = 0.0;
};

SingleRun run_alternating(const Dataset& data, const SolverConfig& config,
                          PiecewiseModel model, double gamma) {
    model.gamma = gamma;
    Assignment assign = assign_hard(data, model, gamma);
    apply_empty_policy(data, model, assign, gamma, config.empty_cluster_policy);

    FitTrace trace;
    double prev = objective(data, model, assign);
    Termination term = Termination::max_iters;
    int iter = 0;
    while (iter < config.max_iters) {
        ++iter;
        update_params(data, model, assign);
        const double mid = objective(data, model, assign);
        check_decrease(prev, mid, "parameter update");
        Assignment next = assign_hard(data, model, gamma);
        double cur = objective(data, model, next);
        check_decrease(mid, cur, "assignment update");
        const bool policy_fired =
            apply_empty_policy(data, model, next, gamma, config.empty_cluster_policy);
        if (policy_fired) cur = objective(data, model, next);
        trace.objective_per_iter.push_back(cur);
        if (!policy_fired && next == assign) {
            prev = cur;
            term = Termination::partitions_stable;
            break;
        }
        const double rel = std::abs(cur - prev) / std::max(1.0, std::abs(prev));
        assign = std::move(next);
        prev = cur;
        if (rel <= config.objective_rel_tol) {
            term = Termination::objective_stagnant;
            break;
        }
    }

    trace.iterations = iter;
    trace.termination = term;
    trace.final_sizes = assign.sizes;
    return {std::move(model), std::move(trace), prev};
}

FitResult best_of_restarts(const Dataset& data, const SolverConfig& config, double gamma) {
    if (config.k < 1) throw InvalidInputError("fit: k must be >= 1");
    if (config.restarts < 1) throw InvalidInputError("fit: restarts must be >= 1");
    SingleRun best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
        SingleRun run = run_alternating(data, config, init_model(data, config, r), gamma);
        if (!have || run.final_objective < best.final_objective) {
            best = std::move(run);
            have = true;
        }
    }
    return {std::move(best.model), std::move(best.trace)};
}

}  // namespace

PiecewiseModel init_model(const Dataset& data, const SolverConfig& config,
                          int restart_index) {
    const auto n = data.size();
    const auto d = data.dim();
    const auto k = static_cast<std::size_t>(config.k);
    if (n < k)
        throw InvalidInputError("init_model: need at least K points");

    auto rng = derived_rng(config.seed, static_cast<std::uint64_t>(restart_index));

    // distance-weighted seeding on feature vectors
    std::vector<std::size_t> seeds;
    std::vector<bool> chosen(n, false);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    seeds.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    chosen[seeds[0]] = true;
    while (seeds.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) { dist2[i] = 0.0; continue; }
            dist2[i] = std::min(dist2[i],
                                squared_distance(data.row(i), data.row(seeds.back())));
            total += dist2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                u -= dist2[i];
                if (u <= 0.0 && !chosen[i]) { pick = i; break; }
            }
        }
        if (pick == n) {
            // duplicate-heavy data: fall back to a uniform unchosen index
            std::vector<std::size_t> remaining;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) remaining.push_back(i);
            pick = remaining[std::uniform_int_distribution<std::size_t>(
                0, remaining.size() - 1)(rng)];
        }
        chosen[pick] = true;
        seeds.push_back(pick);
    }

    PiecewiseModel model;
    model.gamma = config.gamma;
    model.centroids.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const auto x = data.row(seeds[c]);
        model.centroids[c].assign(x.begin(), x.end());
    }

    // least-squares fit on each seed's Voronoi cell
    std::vector<SymSystem> systems(k, SymSystem(d + 1));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t nearest = 0;
        double best = squared_distance(data.row(i), model.centroids[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double d2 = squared_distance(data.row(i), model.centroids[c]);
            if (d2 < best) { best = d2; nearest = c; }
        }
        systems[nearest].accumulate(homogeneous(data.row(i)), data.target(i));
    }
    model.planes.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (systems[c].count() == 0)
            systems[c].accumulate(homogeneous(data.row(seeds[c])), data.target(seeds[c]));
        model.planes[c] = from_solution(solve_with_fallback(systems[c]));
    }
    return model;
}

FitResult fit_kplane(const Dataset& data, const SolverConfig& config) {
    SolverConfig cfg = config;
    cfg.gamma = 0.0;  // residual-only assignment
    FitResult result = best_of_restarts(data, cfg, 0.0);
    // Centroids already track final cluster means via the last update.
    return result;
}

FitResult fit_mkplane(const Dataset& data, const SolverConfig& config) {
    if (!(config.gamma >= 0.0))
        throw InvalidInputError("fit_mkplane: gamma must be nonnegative");
    return best_of_restarts(data, config, config.gamma);
}

FitResult fit_mkplane_from(const Dataset& data, const SolverConfig& config,
                           PiecewiseModel start) {
    SingleRun run = run_alternating(data, config, std::move(start), config.gamma);
    return {std::move(run.model), std::move(run.trace)};
}

PiecewiseModel refit_to_assignment(const Dataset& data, const Assignment& assignment,
                                   double gamma) {
    PiecewiseModel model;
    model.gamma = gamma;
    model.planes.resize(assignment.sizes.size());
    model.centroids.resize(assignment.sizes.size());
    update_params(data, model, assignment);
    return model;
}

void MixtureModel::validate() const {
    if (planes.empty()) throw ValidationError("MixtureModel: need at least one component");
    if (alphas.size() != planes.size() || centroids.size() != planes.size())
        throw ValidationError("MixtureModel: component count mismatch");
    double sum = 0.0;
    for (double a : alphas) {
        if (!(a >= 0.0)) throw ValidationError("MixtureModel: negative mixing weight");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError("MixtureModel: mixing weights do not sum to 1");
    if (!(epsilon > 0.0)) throw ValidationError("MixtureModel: epsilon must be positive");
    if (!(gamma >= 0.0)) throw ValidationError("MixtureModel: gamma must be nonnegative");
}

namespace {

double mixture_cost(const MixtureModel& m, std::size_t c,
                    std::span<const double> x, double y) {
    const double r = m.planes[c].eval(x) - y;
    double cost = r * r;
    if (m.gamma > 0.0) cost += m.gamma * squared_distance(x, m.centroids[c]);
    return cost;
}

// Responsibilities plus the incomplete-data negative log-likelihood
// (up to the constant normalization term).
double e_step_impl(const Dataset& data, const MixtureModel& model,
                   std::vector<double>& resp) {
    const std::size_t k = model.k();
    resp.assign(data.size() * k, 0.0);
    double nll = 0.0;
    std::vector<double> cost(k);
    for (std::size_t n = 0; n < data.size(); ++n) {
        double min_cost = std::numeric_limits<double>::infinity();
        std::size_t argmin = 0;
        for (std::size_t c = 0; c < k; ++c) {
            cost[c] = mixture_cost(model, c, data.row(n), data.target(n));
            if (cost[c] < min_cost) { min_cost = cost[c]; argmin = c; }
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double v =
                model.alphas[c] * std::exp(-(cost[c] - min_cost) / (2.0 * model.epsilon));
            resp[n * k + c] = v;
            sum += v;
        }
        if (sum <= 0.0) {
            resp[n * k + argmin] = 1.0;
            sum = 1.0;
        }
        for (std::size_t c = 0; c < k; ++c) resp[n * k + c] /= sum;
        nll += min_cost / (2.0 * model.epsilon) - std::log(sum);
    }
    return nll;
}

}  // namespace

std::vector<double> em_e_step(const Dataset& data, const MixtureModel& model) {
    if (model.dim() != data.dim())
        throw InvalidInputError("em_e_step: model/data dimension mismatch");
    std::vector<double> resp;
    e_step_impl(data, model, resp);
    return resp;
}

MixtureModel em_m_step(const Dataset& data, const std::vector<double>& responsibilities,
                       const MixtureModel& current, EmptyClusterPolicy policy) {
    const std::size_t k = current.k();
    const std::size_t d = data.dim();
    const std::size_t n = data.size();
    if (responsibilities.size() != n * k)
        throw InvalidInputError("em_m_step: responsibility matrix size mismatch");

    MixtureModel next = current;
    std::vector<double> totals(k, 0.0);
    std::vector<SymSystem> systems(k, SymSystem(d + 1));
    std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto xt = homogeneous(data.row(i));
        const auto x = data.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            const double r = responsibilities[i * k + c];
            totals[c] += r;
            systems[c].accumulate(xt, data.target(i), r);
            for (std::size_t j = 0; j < d; ++j) means[c][j] += r * x[j];
        }
    }

    std::vector<std::size_t> starved;
    for (std::size_t c = 0; c < k; ++c) {
        if (totals[c] < 1e-12) {
            starved.push_back(c);
            continue;
        }
        next.alphas[c] = totals[c] / static_cast<double>(n);
        next.planes[c] = from_solution(solve_with_fallback(systems[c]));
        for (std::size_t j = 0; j < d; ++j) means[c][j] /= totals[c];
        next.centroids[c] = std::move(means[c]);
    }

    if (!starved.empty()) {
        if (policy == EmptyClusterPolicy::drop_cluster) {
            for (auto it = starved.rbegin(); it != starved.rend(); ++it) {
                next.alphas.erase(next.alphas.begin() + static_cast<long>(*it));
                next.planes.erase(next.planes.begin() + static_cast<long>(*it));
                next.centroids.erase(next.centroids.begin() + static_cast<long>(*it));
            }
        } else {
            // reseed on the point the current mixture explains worst
            for (std::size_t c : starved) {
                double worst = -1.0;
                std::size_t worst_n = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    double best = std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < k; ++j)
                        best = std::min(best, mixture_cost(next, j, data.row(i), data.target(i)));
                    if (best > worst) { worst = best; worst_n = i; }
                }
                const auto x = data.row(worst_n);
                next.centroids[c].assign(x.begin(), x.end());
                next.planes[c] = fit_single_point(data, worst_n);
                next.alphas[c] = 1.0 / static_cast<double>(n);
            }
        }
        double sum = std::accumulate(next.alphas.begin(), next.alphas.end(), 0.0);
        for (double& a : next.alphas) a /= sum;
    }
    return next;
}

EmFitResult fit_em(const Dataset& data, const MixtureConfig& config) {
    if (!(config.epsilon >= config.epsilon_min) || !(config.epsilon_min > 0.0))
        throw InvalidInputError("fit_em: need epsilon >= epsilon_min > 0");
    if (!(config.anneal_factor > 0.0) || config.anneal_factor > 1.0)
        throw InvalidInputError("fit_em: anneal factor must be in (0, 1]");
    if (config.restarts < 1) throw InvalidInputError("fit_em: restarts must be >= 1");

    struct EmRun {
        MixtureModel mixture;
        FitTrace trace;
        double final_nll = 0.0;
    };

    EmRun best;
    bool have = false;
    std::vector<double> resp;
    for (int r = 0; r < config.restarts; ++r) {
        PiecewiseModel seed = init_model(data, config, r);
        MixtureModel mix;
        mix.alphas.assign(seed.k(), 1.0 / static_cast<double>(seed.k()));
        mix.planes = std::move(seed.planes);
        mix.centroids = std::move(seed.centroids);
        mix.epsilon = config.epsilon;
        mix.gamma = config.gamma;

        FitTrace trace;
        double prev = std::numeric_limits<double>::infinity();
        Termination term = Termination::max_iters;
        int iter = 0;
        while (iter < config.max_iters) {
            ++iter;
            const double nll = e_step_impl(data, mix, resp);
            trace.objective_per_iter.push_back(nll);
            if (std::abs(nll - prev) <= config.objective_rel_tol * std::max(1.0, std::abs(prev))) {
                term = Termination::objective_stagnant;
                prev = nll;
                break;
            }
            prev = nll;
            mix = em_m_step(data, resp, mix, config.empty_cluster_policy);
            mix.epsilon = std::max(mix.epsilon * config.anneal_factor, config.epsilon_min);
        }
        trace.iterations = iter;
        trace.termination = term;

        if (!have || prev < best.final_nll) {
            best = {std::move(mix), std::move(trace), prev};
            have = true;
        }
    }

    // harden: argmax responsibilities, then one exact refit
    e_step_impl(data, best.mixture, resp);
    const std::size_t k = best.mixture.k();
    Assignment assign;
    assign.labels.resize(data.size());
    assign.sizes.assign(k, 0);
    for (std::size_t n = 0; n < data.size(); ++n) {
        std::size_t arg = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (resp[n * k + c] > resp[n * k + arg]) arg = c;
        assign.labels[n] = static_cast<int>(arg);
        ++assign.sizes[arg];
    }
    PiecewiseModel hardened;
    hardened.planes = best.mixture.planes;
    hardened.centroids = best.mixture.centroids;
    hardened.gamma = config.gamma;
    apply_empty_policy(data, hardened, assign, config.gamma, config.empty_cluster_policy);
    update_params(data, hardened, assign);
    best.trace.final_sizes = assign.sizes;

    return {std::move(best.mixture), std::move(hardened), std::move(best.trace)};
}

}  // namespace kplane
