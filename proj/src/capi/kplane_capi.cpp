#include "kplane/kplane.h"

#include <cstring>
#include <exception>
#include <iomanip>
#include <sstream>
#include <string>

#include "../core/dataio.hpp"
#include "../core/errors.hpp"
#include "../core/harness.hpp"
#include "../core/model.hpp"
#include "../core/solvers.hpp"
#include "../core/synth.hpp"

struct kp_dataset {
    kplane::Dataset data;
};

struct kp_model {
    kplane::PiecewiseModel model;
};

namespace {

thread_local std::string g_last_error;

kp_status fail(kp_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
kp_status guarded(Fn&& fn) {
    try {
        fn();
        return KP_OK;
    } catch (const kplane::InvalidInputError& e) {
        return fail(KP_ERR_INVALID, e.what());
    } catch (const kplane::IoError& e) {
        return fail(KP_ERR_IO, e.what());
    } catch (const kplane::ParseError& e) {
        return fail(KP_ERR_PARSE, e.what());
    } catch (const kplane::DegenerateSystemError& e) {
        return fail(KP_ERR_DEGENERATE, e.what());
    } catch (const kplane::ValidationError& e) {
        return fail(KP_ERR_VALIDATION, e.what());
    } catch (const std::exception& e) {
        return fail(KP_ERR_INTERNAL, e.what());
    }
}

// Validates required pointer arguments before any work happens.
bool all_present() { return true; }

template <typename... Rest>
bool all_present(const void* p, Rest... rest) {
    return p != nullptr && all_present(rest...);
}

#define KP_REQUIRE_ARGS(...)                                     \
    do {                                                         \
        if (!all_present(__VA_ARGS__))                           \
            return fail(KP_ERR_INVALID, "null argument");        \
    } while (0)

kplane::MixtureConfig to_config(const kp_fit_options& o) {
    kplane::MixtureConfig cfg;
    cfg.k = o.k;
    cfg.gamma = o.gamma;
    cfg.max_iters = o.max_iters;
    cfg.objective_rel_tol = o.objective_rel_tol;
    cfg.restarts = o.restarts;
    cfg.seed = o.seed;
    cfg.empty_cluster_policy =
        o.empty_cluster_policy == KP_EMPTY_DROP_CLUSTER
            ? kplane::EmptyClusterPolicy::drop_cluster
            : kplane::EmptyClusterPolicy::reseed_worst_point;
    cfg.epsilon = o.epsilon;
    cfg.anneal_factor = o.anneal_factor;
    cfg.epsilon_min = o.epsilon_min;
    return cfg;
}

}  // namespace

extern "C" {

const char* kp_last_error(void) { return g_last_error.c_str(); }

const char* kp_termination_name(int termination) {
    return kplane::to_string(static_cast<kplane::Termination>(termination));
}

void kp_fit_options_init(kp_fit_options* opts) {
    *opts = kp_fit_options{};
    opts->k = 1;
    opts->gamma = 0.0;
    opts->max_iters = 100;
    opts->objective_rel_tol = 1e-10;
    opts->restarts = 10;
    opts->seed = 0;
    opts->empty_cluster_policy = KP_EMPTY_RESEED_WORST_POINT;
    opts->scale = 0;
    opts->epsilon = 0.01;
    opts->anneal_factor = 1.0;
    opts->epsilon_min = 1e-8;
}

kp_status kp_dataset_read_csv(const char* path, kp_dataset** out) {
    KP_REQUIRE_ARGS(path, out);
    return guarded([&] { *out = new kp_dataset{kplane::read_csv(path)}; });
}

kp_status kp_dataset_write_csv(const kp_dataset* data, const char* path) {
    KP_REQUIRE_ARGS(data, path);
    return guarded([&] { kplane::write_csv(data->data, path); });
}

kp_status kp_dataset_synth(int problem, long n, double noise_std, uint64_t seed,
                           kp_dataset** out) {
    KP_REQUIRE_ARGS(out);
    return guarded([&] {
        if (problem != 1 && problem != 2)
            throw kplane::InvalidInputError("problem must be 1 or 2");
        if (n < 1)
            throw kplane::InvalidInputError("n must be >= 1");
        kplane::SynthSpec spec;
        spec.problem = problem == 1 ? kplane::Problem::p1 : kplane::Problem::p2;
        spec.n = static_cast<std::size_t>(n);
        spec.noise_std = noise_std;
        spec.seed = seed;
        *out = new kp_dataset{kplane::generate(spec)};
    });
}

kp_status kp_dataset_load_uci(const char* name, const char* path, kp_dataset** out) {
    KP_REQUIRE_ARGS(name, path, out);
    return guarded([&] {
        *out = new kp_dataset{
            kplane::load_uci(kplane::uci_dataset_from_name(name), path)};
    });
}

long kp_dataset_rows(const kp_dataset* data) {
    return static_cast<long>(data->data.size());
}

int kp_dataset_dim(const kp_dataset* data) {
    return static_cast<int>(data->data.dim());
}

kp_status kp_dataset_get_row(const kp_dataset* data, long i, double* x_out,
                             double* y_out) {
    KP_REQUIRE_ARGS(data);
    return guarded([&] {
        if (i < 0 || static_cast<std::size_t>(i) >= data->data.size())
            throw kplane::InvalidInputError("row index out of range");
        const auto x = data->data.row(static_cast<std::size_t>(i));
        if (x_out) std::memcpy(x_out, x.data(), x.size() * sizeof(double));
        if (y_out) *y_out = data->data.target(static_cast<std::size_t>(i));
    });
}

void kp_dataset_free(kp_dataset* data) { delete data; }

kp_status kp_fit(const kp_dataset* data, kp_algo algo, const kp_fit_options* opts,
                 kp_model** model_out, kp_fit_info* info_out, long* sizes_out) {
    KP_REQUIRE_ARGS(data, opts, model_out);
    return guarded([&] {
        const kplane::MixtureConfig cfg = to_config(*opts);
        kplane::Algo which;
        switch (algo) {
            case KP_ALGO_KPLANE: which = kplane::Algo::kplane; break;
            case KP_ALGO_MKPLANE: which = kplane::Algo::mkplane; break;
            case KP_ALGO_EM: which = kplane::Algo::em; break;
            default: throw kplane::InvalidInputError("unknown algorithm");
        }
        kplane::FitResult result =
            kplane::fit_algo(data->data, which, cfg, opts->scale != 0);
        if (info_out) {
            info_out->final_objective = result.trace.objective_per_iter.empty()
                                            ? 0.0
                                            : result.trace.objective_per_iter.back();
            info_out->iterations = result.trace.iterations;
            info_out->termination = static_cast<int>(result.trace.termination);
        }
        if (sizes_out)
            for (std::size_t c = 0; c < result.trace.final_sizes.size(); ++c)
                sizes_out[c] = static_cast<long>(result.trace.final_sizes[c]);
        *model_out = new kp_model{std::move(result.model)};
    });
}

int kp_model_k(const kp_model* model) {
    return static_cast<int>(model->model.k());
}

int kp_model_dim(const kp_model* model) {
    return static_cast<int>(model->model.dim());
}

kp_status kp_model_centroid(const kp_model* model, int cluster, double* out) {
    KP_REQUIRE_ARGS(model, out);
    return guarded([&] {
        if (cluster < 0 || static_cast<std::size_t>(cluster) >= model->model.k())
            throw kplane::InvalidInputError("cluster index out of range");
        const auto& c = model->model.centroids[static_cast<std::size_t>(cluster)];
        std::memcpy(out, c.data(), c.size() * sizeof(double));
    });
}

kp_status kp_model_predict(const kp_model* model, const double* x, int d,
                           double* y_out) {
    KP_REQUIRE_ARGS(model, x, y_out);
    return guarded([&] {
        if (d < 0 || static_cast<std::size_t>(d) != model->model.dim())
            throw kplane::InvalidInputError("predict: feature dimension mismatch");
        *y_out = kplane::predict(model->model,
                                 std::span<const double>(x, static_cast<std::size_t>(d)));
    });
}

kp_status kp_model_mse(const kp_model* model, const kp_dataset* data, double* out) {
    KP_REQUIRE_ARGS(model, data, out);
    return guarded([&] { *out = kplane::mse(model->model, data->data); });
}

kp_status kp_model_save(const kp_model* model, const char* path) {
    KP_REQUIRE_ARGS(model, path);
    return guarded([&] { kplane::save_model(model->model, path); });
}

kp_status kp_model_load(const char* path, kp_model** out) {
    KP_REQUIRE_ARGS(path, out);
    return guarded([&] { *out = new kp_model{kplane::load_model(path)}; });
}

void kp_model_free(kp_model* model) { delete model; }

kp_status kp_predict_csv(const kp_model* model, const char* input_path,
                         const char* output_path) {
    KP_REQUIRE_ARGS(model, input_path, output_path);
    return guarded([&] {
        const kplane::Dataset data = kplane::read_csv(input_path);
        if (data.dim() != model->model.dim())
            throw kplane::InvalidInputError("predict: model/data dimension mismatch");
        std::ostringstream out;
        out << std::setprecision(17);
        for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j + 1 << ',';
        out << "y,y_hat\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (double v : data.row(i)) out << v << ',';
            out << data.target(i) << ','
                << kplane::predict(model->model, data.row(i)) << '\n';
        }
        kplane::atomic_write(output_path, out.str());
    });
}

kp_status kp_dump_function(const kp_model* model, double lo, double hi, long steps,
                           const char* output_path) {
    KP_REQUIRE_ARGS(model, output_path);
    return guarded([&] {
        if (model->model.dim() != 1)
            throw kplane::InvalidInputError("dump-function requires a d=1 model");
        if (steps < 1)
            throw kplane::InvalidInputError("dump-function: steps must be >= 1");
        if (!(hi >= lo))
            throw kplane::InvalidInputError("dump-function: bad range");
        std::ostringstream out;
        out << std::setprecision(17);
        out << "x,y_hat\n";
        for (long i = 0; i < steps; ++i) {
            const double x = steps == 1
                                 ? lo
                                 : lo + (hi - lo) * static_cast<double>(i) /
                                            static_cast<double>(steps - 1);
            out << x << ',' << kplane::predict(model->model, std::span(&x, 1)) << '\n';
        }
        kplane::atomic_write(output_path, out.str());
    });
}

kp_status kp_run_cv(const kp_dataset* data, kp_algo algo, const kp_fit_options* base,
                    const int* k_values, int n_k, const double* gammas, int n_gamma,
                    int folds, int repeats, const char* report_csv_path,
                    char** summary_out) {
    KP_REQUIRE_ARGS(data, base, k_values, report_csv_path);
    return guarded([&] {
        kplane::CvSpec spec;
        spec.folds = folds;
        spec.repeats = repeats;
        switch (algo) {
            case KP_ALGO_KPLANE: spec.algo = kplane::Algo::kplane; break;
            case KP_ALGO_MKPLANE: spec.algo = kplane::Algo::mkplane; break;
            case KP_ALGO_EM: spec.algo = kplane::Algo::em; break;
            default: throw kplane::InvalidInputError("unknown algorithm");
        }
        spec.k_values.assign(k_values, k_values + n_k);
        if (n_gamma > 0) spec.gamma_grid.assign(gammas, gammas + n_gamma);
        spec.base = to_config(*base);
        spec.scale = base->scale != 0;
        spec.seed = base->seed;
        const kplane::CvReport report = kplane::run_cv(data->data, spec);
        kplane::write_report_csv(report, report_csv_path);
        if (summary_out) {
            const std::string s = kplane::summarize(report);
            *summary_out = new char[s.size() + 1];
            std::memcpy(*summary_out, s.c_str(), s.size() + 1);
        }
    });
}

void kp_string_free(char* s) { delete[] s; }

}  // extern "C"
