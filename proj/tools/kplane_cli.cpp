// Command-line front end for the piecewise-linear regression library.
// Talks to the core exclusively through the C API.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kplane/kplane.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int runtime_error(const char* context) {
    std::fprintf(stderr, "error: %s: %s\n", context, kp_last_error());
    return kExitRuntime;
}

struct DatasetHandle {
    kp_dataset* ptr = nullptr;
    ~DatasetHandle() { kp_dataset_free(ptr); }
};

struct ModelHandle {
    kp_model* ptr = nullptr;
    ~ModelHandle() { kp_model_free(ptr); }
};

// Fixed-point print with six significant digits.
std::string format_mse(double v) {
    int decimals = 6;
    if (v > 0.0) {
        const int int_digits = static_cast<int>(std::floor(std::log10(v))) + 1;
        decimals = std::max(0, 6 - std::max(int_digits, 0));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

kp_algo parse_algo(const std::string& name) {
    if (name == "kplane") return KP_ALGO_KPLANE;
    if (name == "mkplane") return KP_ALGO_MKPLANE;
    return KP_ALGO_EM;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise-linear regression toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark CSV");
    int synth_problem = 1;
    long synth_n = 500;
    double synth_noise = 0.1;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--problem", synth_problem)->check(CLI::Range(1, 2))->required();
    synth->add_option("--n", synth_n)->check(CLI::PositiveNumber)->required();
    synth->add_option("--noise-std", synth_noise)->check(CLI::NonNegativeNumber)->required();
    synth->add_option("--seed", synth_seed)->required();
    synth->add_option("--out", synth_out)->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a piecewise-linear model");
    std::string fit_algo_name, fit_input, fit_model_out, fit_scale = "off";
    kp_fit_options fit_opts;
    kp_fit_options_init(&fit_opts);
    fit->add_option("--algo", fit_algo_name)
        ->check(CLI::IsMember({"kplane", "mkplane", "em"}))->required();
    fit->add_option("--k", fit_opts.k)->check(CLI::PositiveNumber)->required();
    fit->add_option("--gamma", fit_opts.gamma)->check(CLI::NonNegativeNumber);
    fit->add_option("--restarts", fit_opts.restarts)->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_opts.seed);
    fit->add_option("--scale", fit_scale)->check(CLI::IsMember({"on", "off"}));
    fit->add_option("--input", fit_input)->required();
    fit->add_option("--model-out", fit_model_out)->required();
    fit->add_option("--epsilon", fit_opts.epsilon)->check(CLI::PositiveNumber);
    fit->add_option("--anneal", fit_opts.anneal_factor)
        ->check(CLI::Range(1e-12, 1.0));
    fit->add_option("--max-iters", fit_opts.max_iters)->check(CLI::PositiveNumber);

    // predict
    auto* predict = app.add_subcommand("predict", "append a y_hat column to a CSV");
    std::string pred_model, pred_input, pred_out;
    predict->add_option("--model", pred_model)->required();
    predict->add_option("--input", pred_input)->required();
    predict->add_option("--out", pred_out)->required();

    // eval
    auto* eval = app.add_subcommand("eval", "print MSE of a model on a CSV");
    std::string eval_model, eval_input;
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--input", eval_input)->required();

    // cv
    auto* cv = app.add_subcommand("cv", "repeated k-fold cross validation sweep");
    std::string cv_algo_name, cv_input, cv_out, cv_scale = "on";
    std::vector<int> cv_k_list;
    std::vector<double> cv_gamma_list{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    int cv_folds = 10, cv_repeats = 10;
    kp_fit_options cv_opts;
    kp_fit_options_init(&cv_opts);
    cv->add_option("--algo", cv_algo_name)
        ->check(CLI::IsMember({"kplane", "mkplane", "em"}))->required();
    cv->add_option("--k-list", cv_k_list)->delimiter(',')->required();
    cv->add_option("--gamma-list", cv_gamma_list)->delimiter(',');
    cv->add_option("--folds", cv_folds)->check(CLI::Range(2, 1000000));
    cv->add_option("--repeats", cv_repeats)->check(CLI::PositiveNumber);
    cv->add_option("--seed", cv_opts.seed);
    cv->add_option("--restarts", cv_opts.restarts)->check(CLI::PositiveNumber);
    cv->add_option("--scale", cv_scale)->check(CLI::IsMember({"on", "off"}));
    cv->add_option("--epsilon", cv_opts.epsilon)->check(CLI::PositiveNumber);
    cv->add_option("--anneal", cv_opts.anneal_factor)->check(CLI::Range(1e-12, 1.0));
    cv->add_option("--input", cv_input)->required();
    cv->add_option("--out", cv_out)->required();

    // dump-function
    auto* dump = app.add_subcommand("dump-function",
                                    "sample a d=1 model on a uniform grid");
    std::string dump_model, dump_range, dump_out;
    long dump_steps = 0;
    dump->add_option("--model", dump_model)->required();
    dump->add_option("--range", dump_range, "A:B")->required();
    dump->add_option("--steps", dump_steps)->check(CLI::PositiveNumber)->required();
    dump->add_option("--out", dump_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (synth->parsed()) {
        DatasetHandle data;
        if (kp_dataset_synth(synth_problem, synth_n, synth_noise, synth_seed,
                             &data.ptr) != KP_OK)
            return runtime_error("synth");
        if (kp_dataset_write_csv(data.ptr, synth_out.c_str()) != KP_OK)
            return runtime_error("synth");
        return kExitOk;
    }

    if (fit->parsed()) {
        DatasetHandle data;
        if (kp_dataset_read_csv(fit_input.c_str(), &data.ptr) != KP_OK)
            return runtime_error("fit: reading input");
        fit_opts.scale = fit_scale == "on" ? 1 : 0;
        ModelHandle model;
        kp_fit_info info{};
        std::vector<long> sizes(static_cast<std::size_t>(fit_opts.k), 0);
        if (kp_fit(data.ptr, parse_algo(fit_algo_name), &fit_opts, &model.ptr,
                   &info, sizes.data()) != KP_OK)
            return runtime_error("fit");
        if (kp_model_save(model.ptr, fit_model_out.c_str()) != KP_OK)
            return runtime_error("fit: writing model");
        double train_mse = 0.0;
        if (kp_model_mse(model.ptr, data.ptr, &train_mse) != KP_OK)
            return runtime_error("fit: evaluating");
        std::printf("final objective: %.17g\n", info.final_objective);
        std::printf("iterations: %d\n", info.iterations);
        std::printf("termination: %s\n", kp_termination_name(info.termination));
        std::printf("cluster sizes:");
        for (int c = 0; c < kp_model_k(model.ptr); ++c)
            std::printf(" %ld", sizes[static_cast<std::size_t>(c)]);
        std::printf("\n");
        std::printf("train MSE: %s\n", format_mse(train_mse).c_str());
        return kExitOk;
    }

    if (predict->parsed()) {
        ModelHandle model;
        if (kp_model_load(pred_model.c_str(), &model.ptr) != KP_OK)
            return runtime_error("predict: loading model");
        if (kp_predict_csv(model.ptr, pred_input.c_str(), pred_out.c_str()) != KP_OK)
            return runtime_error("predict");
        return kExitOk;
    }

    if (eval->parsed()) {
        ModelHandle model;
        if (kp_model_load(eval_model.c_str(), &model.ptr) != KP_OK)
            return runtime_error("eval: loading model");
        DatasetHandle data;
        if (kp_dataset_read_csv(eval_input.c_str(), &data.ptr) != KP_OK)
            return runtime_error("eval: reading input");
        double value = 0.0;
        if (kp_model_mse(model.ptr, data.ptr, &value) != KP_OK)
            return runtime_error("eval");
        std::printf("%s\n", format_mse(value).c_str());
        return kExitOk;
    }

    if (cv->parsed()) {
        DatasetHandle data;
        if (kp_dataset_read_csv(cv_input.c_str(), &data.ptr) != KP_OK)
            return runtime_error("cv: reading input");
        if (static_cast<long>(cv_folds) > kp_dataset_rows(data.ptr)) {
            std::fprintf(stderr, "usage error: --folds (%d) exceeds dataset size (%ld)\n",
                         cv_folds, kp_dataset_rows(data.ptr));
            return kExitUsage;
        }
        cv_opts.scale = cv_scale == "on" ? 1 : 0;
        char* summary = nullptr;
        if (kp_run_cv(data.ptr, parse_algo(cv_algo_name), &cv_opts,
                      cv_k_list.data(), static_cast<int>(cv_k_list.size()),
                      cv_gamma_list.data(), static_cast<int>(cv_gamma_list.size()),
                      cv_folds, cv_repeats, cv_out.c_str(), &summary) != KP_OK)
            return runtime_error("cv");
        std::fputs(summary, stdout);
        kp_string_free(summary);
        return kExitOk;
    }

    if (dump->parsed()) {
        const auto colon = dump_range.find(':');
        double lo = 0.0, hi = 0.0;
        try {
            if (colon == std::string::npos) throw std::invalid_argument("range");
            lo = std::stod(dump_range.substr(0, colon));
            hi = std::stod(dump_range.substr(colon + 1));
        } catch (const std::exception&) {
            std::fprintf(stderr, "usage error: --range expects A:B, got '%s'\n",
                         dump_range.c_str());
            return kExitUsage;
        }
        ModelHandle model;
        if (kp_model_load(dump_model.c_str(), &model.ptr) != KP_OK)
            return runtime_error("dump-function: loading model");
        if (kp_dump_function(model.ptr, lo, hi, dump_steps, dump_out.c_str()) != KP_OK)
            return runtime_error("dump-function");
        return kExitOk;
    }

    return kExitUsage;
}
