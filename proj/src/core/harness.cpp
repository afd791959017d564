#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "dataio.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace kplane {

Algo algo_from_name(const std::string& name) {
    if (name == "kplane") return Algo::kplane;
    if (name == "mkplane") return Algo::mkplane;
    if (name == "em") return Algo::em;
    throw InvalidInputError("unknown algorithm: " + name);
}

const char* to_string(Algo algo) {
    switch (algo) {
        case Algo::kplane: return "kplane";
        case Algo::mkplane: return "mkplane";
        case Algo::em: return "em";
    }
    return "unknown";
}

std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2)
        throw InvalidInputError("kfold_split: need at least 2 folds");
    if (static_cast<std::size_t>(folds) > n)
        throw InvalidInputError("kfold_split: more folds than points");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = derived_rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<FoldSplit> out(static_cast<std::size_t>(folds));
    const std::size_t base = n / static_cast<std::size_t>(folds);
    const std::size_t extra = n % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < out.size(); ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        out[f].test.assign(perm.begin() + static_cast<long>(pos),
                           perm.begin() + static_cast<long>(pos + len));
        pos += len;
    }
    for (std::size_t f = 0; f < out.size(); ++f) {
        for (std::size_t g = 0; g < out.size(); ++g)
            if (g != f)
                out[f].train.insert(out[f].train.end(), out[g].test.begin(),
                                    out[g].test.end());
        std::sort(out[f].train.begin(), out[f].train.end());
        std::sort(out[f].test.begin(), out[f].test.end());
    }
    return out;
}

namespace {

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx) {
    Dataset out(idx.size(), data.dim());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto x = data.row(idx[i]);
        std::copy(x.begin(), x.end(), out.row(i).begin());
        out.target(i) = data.target(idx[i]);
    }
    return out;
}

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
};

Stats mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    Stats s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

}  // namespace

FitResult fit_algo(const Dataset& raw_train, Algo algo, const MixtureConfig& config,
                   bool scale) {
    const Dataset* train = &raw_train;
    Dataset scaled(1, 1);
    std::optional<ScalingParams> params;
    if (scale) {
        params = fit_scaling(raw_train);
        scaled = apply_scaling(raw_train, *params);
        train = &scaled;
    }
    FitResult result;
    switch (algo) {
        case Algo::kplane: result = fit_kplane(*train, config); break;
        case Algo::mkplane: result = fit_mkplane(*train, config); break;
        case Algo::em: {
            EmFitResult em = fit_em(*train, config);
            result = {std::move(em.hardened), std::move(em.trace)};
            break;
        }
    }
    result.model.scaling = params;
    return result;
}

CvReport run_cv(const Dataset& data, const CvSpec& spec) {
    if (spec.repeats < 1)
        throw InvalidInputError("run_cv: need at least 1 repeat");
    if (spec.k_values.empty())
        throw InvalidInputError("run_cv: k_values must be nonempty");
    const std::vector<double> gammas =
        spec.gamma_grid.empty() ? std::vector<double>{0.0} : spec.gamma_grid;

    struct CellAcc {
        std::vector<double> mses;
        std::vector<double> times;
        int failures = 0;
    };
    std::vector<CellAcc> acc(spec.k_values.size() * gammas.size());

    for (int rep = 0; rep < spec.repeats; ++rep) {
        const auto splits = kfold_split(data.size(), spec.folds,
                                        spec.seed ^ static_cast<std::uint64_t>(rep));
        for (std::size_t f = 0; f < splits.size(); ++f) {
            const Dataset train = subset(data, splits[f].train);
            const Dataset test = subset(data, splits[f].test);
            for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
                for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
                    CellAcc& cell = acc[ki * gammas.size() + gi];
                    MixtureConfig cfg = spec.base;
                    cfg.k = spec.k_values[ki];
                    cfg.gamma = gammas[gi];
                    cfg.seed = splitmix64(spec.seed ^ splitmix64(
                        (static_cast<std::uint64_t>(rep) << 32) ^
                        (static_cast<std::uint64_t>(f) << 16) ^
                        (static_cast<std::uint64_t>(ki) << 8) ^ gi));
                    try {
                        const auto t0 = std::chrono::steady_clock::now();
                        FitResult fit = fit_algo(train, spec.algo, cfg, spec.scale);
                        const auto t1 = std::chrono::steady_clock::now();
                        cell.mses.push_back(mse(fit.model, test));
                        cell.times.push_back(
                            std::chrono::duration<double>(t1 - t0).count());
                    } catch (const DegenerateSystemError&) {
                        ++cell.failures;
                    }
                }
            }
        }
    }

    CvReport report;
    for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
        for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
            const CellAcc& cell = acc[ki * gammas.size() + gi];
            CvCell out;
            out.algo = spec.algo;
            out.k = spec.k_values[ki];
            out.gamma = gammas[gi];
            const Stats ms = mean_std(cell.mses);
            const Stats ts = mean_std(cell.times);
            out.mse_mean = ms.mean;
            out.mse_std = ms.stddev;
            out.time_mean = ts.mean;
            out.time_std = ts.stddev;
            out.failures = cell.failures;
            report.cells.push_back(out);
        }
        std::size_t best_gi = 0;
        for (std::size_t gi = 1; gi < gammas.size(); ++gi) {
            const auto& a = report.cells[ki * gammas.size() + gi];
            const auto& b = report.cells[ki * gammas.size() + best_gi];
            if (a.mse_mean < b.mse_mean) best_gi = gi;
        }
        report.chosen_gamma.emplace_back(spec.k_values[ki], gammas[best_gi]);
    }
    return report;
}

void write_report_csv(const CvReport& report, const std::string& path) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "algo,k,gamma,mse_mean,mse_std,time_mean,time_std\n";
    for (const auto& c : report.cells)
        out << to_string(c.algo) << ',' << c.k << ',' << c.gamma << ','
            << c.mse_mean << ',' << c.mse_std << ',' << c.time_mean << ','
            << c.time_std << '\n';
    atomic_write(path, out.str());
}

std::string summarize(const CvReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "algo      K     gamma       MSE(mean+-std)     Time(sec)\n";
    for (const auto& c : report.cells) {
        out << std::left << std::setw(9) << to_string(c.algo) << ' '
            << std::setw(5) << c.k << ' ' << std::setw(9) << c.gamma << "  "
            << c.mse_mean << " +- " << c.mse_std << "   "
            << c.time_mean << " +- " << c.time_std;
        if (c.failures > 0) out << "   (" << c.failures << " failed fits)";
        out << '\n';
    }
    for (const auto& [k, gamma] : report.chosen_gamma)
        out << "best gamma for K=" << k << ": " << gamma << '\n';
    return out.str();
}

}  // namespace kplane
