#pragma once

#include <string>
#include <variant>

#include "model.hpp"
#include "solvers.hpp"

namespace kplane {

// CSV with a header row `x1,...,xd,y`, decimal-point floats.
Dataset read_csv(const std::string& path);
void write_csv(const Dataset& data, const std::string& path);

// Per-feature [-1, 1] scaling fitted on a training split. Targets are
// never scaled.
ScalingParams fit_scaling(const Dataset& data);
Dataset apply_scaling(const Dataset& data, const ScalingParams& params);

// Versioned structured-text model files; lossless for finite values.
void save_model(const PiecewiseModel& model, const std::string& path);
void save_model(const MixtureModel& model, const std::string& path);

using AnyModel = std::variant<PiecewiseModel, MixtureModel>;
AnyModel load_any_model(const std::string& path);
PiecewiseModel load_model(const std::string& path);

// Raw UCI repository files, column mappings documented in the README.
enum class UciDataset { housing, abalone, auto_mpg, computer_activity };
UciDataset uci_dataset_from_name(const std::string& name);
Dataset load_uci(UciDataset which, const std::string& path);

// Writes via a temp file renamed into place on success.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace kplane
