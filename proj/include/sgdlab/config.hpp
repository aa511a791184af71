// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/models.hpp"

namespace sgdlab {

enum class ExperimentKind {
  kFig2,
  kRRBiasScaling,
  kStationaryTable,
  kCoupling,
  kKScaling,
  kWeakError,
  kMomentGrowth,
};

std::string to_string(ExperimentKind kind);
/// Throws ConfigError for names outside the closed set.
ExperimentKind experiment_from_string(const std::string& name);
std::vector<std::string> experiment_names();

/// Experiment description, read from JSON:
///
///   {"model": "models/l1.json", "experiment": "fig2",
///    "gammas_over_L": [0.05, 0.1], "horizon": 100000, "replicas": 20,
///    "seed": 7, "out": "out/fig2", "plots": true}
///
/// "model" may also name a built-in instance ("builtin:q1"). Relative model
/// and output paths resolve against the config file's directory. Exactly one of "gammas" and
/// "gammas_over_L" may be given; both may be omitted for per-experiment
/// defaults.
struct RunConfig {
  std::string model;
  ExperimentKind experiment = ExperimentKind::kStationaryTable;
  std::vector<double> gammas;
  std::vector<double> gammas_over_L;
  std::uint64_t horizon = 100000;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  bool plots = true;
  std::optional<Vector> theta0;
  std::filesystem::path base_dir = ".";
  std::string source;  // JSON echo for the manifest
};

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

ObjectiveModel load_config_model(const RunConfig& config);

/// Explicit step sizes, or gammas_over_L divided by L; empty if neither given.
std::vector<double> resolve_gammas(const RunConfig& config, const ObjectiveModel& model);

/// Throws ConfigError unless every γ < 2/L, horizon ≥ 10³ and replicas ≥ 1.
void validate_config(const RunConfig& config, const ObjectiveModel& model);

}  // namespace sgdlab
