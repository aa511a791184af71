// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgdlab/config.hpp"
#include "sgdlab/parallel.hpp"

namespace sgdlab {

struct ExperimentResult {
  int exit_code = 0;  // 0 ok, 3 a chain diverged
  std::string status;
  std::string message;
  std::vector<std::filesystem::path> files;  // relative to the output directory
  std::filesystem::path manifest;
};

/// Loads and validates the model, runs the named experiment and writes CSV
/// tables, optional SVG plots and manifest.json into config.out. Throws
/// ConfigError or ModelError before anything runs when the inputs are bad.
/// A divergence is recorded in the manifest; outputs written so far are kept.
ExperimentResult run_experiment(const RunConfig& config, const Execution& exec, std::ostream* log = nullptr);

}  // namespace sgdlab
