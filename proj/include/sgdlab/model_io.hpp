// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "sgdlab/models.hpp"

namespace sgdlab {

/// Parses a model description (JSON text):
///
///   {"kind": "logistic_l2", "d": 1, "lambda": 0.1, "radius": 1.0,
///    "atoms": [{"x": [1.0], "y": 1, "w": 0.7}, ...]}
///
/// "radius" is optional. Invariants are validated by ObjectiveModel::create.
ObjectiveModel parse_model(const std::string& text);
ObjectiveModel load_model(const std::filesystem::path& path);
std::string model_to_json(const ObjectiveModel& model);

/// Reference instances used by the acceptance suite: "q1" (two-point least
/// squares, Σ = C = 1), "l1" (one-dimensional logistic, λ = 0.1) and "lms3"
/// (three-dimensional least squares, six atoms). Same content as models/*.json.
ObjectiveModel builtin_model(const std::string& name);
std::string builtin_model_json(const std::string& name);

/// Human-readable constants block: kind, d, μ, L, R², θ*, assumption checks.
std::string describe_model(const ObjectiveModel& model);

}  // namespace sgdlab
