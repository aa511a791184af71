// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/parallel.hpp"

namespace sgdlab {

enum class Status { kPass, kFail, kSkip };
std::string to_string(Status s);

struct CriterionResult {
  int id = 0;
  std::string name;
  Status status = Status::kFail;
  std::string measured;
  std::string target;
  std::string tolerance;
  double seconds = 0.0;
  std::string detail;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20160901;
  Execution exec;
  /// Caps every Monte Carlo run length. Statistical criteria whose budget
  /// exceeds the cap still run but are reported SKIP.
  std::optional<std::uint64_t> horizon;
  std::vector<int> only;  // empty: all of 1..10
};

inline constexpr int kNumCriteria = 10;

CriterionResult verify_criterion(int id, const AcceptanceOptions& options);
/// Runs the selected criteria in order; progress lines go to log if given.
std::vector<CriterionResult> verify_all(const AcceptanceOptions& options, std::ostream* log = nullptr);
/// Tab-separated key=value line.
std::string format_line(const CriterionResult& r);
/// 1 if any criterion failed, else 0.
int verify_exit_code(const std::vector<CriterionResult>& results);

/// Randomized operator-calculus checks. Each entry is the largest relative
/// error seen over all instances against its tolerance.
struct OperatorCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
  bool ok() const { return max_error <= tolerance; }
};

std::vector<OperatorCheck> operator_suite(std::uint64_t seed, std::size_t instances);

}  // namespace sgdlab
