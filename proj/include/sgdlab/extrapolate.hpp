// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "sgdlab/chain.hpp"

namespace sgdlab {

enum class Coupling {
  kShared,       // every member consumes the same atom draw per step
  kIndependent,  // member j draws from its own child stream
};

/// Affine combination of averaged iterates at step sizes multipliers[j]·γ.
struct RRScheme {
  std::vector<double> multipliers;
  std::vector<double> weights;
  Coupling coupling = Coupling::kShared;

  /// 2·θ̄(γ) − θ̄(2γ)
  static RRScheme two_step(Coupling coupling = Coupling::kShared);
  /// (8/3)·θ̄(γ) − 2·θ̄(2γ) + (1/3)·θ̄(4γ)
  static RRScheme three_step(Coupling coupling = Coupling::kShared);

  /// Throws InvalidArgument unless sizes agree and weights sum to 1.
  void validate() const;
  std::string describe(double gamma) const;
};

Vector rr2_combine(const Vector& avg_gamma, const Vector& avg_2gamma);
Vector rr3_combine(const Vector& avg_gamma, const Vector& avg_2gamma, const Vector& avg_4gamma);
Vector combine(const RRScheme& scheme, std::span<const Vector> members);

/// Member chains in lockstep from a common θ₀; rows hold the combined raw
/// iterate (theta columns) and the combined average (avg columns).
/// With shared coupling the γ member reproduces run_chain(γ, seed, replica).
Trajectory run_rr(const ObjectiveModel& model, double gamma, const Vector& theta0,
                  std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                  const RRScheme& scheme, std::uint64_t replica = 0);

Trajectory replica_mean_rr(const ObjectiveModel& model, double gamma, const Vector& theta0,
                           std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                           const RRScheme& scheme, std::size_t replicas, const Execution& exec);

}  // namespace sgdlab
