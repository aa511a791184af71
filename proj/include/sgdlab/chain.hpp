// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgdlab/models.hpp"
#include "sgdlab/parallel.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

/// SGD iterate θ_k and its running average over θ_0..θ_k.
struct ChainState {
  Vector theta;
  Vector avg;
  std::uint64_t k = 0;
  double gamma = 0.0;
};

ChainState make_chain_state(const Vector& theta0, double gamma);

/// θ ← θ − step·g_atom(θ), then k ← k+1 and avg ← avg + (θ − avg)/(k+1).
/// Allocation-free; this is the hot loop of every experiment.
inline void apply_step(ChainState& s, const ObjectiveModel& model, std::size_t atom, double step) {
  const DataAtom& a = model.atom(atom);
  const double slope = model.sample_slope(atom, s.theta);
  if (model.lambda() != 0.0) s.theta *= (1.0 - step * model.lambda());
  s.theta.noalias() -= (step * slope) * a.x;
  ++s.k;
  s.avg += (s.theta - s.avg) / static_cast<double>(s.k + 1);
}

/// One constant-step update drawing a fresh atom from the oracle.
void sgd_step(ChainState& state, const ObjectiveModel& model, NoiseOracle& oracle);

/// Throws DivergenceError when the iterate is non-finite or farther than
/// 1e6·(1 + ‖θ₀ − θ*‖) from θ*.
class DivergenceGuard {
 public:
  DivergenceGuard(const ObjectiveModel& model, const Vector& theta0);
  void check(const Vector& theta, std::uint64_t k) const;

 private:
  Vector theta_star_;
  double limit_sq_;
};

/// Which step indices get recorded. Index 0 and the horizon are always kept.
class RecordSchedule {
 public:
  static RecordSchedule geometric(double ratio = 1.15);
  static RecordSchedule every(std::uint64_t stride);
  static RecordSchedule at(std::vector<std::uint64_t> indices);

  std::vector<std::uint64_t> indices(std::uint64_t horizon) const;

 private:
  enum class Kind { kGeometric, kEvery, kExplicit } kind_ = Kind::kGeometric;
  double ratio_ = 1.15;
  std::uint64_t stride_ = 1;
  std::vector<std::uint64_t> explicit_;
};

struct TrajectoryRow {
  std::uint64_t k = 0;
  Vector theta;
  Vector avg;
  double fgap_theta = 0.0;
  double fgap_avg = 0.0;
  double dist2_theta = 0.0;
  double dist2_avg = 0.0;
};

struct Trajectory {
  int d = 0;
  std::vector<std::string> comments;
  std::vector<TrajectoryRow> rows;
};

TrajectoryRow make_row(const ObjectiveModel& model, std::uint64_t k, const Vector& theta, const Vector& avg);

/// CSV: comment lines "# ...", then header
/// k,theta_0..,avg_0..,fgap_theta,fgap_avg,dist2_theta,dist2_avg.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

/// Constant-step chain from θ₀; stream (seed, replica, kChain).
/// γ must lie in (0, 2/L). horizon = 0 records only the initial point.
Trajectory run_chain(const ObjectiveModel& model, double gamma, const Vector& theta0,
                     std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                     std::uint64_t replica = 0);

/// Decaying step c/√k at iteration k ≥ 1, same recording contract.
Trajectory run_decaying(const ObjectiveModel& model, double c, const Vector& theta0,
                        std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                        std::uint64_t replica = 0);

/// Row-wise mean of replica trajectories recorded on a common schedule.
Trajectory average_trajectories(const std::vector<Trajectory>& trajs);

/// Replica-averaged curves (replica r uses stream (seed, r, kChain)).
Trajectory replica_mean_chain(const ObjectiveModel& model, double gamma, const Vector& theta0,
                              std::uint64_t horizon, const RecordSchedule& schedule,
                              std::uint64_t seed, std::size_t replicas, const Execution& exec);
Trajectory replica_mean_decaying(const ObjectiveModel& model, double c, const Vector& theta0,
                                 std::uint64_t horizon, const RecordSchedule& schedule,
                                 std::uint64_t seed, std::size_t replicas, const Execution& exec);

void check_step_size(const ObjectiveModel& model, double gamma);

}  // namespace sgdlab
