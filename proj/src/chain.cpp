// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace sgdlab {

ChainState make_chain_state(const Vector& theta0, double gamma) {
  return ChainState{theta0, theta0, 0, gamma};
}

void sgd_step(ChainState& state, const ObjectiveModel& model, NoiseOracle& oracle) {
  require_dim(state.theta, model.dim(), "sgd_step");
  apply_step(state, model, oracle.draw(), state.gamma);
}

void check_step_size(const ObjectiveModel& model, double gamma) {
  const double bound = 2.0 / model.constants().L;
  if (!(gamma > 0.0 && gamma < bound)) {
    std::ostringstream os;
    os << "step size " << gamma << " outside (0, 2/L) = (0, " << bound << ")";
    throw InvalidArgument(os.str());
  }
}

DivergenceGuard::DivergenceGuard(const ObjectiveModel& model, const Vector& theta0)
    : theta_star_(model.optimum()) {
  const double lim = 1e6 * (1.0 + (theta0 - theta_star_).norm());
  limit_sq_ = lim * lim;
}

void DivergenceGuard::check(const Vector& theta, std::uint64_t k) const {
  const double dist2 = (theta - theta_star_).squaredNorm();
  if (!std::isfinite(dist2) || dist2 > limit_sq_) {
    std::ostringstream os;
    os << "chain diverged at step " << k << " (|theta - theta*|^2 = " << dist2 << ")";
    throw DivergenceError(os.str(), k);
  }
}

RecordSchedule RecordSchedule::geometric(double ratio) {
  if (!(ratio > 1.0)) throw InvalidArgument("geometric recording ratio must exceed 1");
  RecordSchedule s;
  s.kind_ = Kind::kGeometric;
  s.ratio_ = ratio;
  return s;
}

RecordSchedule RecordSchedule::every(std::uint64_t stride) {
  if (stride == 0) throw InvalidArgument("recording stride must be positive");
  RecordSchedule s;
  s.kind_ = Kind::kEvery;
  s.stride_ = stride;
  return s;
}

RecordSchedule RecordSchedule::at(std::vector<std::uint64_t> indices) {
  RecordSchedule s;
  s.kind_ = Kind::kExplicit;
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  s.explicit_ = std::move(indices);
  return s;
}

std::vector<std::uint64_t> RecordSchedule::indices(std::uint64_t horizon) const {
  std::vector<std::uint64_t> out{0};
  switch (kind_) {
    case Kind::kGeometric: {
      double x = 1.0;
      while (x <= static_cast<double>(horizon)) {
        const auto k = static_cast<std::uint64_t>(std::ceil(x));
        if (k > out.back() && k <= horizon) out.push_back(k);
        x *= ratio_;
      }
      break;
    }
    case Kind::kEvery:
      for (std::uint64_t k = stride_; k <= horizon; k += stride_) out.push_back(k);
      break;
    case Kind::kExplicit:
      for (auto k : explicit_)
        if (k > 0 && k <= horizon) out.push_back(k);
      break;
  }
  if (out.back() != horizon) out.push_back(horizon);
  return out;
}

TrajectoryRow make_row(const ObjectiveModel& model, std::uint64_t k, const Vector& theta, const Vector& avg) {
  TrajectoryRow r;
  r.k = k;
  r.theta = theta;
  r.avg = avg;
  r.fgap_theta = model.value(theta) - model.optimal_value();
  r.fgap_avg = model.value(avg) - model.optimal_value();
  r.dist2_theta = (theta - model.optimum()).squaredNorm();
  r.dist2_avg = (avg - model.optimum()).squaredNorm();
  return r;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  for (const auto& c : traj.comments) out << "# " << c << "\n";
  out << "k";
  for (int i = 0; i < traj.d; ++i) out << ",theta_" << i;
  for (int i = 0; i < traj.d; ++i) out << ",avg_" << i;
  out << ",fgap_theta,fgap_avg,dist2_theta,dist2_avg\n";
  out << std::setprecision(17);
  for (const auto& r : traj.rows) {
    out << r.k;
    for (int i = 0; i < traj.d; ++i) out << ',' << r.theta(i);
    for (int i = 0; i < traj.d; ++i) out << ',' << r.avg(i);
    out << ',' << r.fgap_theta << ',' << r.fgap_avg << ',' << r.dist2_theta << ',' << r.dist2_avg << "\n";
  }
}

namespace {

template <class StepFn>
Trajectory run_recorded(const ObjectiveModel& model, const Vector& theta0, std::uint64_t horizon,
                        const RecordSchedule& schedule, StepFn&& step_size, Stream stream) {
  require_dim(theta0, model.dim(), "run_chain");
  Trajectory traj;
  traj.d = model.dim();
  const auto record = schedule.indices(horizon);
  traj.rows.reserve(record.size());
  ChainState s = make_chain_state(theta0, 0.0);
  const DivergenceGuard guard(model, theta0);
  traj.rows.push_back(make_row(model, 0, s.theta, s.avg));
  std::size_t next = 1;
  while (s.k < horizon) {
    const double step = step_size(s.k + 1);
    apply_step(s, model, model.draw_atom(stream), step);
    guard.check(s.theta, s.k);
    if (next < record.size() && record[next] == s.k) {
      traj.rows.push_back(make_row(model, s.k, s.theta, s.avg));
      ++next;
    }
  }
  return traj;
}

}  // namespace

Trajectory run_chain(const ObjectiveModel& model, double gamma, const Vector& theta0,
                     std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                     std::uint64_t replica) {
  check_step_size(model, gamma);
  Trajectory t = run_recorded(model, theta0, horizon, schedule, [gamma](std::uint64_t) { return gamma; },
                              Stream(seed, replica, StreamPurpose::kChain));
  std::ostringstream os;
  os << std::setprecision(17) << "constant step gamma=" << gamma;
  t.comments.push_back(os.str());
  return t;
}

Trajectory run_decaying(const ObjectiveModel& model, double c, const Vector& theta0,
                        std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                        std::uint64_t replica) {
  if (!(c > 0.0)) throw InvalidArgument("decaying step constant must be positive");
  Trajectory t = run_recorded(
      model, theta0, horizon, schedule,
      [c](std::uint64_t k) { return c / std::sqrt(static_cast<double>(k)); },
      Stream(seed, replica, StreamPurpose::kChain));
  std::ostringstream os;
  os << std::setprecision(17) << "decaying step c/sqrt(k), c=" << c;
  t.comments.push_back(os.str());
  return t;
}

Trajectory average_trajectories(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw InvalidArgument("no trajectories to average");
  Trajectory out = trajs.front();
  const double n = static_cast<double>(trajs.size());
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    TrajectoryRow acc = trajs.front().rows[r];
    for (std::size_t t = 1; t < trajs.size(); ++t) {
      const TrajectoryRow& x = trajs[t].rows.at(r);
      if (x.k != acc.k) throw InvalidArgument("trajectories recorded on different schedules");
      acc.theta += x.theta;
      acc.avg += x.avg;
      acc.fgap_theta += x.fgap_theta;
      acc.fgap_avg += x.fgap_avg;
      acc.dist2_theta += x.dist2_theta;
      acc.dist2_avg += x.dist2_avg;
    }
    acc.theta /= n;
    acc.avg /= n;
    acc.fgap_theta /= n;
    acc.fgap_avg /= n;
    acc.dist2_theta /= n;
    acc.dist2_avg /= n;
    out.rows[r] = acc;
  }
  out.comments.push_back("mean over " + std::to_string(trajs.size()) + " replicas");
  return out;
}

Trajectory replica_mean_chain(const ObjectiveModel& model, double gamma, const Vector& theta0,
                              std::uint64_t horizon, const RecordSchedule& schedule,
                              std::uint64_t seed, std::size_t replicas, const Execution& exec) {
  std::vector<Trajectory> trajs(replicas);
  for_each_replica(replicas, exec, [&](std::size_t r) {
    trajs[r] = run_chain(model, gamma, theta0, horizon, schedule, seed, r);
  });
  return average_trajectories(trajs);
}

Trajectory replica_mean_decaying(const ObjectiveModel& model, double c, const Vector& theta0,
                                 std::uint64_t horizon, const RecordSchedule& schedule,
                                 std::uint64_t seed, std::size_t replicas, const Execution& exec) {
  std::vector<Trajectory> trajs(replicas);
  for_each_replica(replicas, exec, [&](std::size_t r) {
    trajs[r] = run_decaying(model, c, theta0, horizon, schedule, seed, r);
  });
  return average_trajectories(trajs);
}

}  // namespace sgdlab
