// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/extrapolate.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace sgdlab {

RRScheme RRScheme::two_step(Coupling coupling) { return {{1.0, 2.0}, {2.0, -1.0}, coupling}; }

RRScheme RRScheme::three_step(Coupling coupling) {
  return {{1.0, 2.0, 4.0}, {8.0 / 3.0, -2.0, 1.0 / 3.0}, coupling};
}

void RRScheme::validate() const {
  if (multipliers.empty() || multipliers.size() != weights.size())
    throw InvalidArgument("RR scheme needs one weight per step size");
  const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-12) throw InvalidArgument("RR weights must sum to 1");
}

std::string RRScheme::describe(double gamma) const {
  std::ostringstream os;
  os << std::setprecision(17) << "scheme=rr" << multipliers.size() << " gammas=";
  for (std::size_t j = 0; j < multipliers.size(); ++j) os << (j ? ";" : "") << multipliers[j] * gamma;
  os << " weights=";
  for (std::size_t j = 0; j < weights.size(); ++j) os << (j ? ";" : "") << weights[j];
  os << " coupling=" << (coupling == Coupling::kShared ? "shared" : "independent");
  return os.str();
}

Vector rr2_combine(const Vector& avg_gamma, const Vector& avg_2gamma) {
  if (avg_gamma.size() != avg_2gamma.size()) throw DimensionError("rr2_combine: dimension mismatch");
  return 2.0 * avg_gamma - avg_2gamma;
}

Vector rr3_combine(const Vector& avg_gamma, const Vector& avg_2gamma, const Vector& avg_4gamma) {
  if (avg_gamma.size() != avg_2gamma.size() || avg_gamma.size() != avg_4gamma.size())
    throw DimensionError("rr3_combine: dimension mismatch");
  return (8.0 / 3.0) * avg_gamma - 2.0 * avg_2gamma + (1.0 / 3.0) * avg_4gamma;
}

Vector combine(const RRScheme& scheme, std::span<const Vector> members) {
  scheme.validate();
  if (members.size() != scheme.weights.size()) throw InvalidArgument("combine: member count mismatch");
  Vector out = Vector::Zero(members.front().size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].size() != out.size()) throw DimensionError("combine: dimension mismatch");
    out += scheme.weights[j] * members[j];
  }
  return out;
}

Trajectory run_rr(const ObjectiveModel& model, double gamma, const Vector& theta0,
                  std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                  const RRScheme& scheme, std::uint64_t replica) {
  scheme.validate();
  require_dim(theta0, model.dim(), "run_rr");
  const std::size_t m = scheme.multipliers.size();
  std::vector<ChainState> members;
  std::vector<Stream> streams;
  const Stream base(seed, replica, StreamPurpose::kChain);
  for (std::size_t j = 0; j < m; ++j) {
    const double g = scheme.multipliers[j] * gamma;
    check_step_size(model, g);
    members.push_back(make_chain_state(theta0, g));
    streams.push_back(scheme.coupling == Coupling::kShared ? base : base.split(j));
  }
  const DivergenceGuard guard(model, theta0);

  std::vector<Vector> thetas(m), avgs(m);
  auto combined_row = [&](std::uint64_t k) {
    for (std::size_t j = 0; j < m; ++j) {
      thetas[j] = members[j].theta;
      avgs[j] = members[j].avg;
    }
    return make_row(model, k, combine(scheme, thetas), combine(scheme, avgs));
  };

  Trajectory traj;
  traj.d = model.dim();
  traj.comments.push_back(scheme.describe(gamma));
  const auto record = schedule.indices(horizon);
  traj.rows.push_back(combined_row(0));
  std::size_t next = 1;
  for (std::uint64_t k = 1; k <= horizon; ++k) {
    if (scheme.coupling == Coupling::kShared) {
      const std::size_t atom = model.draw_atom(streams.front());
      for (auto& s : members) apply_step(s, model, atom, s.gamma);
    } else {
      for (std::size_t j = 0; j < m; ++j)
        apply_step(members[j], model, model.draw_atom(streams[j]), members[j].gamma);
    }
    for (const auto& s : members) guard.check(s.theta, k);
    if (next < record.size() && record[next] == k) {
      traj.rows.push_back(combined_row(k));
      ++next;
    }
  }
  return traj;
}

Trajectory replica_mean_rr(const ObjectiveModel& model, double gamma, const Vector& theta0,
                           std::uint64_t horizon, const RecordSchedule& schedule, std::uint64_t seed,
                           const RRScheme& scheme, std::size_t replicas, const Execution& exec) {
  std::vector<Trajectory> trajs(replicas);
  for_each_replica(replicas, exec, [&](std::size_t r) {
    trajs[r] = run_rr(model, gamma, theta0, horizon, schedule, seed, scheme, r);
  });
  return average_trajectories(trajs);
}

}  // namespace sgdlab
