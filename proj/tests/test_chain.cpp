// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sgdlab/chain.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/rng.hpp"

using namespace sgdlab;

TEST_CASE("one step and the running average") {
  const ObjectiveModel q1 = builtin_model("q1");
  ChainState s = make_chain_state(Vector::Constant(1, 2.0), 0.1);
  CHECK(s.avg(0) == 2.0);
  // atom 0 is (x=1, y=1): θ ← θ − γ(θ − 1)
  apply_step(s, q1, 0, 0.1);
  CHECK(s.theta(0) == doctest::Approx(1.9));
  CHECK(s.avg(0) == doctest::Approx((2.0 + 1.9) / 2));
  apply_step(s, q1, 1, 0.1);
  CHECK(s.theta(0) == doctest::Approx(1.9 - 0.1 * 2.9));
  CHECK(s.avg(0) == doctest::Approx((2.0 + 1.9 + 1.61) / 3));
  CHECK(s.k == 2);
}

TEST_CASE("ridge term is applied inside the step") {
  const ObjectiveModel l1 = builtin_model("l1");
  ChainState s = make_chain_state(Vector::Constant(1, 0.5), 0.2);
  const Vector g = sample_gradient(l1, 1, s.theta);
  apply_step(s, l1, 1, 0.2);
  CHECK(s.theta(0) == doctest::Approx(0.5 - 0.2 * g(0)).epsilon(1e-14));
}

TEST_CASE("record schedules keep the endpoints") {
  const auto g = RecordSchedule::geometric(1.5).indices(1000);
  CHECK(g.front() == 0);
  CHECK(g.back() == 1000);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  const auto e = RecordSchedule::every(300).indices(1000);
  CHECK(e == std::vector<std::uint64_t>{0, 300, 600, 900, 1000});
  const auto a = RecordSchedule::at({5, 50}).indices(100);
  CHECK(a == std::vector<std::uint64_t>{0, 5, 50, 100});
}

TEST_CASE("run_chain is reproducible and matches manual stepping") {
  const ObjectiveModel lms3 = builtin_model("lms3");
  const Vector theta0 = Vector::Ones(3);
  const auto sched = RecordSchedule::every(50);
  const Trajectory a = run_chain(lms3, 0.1, theta0, 500, sched, 42, 3);
  const Trajectory b = run_chain(lms3, 0.1, theta0, 500, sched, 42, 3);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK((a.rows.back().theta - b.rows.back().theta).norm() == 0.0);

  Stream s(42, 3, StreamPurpose::kChain);
  ChainState st = make_chain_state(theta0, 0.1);
  for (int k = 0; k < 500; ++k) apply_step(st, lms3, lms3.draw_atom(s), 0.1);
  CHECK((a.rows.back().theta - st.theta).norm() == 0.0);
  CHECK((a.rows.back().avg - st.avg).norm() == 0.0);
  CHECK(a.rows.back().fgap_avg == doctest::Approx(lms3.value(st.avg) - lms3.optimal_value()));

  const Trajectory c = run_chain(lms3, 0.1, theta0, 500, sched, 43, 3);
  CHECK((a.rows.back().theta - c.rows.back().theta).norm() > 0.0);
}

TEST_CASE("Q1 mean iterate decays like (1-γ)^k") {
  const ObjectiveModel q1 = builtin_model("q1");
  const std::size_t reps = 4000;
  const Trajectory t = replica_mean_chain(q1, 0.1, Vector::Ones(1), 10, RecordSchedule::every(10), 1, reps, {});
  // θ_k = 0.9^k θ₀ + noise with variance (γ²/(1−0.81))(1 − 0.81^k)
  const double var = 0.01 / 0.19 * (1 - std::pow(0.81, 10));
  CHECK(std::abs(t.rows.back().theta(0) - std::pow(0.9, 10)) < 4 * std::sqrt(var / reps));
}

TEST_CASE("decaying steps and CSV output") {
  const ObjectiveModel l1 = builtin_model("l1");
  const Trajectory t = run_decaying(l1, 1.0, Vector::Zero(1), 2000, RecordSchedule::geometric(2.0), 1);
  CHECK(t.rows.back().k == 2000);
  CHECK(std::abs(t.rows.back().avg(0) - l1.optimum()(0)) < 0.2);
  std::ostringstream os;
  write_trajectory_csv(t, os);
  const std::string csv = os.str();
  CHECK(csv.find("k,theta_0,avg_0,fgap_theta,fgap_avg,dist2_theta,dist2_avg") != std::string::npos);
  CHECK(csv.rfind("#", 0) == 0);
}

TEST_CASE("step-size and divergence guards") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK_THROWS_AS(check_step_size(q1, 2.0), InvalidArgument);
  CHECK_THROWS_AS(check_step_size(q1, 0.0), InvalidArgument);
  CHECK_NOTHROW(check_step_size(q1, 1.9));
  const DivergenceGuard guard(q1, Vector::Ones(1));
  CHECK_NOTHROW(guard.check(Vector::Constant(1, 10.0), 5));
  CHECK_THROWS_AS(guard.check(Vector::Constant(1, 1e7), 5), DivergenceError);
  CHECK_THROWS_AS(guard.check(Vector::Constant(1, NAN), 5), DivergenceError);
}
