// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sgdlab/extrapolate.hpp"
#include "sgdlab/model_io.hpp"

using namespace sgdlab;

TEST_CASE("Richardson weights cancel the leading powers of γ") {
  for (const RRScheme& s : {RRScheme::two_step(), RRScheme::three_step()}) {
    s.validate();
    const int order = static_cast<int>(s.weights.size());
    for (int p = 0; p < order; ++p) {
      double v = 0.0;
      for (std::size_t j = 0; j < s.weights.size(); ++j) v += s.weights[j] * std::pow(s.multipliers[j], p);
      CHECK(v == doctest::Approx(p == 0 ? 1.0 : 0.0).scale(1.0));
    }
  }
}

TEST_CASE("combination helpers") {
  const Vector a = Vector::Constant(2, 1.0), b = Vector::Constant(2, 3.0), c = Vector::Constant(2, 6.0);
  CHECK(rr2_combine(a, b)(0) == doctest::Approx(-1.0));
  CHECK(rr3_combine(a, b, c)(1) == doctest::Approx(8.0 / 3 - 6 + 2));
  const std::vector<Vector> m{a, b};
  CHECK((combine(RRScheme::two_step(), m) - rr2_combine(a, b)).norm() == 0.0);
  // exact on a bias that is linear in γ: θ̄(γ) = θ* + γΔ
  const Vector theta = Vector::Constant(2, 0.5), delta = Vector::Constant(2, 0.3);
  const double g = 0.1;
  CHECK((rr2_combine(theta + g * delta, theta + 2 * g * delta) - theta).norm() < 1e-15);
  const Vector quad = Vector::Constant(2, -0.7);
  const auto at = [&](double x) { return Vector(theta + x * delta + x * x * quad); };
  CHECK((rr3_combine(at(g), at(2 * g), at(4 * g)) - theta).norm() < 1e-14);
}

TEST_CASE("invalid schemes are rejected") {
  RRScheme s = RRScheme::two_step();
  s.weights = {2.0, -0.5};
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = RRScheme::two_step();
  s.multipliers.pop_back();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("a single-member shared scheme reproduces the plain chain") {
  const ObjectiveModel l1 = builtin_model("l1");
  RRScheme one;
  one.multipliers = {1.0};
  one.weights = {1.0};
  const auto sched = RecordSchedule::every(100);
  const Trajectory rr = run_rr(l1, 0.5, Vector::Zero(1), 1000, sched, 9, one, 2);
  const Trajectory plain = run_chain(l1, 0.5, Vector::Zero(1), 1000, sched, 9, 2);
  REQUIRE(rr.rows.size() == plain.rows.size());
  for (std::size_t i = 0; i < rr.rows.size(); ++i) {
    CHECK(rr.rows[i].theta(0) == plain.rows[i].theta(0));
    CHECK(rr.rows[i].avg(0) == plain.rows[i].avg(0));
  }
}

TEST_CASE("RR chain rejects a top member outside the stable range") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK_THROWS_AS(run_rr(q1, 0.6, Vector::Zero(1), 10, RecordSchedule::every(1), 1, RRScheme::three_step()),
                  InvalidArgument);
  CHECK_NOTHROW(run_rr(q1, 0.6, Vector::Zero(1), 10, RecordSchedule::every(1), 1, RRScheme::two_step()));
}

TEST_CASE("RR reduces the stationary bias on the logistic instance") {
  const ObjectiveModel l1 = builtin_model("l1");
  const double g = 0.5;
  const Trajectory single = replica_mean_chain(l1, g, l1.optimum(), 200000, RecordSchedule::every(200000), 3, 8, {});
  const Trajectory rr = replica_mean_rr(l1, g, l1.optimum(), 200000, RecordSchedule::every(200000), 3,
                                        RRScheme::two_step(), 8, {});
  CHECK(std::abs(rr.rows.back().avg(0) - l1.optimum()(0)) < std::abs(single.rows.back().avg(0) - l1.optimum()(0)));
}
