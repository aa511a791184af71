// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sgdlab/flow.hpp"
#include "sgdlab/model_io.hpp"

using namespace sgdlab;

TEST_CASE("gradient flow on Q1 is exponential decay") {
  const ObjectiveModel q1 = builtin_model("q1");
  const FlowSolution sol = integrate_flow(q1, Vector::Ones(1), 5.0, 1e-10);
  for (std::size_t i = 0; i < sol.t.size(); i += 7)
    CHECK(sol.states[i](0) == doctest::Approx(std::exp(-sol.t[i])).epsilon(1e-8));
  CHECK_THROWS_AS(integrate_flow(q1, Vector::Ones(1), -1.0, 1e-6), InvalidArgument);
}

TEST_CASE("Poisson solutions with closed forms") {
  const ObjectiveModel q1 = builtin_model("q1");
  const Vector theta = Vector::Constant(1, 1.5);
  CHECK(poisson_h(q1, Observable::identity(), theta, 1e-9).value(0) == doctest::Approx(1.5).epsilon(1e-8));
  // ∫ e^{−2s} θ² ds = θ²/2
  CHECK(poisson_h(q1, Observable::squared_distance(), theta, 1e-9).value(0) == doctest::Approx(1.125).epsilon(1e-8));

  const ObjectiveModel lms3 = builtin_model("lms3");
  const Vector off = Vector::LinSpaced(3, 0.7, -0.4);
  const PoissonValue pv = poisson_h(lms3, Observable::identity(), lms3.optimum() + off, 1e-9);
  CHECK((pv.value - lms3.second_moment().inverse() * off).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(pv.horizon > 0.0);
}

TEST_CASE("user observables") {
  const ObjectiveModel q1 = builtin_model("q1");
  const Observable g = Observable::user([](const Vector& t) { return std::sin(t(0)); }, 0.0, 1.0, "sin");
  // h = ∫ sin(θ e^{−s}) ds = Si(θ) for the unit-rate flow; Si(1) = 0.946083070367183
  CHECK(poisson_h(q1, g, Vector::Ones(1), 1e-10).value(0) == doctest::Approx(0.946083070367183).epsilon(1e-8));
  CHECK(g.name() == "sin");
  CHECK_THROWS_AS(Observable::coordinate(-1), InvalidArgument);
}

TEST_CASE("generator identity along flows") {
  const ObjectiveModel l1 = builtin_model("l1");
  const std::vector<double> times{0.1, 0.5, 2.0, 6.0};
  const GeneratorCheck gc = generator_identity_check(l1, Observable::coordinate(0), l1.optimum() + Vector::Ones(1), times);
  CHECK(gc.residual.size() == times.size());
  CHECK(gc.max_residual < 1e-5);
  const ObjectiveModel lms3 = builtin_model("lms3");
  const GeneratorCheck g3 = generator_identity_check(lms3, Observable::squared_distance(),
                                                     lms3.optimum() + Vector::Ones(3), times);
  CHECK(g3.max_residual < 1e-5);
  CHECK_THROWS_AS(generator_identity_check(lms3, Observable::identity(), lms3.optimum(), times), InvalidArgument);
}

TEST_CASE("derivatives of h at the optimum") {
  const ObjectiveModel l1 = builtin_model("l1");
  const double h = exact_hessian(l1, l1.optimum())(0, 0);
  CHECK(h_id_gradient_at_opt(l1)(0, 0) == doctest::Approx(1.0 / h));
  CHECK(std::abs(h_id_gradient_fd(l1)(0, 0) - 1.0 / h) < 1e-4);

  // second-order expansion of the 1-d flow: h''(θ*) = −f'''/(2H²) for g = θ
  const double f3 = exact_third_derivative(l1, l1.optimum())(0, 0, 0);
  CHECK(std::abs(poisson_hessian_at_opt(l1, Observable::coordinate(0))(0, 0) + f3 / (2 * h * h)) < 1e-4);

  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(poisson_hessian_at_opt(q1, Observable::squared_distance())(0, 0) == doctest::Approx(1.0));
  CHECK(poisson_hessian_at_opt(q1, Observable::coordinate(0))(0, 0) == 0.0);
  const ObjectiveModel lms3 = builtin_model("lms3");
  const Matrix fd = h_id_gradient_fd(lms3);
  CHECK((fd - lms3.second_moment().inverse()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("weak-error remainder on Q1 is second order") {
  const ObjectiveModel q1 = builtin_model("q1");
  const std::vector<double> gammas{0.2, 0.4, 0.8, 1.6};
  const WeakErrorReport rep = weak_error_check(q1, Observable::squared_distance(), gammas, q1.optimum(), 2000000, 5);
  REQUIRE(rep.points.size() == 4);
  for (const auto& p : rep.points) {
    CHECK(p.leading == doctest::Approx(p.gamma / 2));
    // stationary value γ/(2−γ) − γ/2
    const double exact = p.gamma * p.gamma / (2 * (2 - p.gamma));
    CHECK(std::abs(p.residual.mean - exact) <= 4 * p.residual.se + 0.02 * exact);
  }
  REQUIRE(rep.fit);
  CHECK(rep.fit->slope > 1.6);
}
