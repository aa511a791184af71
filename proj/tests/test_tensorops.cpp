// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sgdlab/acceptance.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/stationary.hpp"
#include "sgdlab/tensorops.hpp"

using namespace sgdlab;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_CASE("kron_apply basics") {
  const Matrix p = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  CHECK((kron_apply(Matrix::Identity(2, 2), Matrix::Identity(2, 2), p) - p).norm() == 0.0);
  CHECK(kron_apply(scalar(2), scalar(3), scalar(5))(0, 0) == 30.0);
  CHECK_THROWS_AS(kron_apply(Matrix::Identity(2, 2), Matrix::Identity(3, 3), p), DimensionError);
  CHECK((unvec(vec(p), 2) - p).norm() == 0.0);
}

TEST_CASE("operator A") {
  CHECK(operator_A(scalar(2)).apply(scalar(1))(0, 0) == doctest::Approx(0.25));
  const Matrix p = (Matrix(2, 2) << 1, 2, 2, 5).finished();
  CHECK((operator_A(Matrix::Identity(2, 2)).apply(p) - p / 2).norm() < 1e-14);
  const Matrix not_spd = (Matrix(2, 2) << 1, 0, 0, -1).finished();
  CHECK_THROWS_AS(operator_A(not_spd), SingularOperatorError);
}

TEST_CASE("quadratic stationary solve") {
  // AR(1) oracle: θ ← (1 − γσ)θ + noise of variance γ²c
  const double gamma = 0.1;
  const double ar1 = gamma * gamma * 1.0 / (1.0 - std::pow(1.0 - gamma, 2));
  CHECK(stationary_second_moment_quadratic(scalar(1), gamma, scalar(1))(0, 0) == doctest::Approx(ar1).epsilon(1e-14));
  CHECK(ar1 == doctest::Approx(0.0526315789473684));
  CHECK(stationary_second_moment_quadratic(Matrix::Identity(3, 3), 0.2, Matrix::Zero(3, 3)).norm() == 0.0);
  CHECK_THROWS_AS(stationary_second_moment_quadratic(scalar(1), 2.5, scalar(1)), SingularOperatorError);

  // small γ: γ·A[C] up to O(γ²)
  const Matrix sigma = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished();
  const Matrix c = (Matrix(2, 2) << 1, 0.2, 0.2, 0.7).finished();
  for (double g : {1e-2, 1e-3}) {
    const Matrix m = stationary_second_moment_quadratic(sigma, g, c);
    const Matrix lead = g * operator_A(sigma).apply(c);
    CHECK((m - lead).norm() / lead.norm() < 3 * g);
  }
}

TEST_CASE("operator T") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(operator_T(q1).apply(scalar(3))(0, 0) == doctest::Approx(3.0));
  // one atom: T[A] = (xᵀAx)·xxᵀ
  DataAtom a;
  a.x = Vector::Constant(1, 2.0);
  a.y = 1.0;
  a.w = 1.0;
  const ObjectiveModel one = ObjectiveModel::create(LossKind::kLeastSquares, {a});
  CHECK(operator_T(one).apply(scalar(0.5))(0, 0) == doctest::Approx(0.5 * 4 * 4));
  CHECK_THROWS_AS(operator_T(builtin_model("l1")), ModelError);
}

TEST_CASE("exact LMS stationary moment") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(stationary_second_moment_lms(q1, 0.1)(0, 0) == doctest::Approx(0.1 / 1.9).epsilon(1e-14));
  // noiseless: y = xᵀθ* exactly
  std::vector<DataAtom> atoms;
  const Vector star = Vector::LinSpaced(2, 0.5, -1.0);
  for (int i = 0; i < 4; ++i) {
    DataAtom a;
    a.x = Vector::LinSpaced(2, 1.0 - 0.3 * i, 0.2 * i);
    a.y = a.x.dot(star);
    a.w = 0.25;
    atoms.push_back(a);
  }
  const ObjectiveModel clean = ObjectiveModel::create(LossKind::kLeastSquares, atoms);
  CHECK(stationary_second_moment_lms(clean, 0.1).norm() < 1e-14);
}

TEST_CASE("LMS moment matches simulation on a random d=2 instance") {
  Stream s(17, 0, StreamPurpose::kTest);
  std::vector<DataAtom> atoms;
  for (int i = 0; i < 4; ++i) {
    DataAtom a;
    a.x = Vector(2);
    a.x << 2 * s.uniform() - 1, 2 * s.uniform() - 1;
    a.y = 2 * s.uniform() - 1;
    a.w = 0.25;
    atoms.push_back(a);
  }
  const ObjectiveModel m = ObjectiveModel::create(LossKind::kLeastSquares, atoms);
  const double gamma = 0.5 / m.constants().r2;
  const Matrix exact = stationary_second_moment_lms(m, gamma);
  const auto est = estimate_stationary(m, gamma, 5, minimum_burn_in(m, gamma), 4000000);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(est.second_moment(i, j) - exact(i, j)) <= 3 * est.second_moment_se(i, j) + 1e-12);
}

TEST_CASE("Omega") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(omega_operator(scalar(1), 0.1, operator_T(q1)).apply(scalar(2))(0, 0) == doctest::Approx(2.0));
  const Matrix sigma = (Matrix(2, 2) << 2, 0.3, 0.3, 1).finished();
  const MatrixOperator om = omega_operator(sigma, 0.2, MatrixOperator::kron(sigma, sigma));
  CHECK((om.materialize() - Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("bias constant") {
  CHECK(bias_constant_delta(builtin_model("lms3")).norm() == 0.0);
  // scalar oracle: Δ = −½ f'''·(C/2H)/H
  const ObjectiveModel l1 = builtin_model("l1");
  const double h = exact_hessian(l1, l1.optimum())(0, 0);
  const double f3 = exact_third_derivative(l1, l1.optimum())(0, 0, 0);
  const double c = noise_covariance(l1, l1.optimum()).C(0, 0);
  CHECK(bias_constant_delta(l1)(0) == doctest::Approx(-0.5 * f3 * c / (2 * h) / h).epsilon(1e-12));
  CHECK(bias_constant_delta(l1)(0) == doctest::Approx(0.0314322).epsilon(1e-5));
  CHECK(bias_constant_delta(l1, 1.0)(0) == doctest::Approx(-2 * bias_constant_delta(l1)(0)));

  // symmetric logistic in d=2: atoms ±x with both labels, θ* = 0 and f'''(0) = 0
  std::vector<DataAtom> atoms;
  for (double sx : {1.0, -1.0})
    for (double y : {1.0, -1.0}) {
      DataAtom a;
      a.x = Vector(2);
      a.x << sx * 0.8, sx * -0.3;
      a.y = y;
      a.w = 0.25;
      atoms.push_back(a);
    }
  atoms.push_back(atoms[0]);
  atoms.back().x << 0.1, 0.9;
  atoms.push_back(atoms.back());
  atoms.back().y = -1.0;
  for (auto& a : atoms) a.w = 1.0 / 6.0;
  atoms.back().w = 1.0 - 5.0 / 6.0;
  const ObjectiveModel sym = ObjectiveModel::create(LossKind::kLogisticL2, atoms, 0.1);
  CHECK(sym.optimum().norm() < 1e-12);
  CHECK(bias_constant_delta(sym).norm() < 1e-12);
}

TEST_CASE("quadratic error expansion on Q1") {
  const ObjectiveModel q1 = builtin_model("q1");
  const auto e = quadratic_error_expansion(q1, 0.1, Vector::Ones(1));
  CHECK(e.bias(0) == doctest::Approx(10.0));
  CHECK(e.variance(0, 0) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(poisson_psi_quadratic(q1, 0.1, Vector::Ones(1))(0) == doctest::Approx(10.0));
  CHECK(poisson_varpi_quadratic(q1, 0.1, Vector::Ones(1))(0) == doctest::Approx(100.0));
}

TEST_CASE("randomized operator properties") {
  const auto checks = operator_suite(2024, 2000);
  CHECK(checks.size() >= 15);
  for (const auto& c : checks) {
    INFO(c.name << " max error " << c.max_error << " tolerance " << c.tolerance);
    CHECK(c.ok());
  }
}
