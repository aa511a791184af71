// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "sgdlab/model_io.hpp"
#include "sgdlab/models.hpp"
#include "sgdlab/rng.hpp"

using namespace sgdlab;

namespace {

double sig(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// 1-d logistic with atoms (1, +1, 0.7), (1, -1, 0.3) and λ = 0.1, solved by bisection.
double l1_optimum() {
  auto grad = [](double t) { return -0.7 * sig(-t) + 0.3 * sig(t) + 0.1 * t; };
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (grad(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

ObjectiveModel random_logistic(std::uint64_t seed, int d) {
  Stream s(seed, 0, StreamPurpose::kTest);
  std::vector<DataAtom> atoms(5);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    atoms[i].x = Vector(d);
    for (int j = 0; j < d; ++j) atoms[i].x(j) = 2 * s.uniform() - 1;
    atoms[i].y = s.uniform() < 0.5 ? -1.0 : 1.0;
    atoms[i].w = 0.2;
  }
  return ObjectiveModel::create(LossKind::kLogisticL2, atoms, 0.05);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("Q1 has the expected constants") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(q1.dim() == 1);
  CHECK(q1.optimum()(0) == doctest::Approx(0.0));
  CHECK(q1.optimal_value() == doctest::Approx(0.5));
  CHECK(q1.second_moment()(0, 0) == doctest::Approx(1.0));
  CHECK(noise_covariance(q1, q1.optimum()).C(0, 0) == doctest::Approx(1.0));
  const auto& c = q1.constants();
  CHECK(c.mu == doctest::Approx(1.0));
  CHECK(c.L == doctest::Approx(1.0));
  CHECK(c.tau2_sq == doctest::Approx(1.0));
  CHECK(exact_third_derivative(q1, q1.optimum()).max_abs() == 0.0);
}

TEST_CASE("L1 matches the scalar logistic oracle") {
  const ObjectiveModel l1 = builtin_model("l1");
  const double t = l1_optimum();
  CHECK(l1.optimum()(0) == doctest::Approx(t).epsilon(1e-10));
  CHECK(t == doctest::Approx(0.58282597).epsilon(1e-7));
  const double s = sig(t);
  const double h = s * (1 - s) + 0.1;
  CHECK(exact_hessian(l1, l1.optimum())(0, 0) == doctest::Approx(h).epsilon(1e-10));
  CHECK(exact_third_derivative(l1, l1.optimum())(0, 0, 0) == doctest::Approx(s * (1 - s) * (1 - 2 * s)).epsilon(1e-9));
  // per-sample slopes -σ(-θ) and σ(θ) differ by exactly 1
  CHECK(noise_covariance(l1, l1.optimum()).C(0, 0) == doctest::Approx(0.21).epsilon(1e-10));
  CHECK(l1.constants().L == doctest::Approx(0.35));
  CHECK(l1.constants().mu_global == doctest::Approx(0.1));
}

TEST_CASE("derivatives agree with finite differences") {
  for (const ObjectiveModel& m : {builtin_model("lms3"), random_logistic(3, 3)}) {
    const int d = m.dim();
    Vector theta = m.optimum() + Vector::LinSpaced(d, 0.3, -0.4);
    const double e = 1e-5;
    const Vector g = exact_gradient(m, theta);
    const Matrix hess = exact_hessian(m, theta);
    const Tensor3 t3 = exact_third_derivative(m, theta);
    for (int j = 0; j < d; ++j) {
      Vector ej = Vector::Zero(d);
      ej(j) = e;
      CHECK(g(j) == doctest::Approx((m.value(theta + ej) - m.value(theta - ej)) / (2 * e)).epsilon(1e-6));
      const Vector dg = (exact_gradient(m, theta + ej) - exact_gradient(m, theta - ej)) / (2 * e);
      const Matrix dh = (exact_hessian(m, theta + ej) - exact_hessian(m, theta - ej)) / (2 * e);
      for (int i = 0; i < d; ++i) {
        CHECK(hess(i, j) == doctest::Approx(dg(i)).epsilon(1e-6));
        for (int k = 0; k < d; ++k) CHECK(t3(i, k, j) == doctest::Approx(dh(i, k)).epsilon(1e-5).scale(1e-3));
      }
    }
    // f' is the weighted mean of the per-sample gradients
    Vector sum = Vector::Zero(d);
    for (std::size_t i = 0; i < m.num_atoms(); ++i) sum += m.atom(i).w * sample_gradient(m, i, theta);
    CHECK((sum - g).norm() < 1e-12);
    CHECK(exact_gradient(m, m.optimum()).norm() < 1e-10);
  }
}

TEST_CASE("standing assumptions hold on the reference models") {
  for (const char* name : {"q1", "l1", "lms3"}) {
    const AssumptionReport rep = check_assumptions(builtin_model(name));
    CHECK(rep.strongly_convex);
    CHECK(rep.unbiasedness_residual < 1e-12);
    CHECK(rep.cocoercivity_violation >= -1e-9);
  }
}

TEST_CASE("built-in models equal the shipped model files") {
  for (const char* name : {"q1", "l1", "lms3"}) {
    const std::string path = std::string(SGDLAB_SOURCE_DIR) + "/models/" + name + ".json";
    CHECK(model_to_json(load_model(path)) == model_to_json(builtin_model(name)));
    CHECK(model_to_json(parse_model(read_file(path))) == model_to_json(builtin_model(name)));
  }
}

TEST_CASE("model round trip through JSON") {
  const ObjectiveModel m = random_logistic(9, 2);
  const ObjectiveModel back = parse_model(model_to_json(m));
  CHECK((back.optimum() - m.optimum()).norm() == 0.0);
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(parse_model("{not json"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"kind":"least_squares","d":1,"atoms":[{"x":[1],"y":1,"w":0.4}]})"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"kind":"logistic_l2","d":1,"lambda":0,"atoms":[{"x":[1],"y":1,"w":1}]})"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"kind":"least_squares","d":2,"atoms":[{"x":[1],"y":1,"w":1}]})"), ModelError);
  CHECK_THROWS_AS(parse_model(R"({"kind":"hinge","d":1,"atoms":[{"x":[1],"y":1,"w":1}]})"), ModelError);
  CHECK_THROWS_AS(builtin_model("nope"), ModelError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ModelError);
}

TEST_CASE("atom draws follow the weights") {
  const ObjectiveModel l1 = builtin_model("l1");
  Stream s(5, 0, StreamPurpose::kTest);
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) first += l1.draw_atom(s) == 0;
  CHECK(static_cast<double>(first) / n == doctest::Approx(0.7).epsilon(0.01));
}
