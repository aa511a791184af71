// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sgdlab/model_io.hpp"
#include "sgdlab/stationary.hpp"
#include "sgdlab/tensorops.hpp"

using namespace sgdlab;

TEST_CASE("rates, burn-in and the moment bound on Q1") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK(contraction_rate(q1, 0.1) == doctest::Approx(0.81));
  CHECK(contraction_rate_alt(q1, 0.1) == doctest::Approx(std::sqrt(0.9)));
  const auto n = minimum_burn_in(q1, 0.1);
  CHECK(std::pow(0.81, static_cast<double>(n)) <= 1e-8);
  CHECK(std::pow(0.81, static_cast<double>(n - 1)) > 1e-8);
  CHECK(second_moment_bound(q1, 0.1) == doctest::Approx(0.1 / 0.9));
  CHECK(std::isinf(second_moment_bound(q1, 1.5)));
}

TEST_CASE("Q1 stationary moments match the AR(1) values") {
  const ObjectiveModel q1 = builtin_model("q1");
  for (double g : {0.1, 0.5}) {
    const auto e = estimate_stationary(q1, g, 3, minimum_burn_in(q1, g), 400000);
    const double m2 = g / (2 - g);
    CHECK(std::abs(e.trace_second_moment.mean - m2) <= 4 * e.trace_second_moment.se);
    CHECK(std::abs(e.mean(0)) <= 4 * e.mean_se(0));
    // f − f* = θ²/2 on Q1, C(θ) = 1 everywhere
    CHECK(e.fgap.mean == doctest::Approx(e.trace_second_moment.mean / 2));
    CHECK(e.cbar(0, 0) == doctest::Approx(1.0));
    CHECK(e.batches == 50);
  }
}

TEST_CASE("estimate_stationary argument checks") {
  const ObjectiveModel q1 = builtin_model("q1");
  CHECK_THROWS_AS(estimate_stationary(q1, 0.1, 1, 10, 10000), InvalidArgument);
  StationaryOptions few;
  few.batches = 10;
  CHECK_THROWS_AS(estimate_stationary(q1, 0.1, 1, minimum_burn_in(q1, 0.1), 10000, few), InvalidArgument);
  CHECK_THROWS_AS(estimate_stationary(q1, 0.1, 1, minimum_burn_in(q1, 0.1), 20), NoiseFloorError);
}

TEST_CASE("control-variate mean is unbiased and tracks γΔ") {
  const ObjectiveModel l1 = builtin_model("l1");
  const double g = 0.5;
  const double delta = bias_constant_delta(l1)(0);
  StationaryOptions cv;
  cv.control_variate = true;
  cv.replicas = 10;
  cv.batches = 5;
  const auto e = estimate_stationary(l1, g, 8, minimum_burn_in(l1, g), 200000, cv);
  CHECK(e.mean(0) - l1.optimum()(0) == doctest::Approx(g * delta).epsilon(0.15));
  const CoupledBias cb = estimate_coupled_bias(l1, {g, 2 * g}, 8, 0, 40000, 50, 1, {});
  CHECK(cb.bias(0)(0) == doctest::Approx(g * delta).epsilon(0.15));
  CHECK(cb.bias(1)(0) == doctest::Approx(2 * g * delta).epsilon(0.15));
  const double w[2] = {2.0, -1.0};
  CHECK(std::abs(cb.combination(w)(0)) < 0.2 * g * delta);
  CHECK_THROWS_AS(cb.index_of(0.3), InvalidArgument);
}

TEST_CASE("coupled distance on Q1 contracts exactly at 0.81 per step") {
  const ObjectiveModel q1 = builtin_model("q1");
  const auto c = coupling_contraction(q1, 0.1, Vector::Ones(1), -Vector::Ones(1), 50, 200, 4);
  REQUIRE(c.k.size() == 201);
  for (std::size_t i = 0; i < c.k.size(); ++i) {
    CHECK(c.distance[i] == doctest::Approx(4.0 * std::pow(0.81, static_cast<double>(c.k[i]))).epsilon(1e-10));
    CHECK(c.se[i] <= 1e-12 * c.distance[0]);
  }
  CHECK(c.worst_excess(3.0, 1e-12) <= 0.0);
}

TEST_CASE("coupling on L1 stays below the bound") {
  const ObjectiveModel l1 = builtin_model("l1");
  const auto c = coupling_contraction(l1, 2.0, Vector::Constant(1, 3.0), Vector::Constant(1, -2.0), 200, 100, 4);
  CHECK(c.worst_excess() <= 0.0);
  CHECK(c.distance.back() < c.distance.front());
}

TEST_CASE("averaged-iterate expansion on Q1") {
  const ObjectiveModel q1 = builtin_model("q1");
  std::vector<std::uint64_t> grid;
  for (double k = 100; k <= 4000; k *= 1.6) grid.push_back(static_cast<std::uint64_t>(k));
  KScalingOptions opt;
  opt.replicas = 3000;
  const KScaling ks = fit_k_scaling(q1, 0.1, Vector::Ones(1), grid, 6, opt);
  CHECK(ks.predicted_bias == doctest::Approx(10.0));
  CHECK(ks.bias_fit.c1 == doctest::Approx(10.0).epsilon(0.15));
  // exact mean error (1 − 0.9^{k+1}) / (0.1 (k+1)) at each grid point
  for (std::size_t i = 0; i < ks.k.size(); ++i) {
    const double kk = static_cast<double>(ks.k[i]);
    const double exact = (1 - std::pow(0.9, kk + 1)) / (0.1 * (kk + 1));
    CHECK(std::abs(ks.mean_error[i](0) - exact) <= 4 * ks.mean_error_se[i](0));
  }
  CHECK_THROWS_AS(fit_k_scaling(q1, 0.1, Vector::Ones(1), {100, 200, 400}, 6, opt), InvalidArgument);
}

TEST_CASE("moment growth on Q1") {
  const ObjectiveModel q1 = builtin_model("q1");
  const std::vector<double> gammas{0.025, 0.05, 0.1, 0.2};
  const MomentGrowth p1 = moment_growth_check(q1, gammas, 1, 2, 400000);
  REQUIRE(p1.fit);
  CHECK(p1.fit->slope == doctest::Approx(1.0).epsilon(0.1));
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    CHECK(p1.moments[i].mean <= p1.bound[i]);
    CHECK(std::abs(p1.moments[i].mean - gammas[i] / (2 - gammas[i])) <= 4 * p1.moments[i].se);
  }
}

TEST_CASE("bias scaling on L1 reports single, RR2 and RR3") {
  const ObjectiveModel l1 = builtin_model("l1");
  const double l = l1.constants().L;
  BiasScalingOptions opt;
  opt.samples = 4000;
  opt.replicas = 200;
  const BiasScaling b = fit_bias_scaling(l1, {0.05 / l, 0.1 / l, 0.2 / l, 0.4 / l}, 3, opt);
  REQUIRE(b.points.size() == 4);
  CHECK(b.points.back().rr3.has_value());
  CHECK(b.delta(0) == doctest::Approx(0.0314322).epsilon(1e-5));
  REQUIRE(b.single_fit);
  CHECK(b.single_fit->slope == doctest::Approx(1.0).epsilon(0.15));
  for (const auto& p : b.points) CHECK(p.rr2.mean < p.single.mean);
}
