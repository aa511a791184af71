// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/models.hpp"
#include "sgdlab/parallel.hpp"
#include "sgdlab/stats.hpp"

namespace sgdlab {

/// Gradient flow θ̇ = −f'(θ) on a uniform grid.
struct FlowSolution {
  Vector theta0;
  std::vector<double> t;
  std::vector<Vector> states;
  double h = 0.0;
  double error_estimate = 0.0;  // max difference to the solution at step 2h, over 15
};

/// Classical RK4 with step halving until successive solutions agree to tol at
/// every common grid time. h0 = 0 picks min(0.5/L, T/16). Throws ToleranceError
/// after 2^22 steps.
FlowSolution integrate_flow(const ObjectiveModel& model, const Vector& theta0, double T, double tol,
                            double h0 = 0.0);

/// Test function g for the continuous Poisson solution. Vector-valued g
/// (identity) is handled coordinatewise.
class Observable {
 public:
  enum class Kind { kIdentity, kCoordinate, kSquaredDistance, kUser };

  static Observable identity();
  static Observable coordinate(int index);
  static Observable squared_distance();
  /// User scalar g with its optimum value g(θ*) and a Lipschitz bound near θ*
  /// used only for the truncation horizon.
  static Observable user(std::function<double(const Vector&)> g, double g_star, double lipschitz = 1.0,
                         std::string name = "user");

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  int outputs(int d) const { return kind_ == Kind::kIdentity ? d : 1; }
  int index() const { return index_; }

  /// g(θ) − g(θ*)
  Vector centered(const ObjectiveModel& model, const Vector& theta) const;
  /// Scalar g only; no allocation for the built-in kinds.
  double centered_scalar(const ObjectiveModel& model, const Vector& theta) const;

  /// Tail bound of ∫_T^∞ |g(φ_s) − g(θ*)| ds given ‖θ − θ*‖ = r0 and rate μ.
  double tail_bound(double r0, double mu, double T) const;

 private:
  Kind kind_ = Kind::kIdentity;
  int index_ = 0;
  std::function<double(const Vector&)> fn_;
  double g_star_ = 0.0;
  double lipschitz_ = 1.0;
  std::string name_;
};

struct PoissonValue {
  std::string g;
  Vector theta;
  Vector value;         // h_g(θ), one entry per output of g
  double horizon = 0.0; // truncation time T
  double error_estimate = 0.0;
};

/// h_g(θ) = ∫₀^∞ (g(φ_s(θ)) − g(θ*)) ds, truncated where the exponential tail
/// bound drops below tol/10, composite Simpson on the flow grid. The step is
/// halved until the quadrature changes by less than tol.
PoissonValue poisson_h(const ObjectiveModel& model, const Observable& g, const Vector& theta, double tol);

/// f''(θ*)^{-1}
Matrix h_id_gradient_at_opt(const ObjectiveModel& model);
/// Central differences of poisson_h(identity) around θ*; column j is ∂h/∂θ_j.
Matrix h_id_gradient_fd(const ObjectiveModel& model, double step = 1e-3, double tol = 1e-11);

struct GeneratorCheck {
  std::vector<double> t;
  std::vector<double> residual;  // |d/dt h_g(φ_t) + g(φ_t) − g(θ*)|
  double max_residual = 0.0;
};

/// Differentiates t ↦ h_g(φ_t(θ)) numerically (five-point stencil) at the
/// given times and compares with −(g(φ_t) − g(θ*)). g must be scalar.
GeneratorCheck generator_identity_check(const ObjectiveModel& model, const Observable& g,
                                        const Vector& theta, const std::vector<double>& times,
                                        double dt = 1e-2, double tol = 1e-10);

/// h_g''(θ*) for scalar g. Closed form on least squares (2·𝐀[I] for the
/// squared distance, 0 for coordinates); otherwise second-order central
/// differences of poisson_h at step and step/2 with Richardson refinement.
Matrix poisson_hessian_at_opt(const ObjectiveModel& model, const Observable& g, double step = 1e-3,
                              double tol = 1e-10);

struct WeakErrorPoint {
  double gamma = 0.0;
  std::uint64_t horizon = 0;
  MeanWithError average;  // (1/k) Σ_{i=1..k} g(θ_i) − g(θ*)
  double correction = 0.0;  // (h_g(θ₀) − E h_g(θ_{k+1})) / (kγ)
  double leading = 0.0;     // (γ/2) tr(h_g''(θ*) C(θ*))
  MeanWithError residual;   // average − correction − leading
};

struct WeakErrorReport {
  std::string g;
  std::vector<WeakErrorPoint> points;
  std::optional<ScalingFit> fit;  // residual vs γ
  std::string note;
};

struct WeakErrorOptions {
  std::size_t replicas = 1;
  std::size_t batches = 50;  // per replica, for the time average
  /// Use horizon·γ_min/γ steps at γ so that every point covers the same
  /// continuous time.
  bool equal_time = true;
  double min_span = 8.0;
  Execution exec;
};

WeakErrorReport weak_error_check(const ObjectiveModel& model, const Observable& g,
                                 const std::vector<double>& gammas, const Vector& theta0,
                                 std::uint64_t horizon, std::uint64_t seed,
                                 const WeakErrorOptions& options = {});

}  // namespace sgdlab
