// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgdlab/rng.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

enum class LossKind { kLeastSquares, kLogisticL2 };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// One support point of the finite data distribution.
struct DataAtom {
  Vector x;
  double y = 0.0;
  double w = 0.0;
};

/// Derived constants of a model. See ObjectiveModel::create for definitions.
struct ModelConstants {
  double mu = 0.0;            // λ_min f''(θ*)
  double mu_global = 0.0;     // global strong-convexity lower bound
  double L = 0.0;             // smoothness: λ_max(Σ) (+λ) or λ_max(Σ)/4 + λ
  double L_cocoercive = 0.0;  // per-sample co-coercivity: R² (+λ) or R²/4 + λ
  double R2 = 0.0;            // max_i ‖x_i‖²
  double tau2_sq = 0.0;       // E‖ε(θ*)‖² = tr C(θ*)
  double tau4 = 0.0;          // E^{1/4}‖ε(θ*)‖⁴
  double r2 = 0.0;            // least squares: smallest r² with E[‖X‖²XXᵀ] ≼ r²Σ
};

struct NoiseCovariance {
  Matrix C;
  Vector at;
};

/// Strongly convex objective over a finite discrete data distribution.
///
/// Immutable after construction; θ* and the constants are computed once and
/// cached. Per-sample losses include the ℓ₂ term, so ε carries no λθ part.
class ObjectiveModel {
 public:
  /// Validates weights, radius and convexity, then solves for θ*.
  static ObjectiveModel create(LossKind kind, std::vector<DataAtom> atoms, double lambda = 0.0,
                               std::optional<double> radius = std::nullopt);

  LossKind kind() const { return kind_; }
  int dim() const { return d_; }
  std::size_t num_atoms() const { return atoms_.size(); }
  const DataAtom& atom(std::size_t i) const { return atoms_[i]; }
  const std::vector<DataAtom>& atoms() const { return atoms_; }
  double lambda() const { return lambda_; }
  double radius() const { return radius_; }

  const Vector& optimum() const { return theta_star_; }
  double optimal_value() const { return f_star_; }
  const ModelConstants& constants() const { return constants_; }
  /// Σ = Σ_i w_i x_i x_iᵀ
  const Matrix& second_moment() const { return sigma_; }

  double value(const Vector& theta) const;

  /// Per-sample gradient is slope·x_i + λθ; returns the slope.
  double sample_slope(std::size_t i, const Vector& theta) const {
    const DataAtom& a = atoms_[i];
    const double t = a.x.dot(theta);
    return kind_ == LossKind::kLeastSquares ? t - a.y : -a.y * sigmoid(-a.y * t);
  }

  /// Index of an atom drawn by weight; consumes one uniform.
  std::size_t draw_atom(Stream& stream) const;

  /// Second derivative of the per-sample loss along x_i at θ (logistic: σσ(−)).
  double sample_curvature(std::size_t i, const Vector& theta) const;

  static double sigmoid(double t);

 private:
  ObjectiveModel() = default;

  LossKind kind_ = LossKind::kLeastSquares;
  int d_ = 0;
  std::vector<DataAtom> atoms_;
  std::vector<double> cumulative_;
  double lambda_ = 0.0;
  double radius_ = 0.0;
  Matrix sigma_;
  Vector theta_star_;
  double f_star_ = 0.0;
  ModelConstants constants_;

  friend Vector solve_optimum(const ObjectiveModel& model);
};

Vector exact_gradient(const ObjectiveModel& model, const Vector& theta);
/// g_i(θ) for atom i.
Vector sample_gradient(const ObjectiveModel& model, std::size_t atom, const Vector& theta);
Matrix exact_hessian(const ObjectiveModel& model, const Vector& theta);
Tensor3 exact_third_derivative(const ObjectiveModel& model, const Vector& theta);
/// C(θ) = Σ_i w_i (g_i(θ) − f'(θ))^{⊗2}, by exact summation.
NoiseCovariance noise_covariance(const ObjectiveModel& model, const Vector& theta);
/// Direct solve for least squares, damped Newton for logistic. Throws ModelError
/// if Newton does not converge in 200 iterations.
Vector solve_optimum(const ObjectiveModel& model);

/// Draws one atom per call and returns its per-sample gradient.
class NoiseOracle {
 public:
  NoiseOracle(const ObjectiveModel& model, Stream stream)
      : model_(&model), stream_(stream) {}

  std::size_t draw() { return model_->draw_atom(stream_); }
  Vector stochastic_gradient(const Vector& theta);

  Stream& stream() { return stream_; }
  const ObjectiveModel& model() const { return *model_; }

 private:
  const ObjectiveModel* model_;
  Stream stream_;
};

/// Result of checking the standing assumptions on a concrete model.
struct AssumptionReport {
  bool strongly_convex = false;        // A1: μ_global > 0
  bool smooth = true;                  // A2: bounded derivatives (holds for both losses)
  double unbiasedness_residual = 0.0;  // A3: max over a grid of |Σ w g_i − f'|
  double cocoercivity_violation = 0.0; // A4: worst L⟨Δg,Δθ⟩ − ‖Δg‖² (negative = violated)
  bool noise_regular = true;           // A5: C is smooth for finite atoms
  std::vector<std::string> notes;
};

AssumptionReport check_assumptions(const ObjectiveModel& model, std::uint64_t seed = 1,
                                   int pairs = 1000);

}  // namespace sgdlab
