// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sgdlab/models.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

/// M ⊗ N acting as P ↦ M P N.
Matrix kron_apply(const Matrix& m, const Matrix& n, const Matrix& p);

/// Column-major vec and its inverse.
Vector vec(const Matrix& p);
Matrix unvec(const Vector& v, int d);

/// Dense Kronecker product a ⊗ b in the usual block sense (vec identity:
/// vec(MPN) = (Nᵀ ⊗ M) vec P).
Matrix kronecker(const Matrix& a, const Matrix& b);

/// Linear map on d×d matrices: P ↦ Σ_j c_j M_j P N_j (+ custom term), or a
/// dense d²×d² matrix acting on vec P.
class MatrixOperator {
 public:
  using Custom = std::function<Matrix(const Matrix&)>;

  explicit MatrixOperator(int d) : d_(d) {}

  static MatrixOperator kron(const Matrix& m, const Matrix& n, double coeff = 1.0);
  static MatrixOperator identity(int d);
  static MatrixOperator from_dense(Matrix dense);

  MatrixOperator& add_term(double coeff, Matrix m, Matrix n);
  MatrixOperator& add_custom(Custom fn);

  int dim() const { return d_; }
  bool is_dense() const { return dense_.has_value(); }

  Matrix apply(const Matrix& p) const;
  /// d²×d² matrix K with vec(op(P)) = K vec(P).
  Matrix materialize() const;

  /// Dense LU inverse; throws SingularOperatorError when not invertible.
  MatrixOperator inverse() const;
  /// (this ∘ rhs)(P) = this(rhs(P)).
  MatrixOperator compose(const MatrixOperator& rhs) const;
  /// Solves op(X) = rhs.
  Matrix solve(const Matrix& rhs) const;

  /// Smallest eigenvalue of the operator restricted to symmetric matrices
  /// (Frobenius-orthonormal basis). Meaningful for self-adjoint operators.
  double min_eigenvalue_symmetric() const;

 private:
  struct Term {
    double coeff;
    Matrix left;
    Matrix right;
  };

  int d_;
  std::vector<Term> terms_;
  std::vector<Custom> custom_;
  std::optional<Matrix> dense_;
};

/// P ↦ H P + P H
MatrixOperator lyapunov_operator(const Matrix& h);

/// 𝐀 = (H⊗I + I⊗H)^{-1}; throws SingularOperatorError unless H is SPD.
MatrixOperator operator_A(const Matrix& h);

/// Σ⊗I + I⊗Σ − γ Σ⊗Σ
MatrixOperator stationary_operator_quadratic(const Matrix& sigma, double gamma);

/// γ (Σ⊗I + I⊗Σ − γΣ⊗Σ)^{-1} [Cbar]; throws SingularOperatorError when the
/// operator is not positive definite on symmetric matrices (γ ∉ (0, 2/λ_max)).
Matrix stationary_second_moment_quadratic(const Matrix& sigma, double gamma, const Matrix& cbar);

/// 𝐓 : A ↦ Σ_i w_i (x_iᵀ A x_i) x_i x_iᵀ (least squares only).
MatrixOperator operator_T(const ObjectiveModel& model);

/// E[ξ ξᵀ] with ξ = (xᵀθ* − y) x.
Matrix additive_noise_covariance(const ObjectiveModel& model);

/// Exact stationary second moment of the least-squares chain:
/// (Σ⊗I + I⊗Σ − γ𝐓) M = γ E[ξξᵀ]. Requires λ = 0 and γ ≤ 1/r².
Matrix stationary_second_moment_lms(const ObjectiveModel& model, double gamma);

/// ∫C dπ_γ for the least-squares chain: E[ξξᵀ] + 𝐓[M] − ΣMΣ.
Matrix stationary_noise_average_lms(const ObjectiveModel& model, double gamma);

/// Ω = (Σ⊗I + I⊗Σ − γΣ⊗Σ)(Σ⊗I + I⊗Σ − γ𝐓)^{-1}
MatrixOperator omega_operator(const Matrix& sigma, double gamma, const MatrixOperator& t);

/// Δ = factor · f''(θ*)^{-1} f'''(θ*)[𝐀 C(θ*)]. The default factor −1/2
/// matches the stationary mean measured by simulation.
Vector bias_constant_delta(const ObjectiveModel& model, double factor = -0.5);

/// Closed-form Poisson solutions for least squares:
/// ψ_γ(θ) = (γΣ)^{-1}(θ − θ*),  ϖ_γ(θ) = (γΣ)^{-2}(θ − θ*).
Vector poisson_psi_quadratic(const ObjectiveModel& model, double gamma, const Vector& theta);
Vector poisson_varpi_quadratic(const ObjectiveModel& model, double gamma, const Vector& theta);

/// Coefficients of the averaged-iterate error for least squares:
///   E θ̄_k − θ* ≈ bias / k,
///   E (θ̄_k − θ*)^{⊗2} ≈ variance / k + second_order / k².
struct QuadraticErrorExpansion {
  Vector bias;
  Matrix variance;
  Matrix second_order;
  Matrix stationary_second_moment;
  Matrix noise_average;
};

QuadraticErrorExpansion quadratic_error_expansion(const ObjectiveModel& model, double gamma,
                                                  const Vector& theta0);

}  // namespace sgdlab
