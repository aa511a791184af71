// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/tensorops.hpp"

#include <cmath>
#include <sstream>

namespace sgdlab {

namespace {

void require_square(const Matrix& m, int d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    std::ostringstream os;
    os << what << ": expected " << d << "x" << d << " matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

/// Frobenius-orthonormal basis of symmetric d×d matrices, as columns of vec.
Matrix symmetric_basis(int d) {
  const int s = d * (d + 1) / 2;
  Matrix b = Matrix::Zero(d * d, s);
  int col = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      if (i == j) {
        b(i + j * d, col) = 1.0;
      } else {
        b(i + j * d, col) = M_SQRT1_2;
        b(j + i * d, col) = M_SQRT1_2;
      }
      ++col;
    }
  }
  return b;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_least_squares(const ObjectiveModel& model, const char* what) {
  if (model.kind() != LossKind::kLeastSquares)
    throw ModelError(std::string(what) + " requires a least-squares model");
}

}  // namespace

Matrix kron_apply(const Matrix& m, const Matrix& n, const Matrix& p) {
  const auto d = p.rows();
  require_square(p, static_cast<int>(d), "kron_apply");
  require_square(m, static_cast<int>(d), "kron_apply");
  require_square(n, static_cast<int>(d), "kron_apply");
  return m * p * n;
}

Vector vec(const Matrix& p) { return Eigen::Map<const Vector>(p.data(), p.size()); }

Matrix unvec(const Vector& v, int d) {
  if (v.size() != static_cast<Eigen::Index>(d) * d) throw DimensionError("unvec: size is not d*d");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

MatrixOperator MatrixOperator::kron(const Matrix& m, const Matrix& n, double coeff) {
  MatrixOperator op(static_cast<int>(m.rows()));
  op.add_term(coeff, m, n);
  return op;
}

MatrixOperator MatrixOperator::identity(int d) {
  return kron(Matrix::Identity(d, d), Matrix::Identity(d, d));
}

MatrixOperator MatrixOperator::from_dense(Matrix dense) {
  const auto n = dense.rows();
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (dense.cols() != n || static_cast<Eigen::Index>(d) * d != n)
    throw DimensionError("from_dense: matrix must be d^2 x d^2");
  MatrixOperator op(d);
  op.dense_ = std::move(dense);
  return op;
}

MatrixOperator& MatrixOperator::add_term(double coeff, Matrix m, Matrix n) {
  if (dense_) throw InvalidArgument("cannot add terms to a dense operator");
  require_square(m, d_, "MatrixOperator::add_term");
  require_square(n, d_, "MatrixOperator::add_term");
  terms_.push_back({coeff, std::move(m), std::move(n)});
  return *this;
}

MatrixOperator& MatrixOperator::add_custom(Custom fn) {
  if (dense_) throw InvalidArgument("cannot add terms to a dense operator");
  custom_.push_back(std::move(fn));
  return *this;
}

Matrix MatrixOperator::apply(const Matrix& p) const {
  require_square(p, d_, "MatrixOperator::apply");
  if (dense_) return unvec(*dense_ * vec(p), d_);
  Matrix out = Matrix::Zero(d_, d_);
  for (const auto& t : terms_) out.noalias() += t.coeff * (t.left * p * t.right);
  for (const auto& f : custom_) out += f(p);
  return out;
}

Matrix MatrixOperator::materialize() const {
  if (dense_) return *dense_;
  const int n = d_ * d_;
  Matrix k = Matrix::Zero(n, n);
  for (const auto& t : terms_) k += t.coeff * kronecker(t.right.transpose(), t.left);
  if (!custom_.empty()) {
    for (int col = 0; col < n; ++col) {
      Matrix e = Matrix::Zero(d_, d_);
      e(col % d_, col / d_) = 1.0;
      Matrix acc = Matrix::Zero(d_, d_);
      for (const auto& f : custom_) acc += f(e);
      k.col(col) += vec(acc);
    }
  }
  return k;
}

MatrixOperator MatrixOperator::inverse() const {
  const Matrix k = materialize();
  const Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) throw SingularOperatorError("matrix operator is singular");
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) throw SingularOperatorError("matrix operator is numerically singular");
  return from_dense(lu.inverse());
}

MatrixOperator MatrixOperator::compose(const MatrixOperator& rhs) const {
  if (rhs.d_ != d_) throw DimensionError("compose: dimension mismatch");
  return from_dense(materialize() * rhs.materialize());
}

Matrix MatrixOperator::solve(const Matrix& rhs) const {
  require_square(rhs, d_, "MatrixOperator::solve");
  const Eigen::FullPivLU<Matrix> lu(materialize());
  if (!lu.isInvertible() || !(lu.rcond() > 1e-14)) throw SingularOperatorError("matrix operator is singular");
  return unvec(lu.solve(vec(rhs)), d_);
}

double MatrixOperator::min_eigenvalue_symmetric() const {
  const Matrix b = symmetric_basis(d_);
  const Matrix r = b.transpose() * materialize() * b;
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(r), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

MatrixOperator lyapunov_operator(const Matrix& h) {
  const int d = static_cast<int>(h.rows());
  require_square(h, d, "lyapunov_operator");
  const Matrix id = Matrix::Identity(d, d);
  MatrixOperator op(d);
  op.add_term(1.0, h, id).add_term(1.0, id, h);
  return op;
}

MatrixOperator operator_A(const Matrix& h) {
  const int d = static_cast<int>(h.rows());
  require_square(h, d, "operator_A");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw SingularOperatorError("operator_A: H is not symmetric");
  const Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw SingularOperatorError("operator_A: H is not positive definite");
  return lyapunov_operator(h).inverse();
}

MatrixOperator stationary_operator_quadratic(const Matrix& sigma, double gamma) {
  const int d = static_cast<int>(sigma.rows());
  require_square(sigma, d, "stationary_operator_quadratic");
  MatrixOperator op = lyapunov_operator(sigma);
  op.add_term(-gamma, sigma, sigma);
  return op;
}

Matrix stationary_second_moment_quadratic(const Matrix& sigma, double gamma, const Matrix& cbar) {
  const int d = static_cast<int>(sigma.rows());
  require_square(cbar, d, "stationary_second_moment_quadratic");
  if (!(gamma > 0.0)) throw SingularOperatorError("step size must be positive");
  const MatrixOperator op = stationary_operator_quadratic(sigma, gamma);
  if (!(op.min_eigenvalue_symmetric() > 0.0))
    throw SingularOperatorError("stationary operator is not positive definite (gamma outside (0, 2/L))");
  return symmetrize(op.solve(gamma * cbar));
}

MatrixOperator operator_T(const ObjectiveModel& model) {
  require_least_squares(model, "operator_T");
  const int d = model.dim();
  std::vector<Vector> xs;
  std::vector<double> ws;
  for (const auto& a : model.atoms()) {
    xs.push_back(a.x);
    ws.push_back(a.w);
  }
  MatrixOperator op(d);
  op.add_custom([xs, ws, d](const Matrix& p) {
    Matrix out = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < xs.size(); ++i)
      out.noalias() += ws[i] * xs[i].dot(p * xs[i]) * xs[i] * xs[i].transpose();
    return out;
  });
  return op;
}

Matrix additive_noise_covariance(const ObjectiveModel& model) {
  require_least_squares(model, "additive_noise_covariance");
  Matrix c = Matrix::Zero(model.dim(), model.dim());
  for (const auto& a : model.atoms()) {
    const Vector xi = (a.x.dot(model.optimum()) - a.y) * a.x;
    c.noalias() += a.w * xi * xi.transpose();
  }
  return symmetrize(c);
}

Matrix stationary_second_moment_lms(const ObjectiveModel& model, double gamma) {
  require_least_squares(model, "stationary_second_moment_lms");
  if (model.lambda() != 0.0) throw ModelError("stationary_second_moment_lms requires lambda = 0");
  const double r2 = model.constants().r2;
  if (!(gamma > 0.0) || gamma > 1.0 / r2 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "stationary_second_moment_lms requires 0 < gamma <= 1/r^2 = " << 1.0 / r2;
    throw InvalidArgument(os.str());
  }
  const Matrix& sigma = model.second_moment();
  MatrixOperator op = lyapunov_operator(sigma);
  const MatrixOperator t = operator_T(model);
  op.add_custom([t, gamma](const Matrix& p) { return Matrix(-gamma * t.apply(p)); });
  return symmetrize(op.solve(gamma * additive_noise_covariance(model)));
}

Matrix stationary_noise_average_lms(const ObjectiveModel& model, double gamma) {
  const Matrix m = stationary_second_moment_lms(model, gamma);
  const Matrix& sigma = model.second_moment();
  return symmetrize(additive_noise_covariance(model) + operator_T(model).apply(m) - sigma * m * sigma);
}

MatrixOperator omega_operator(const Matrix& sigma, double gamma, const MatrixOperator& t) {
  const int d = static_cast<int>(sigma.rows());
  if (t.dim() != d) throw DimensionError("omega_operator: dimension mismatch");
  const MatrixOperator first = stationary_operator_quadratic(sigma, gamma);
  const Matrix second = lyapunov_operator(sigma).materialize() - gamma * t.materialize();
  return first.compose(MatrixOperator::from_dense(second).inverse());
}

Vector bias_constant_delta(const ObjectiveModel& model, double factor) {
  const Vector& ts = model.optimum();
  const Matrix h = exact_hessian(model, ts);
  const Matrix m = operator_A(h).apply(noise_covariance(model, ts).C);
  const Vector v = exact_third_derivative(model, ts).contract(m);
  return factor * h.ldlt().solve(v);
}

Vector poisson_psi_quadratic(const ObjectiveModel& model, double gamma, const Vector& theta) {
  require_least_squares(model, "poisson_psi_quadratic");
  require_dim(theta, model.dim(), "poisson_psi_quadratic");
  const Matrix h = exact_hessian(model, theta);
  return h.ldlt().solve(theta - model.optimum()) / gamma;
}

Vector poisson_varpi_quadratic(const ObjectiveModel& model, double gamma, const Vector& theta) {
  const Matrix h = exact_hessian(model, theta);
  return h.ldlt().solve(poisson_psi_quadratic(model, gamma, theta)) / gamma;
}

QuadraticErrorExpansion quadratic_error_expansion(const ObjectiveModel& model, double gamma,
                                                  const Vector& theta0) {
  require_least_squares(model, "quadratic_error_expansion");
  require_dim(theta0, model.dim(), "quadratic_error_expansion");
  const int d = model.dim();
  const Matrix& sigma = model.second_moment();
  const Matrix sigma_inv = sigma.ldlt().solve(Matrix::Identity(d, d));
  QuadraticErrorExpansion e;
  e.stationary_second_moment = stationary_second_moment_lms(model, gamma);
  e.noise_average = stationary_noise_average_lms(model, gamma);
  const Vector phi0 = theta0 - model.optimum();
  e.bias = sigma_inv * phi0 / gamma;
  e.variance = symmetrize(sigma_inv * e.noise_average * sigma_inv);
  const MatrixOperator omega = omega_operator(sigma, gamma, operator_T(model));
  const Matrix& m = e.stationary_second_moment;
  const Matrix sigma_inv2 = sigma_inv * sigma_inv;
  e.second_order = symmetrize(sigma_inv * omega.apply(phi0 * phi0.transpose() - m) * sigma_inv -
                              (sigma_inv2 * m + m * sigma_inv2)) /
                   (gamma * gamma);
  return e;
}

}  // namespace sgdlab
