// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sgdlab {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Vector weighted_gradient_sum(const ObjectiveModel& model, const Vector& theta) {
  Vector g = model.lambda() * theta;
  for (std::size_t i = 0; i < model.num_atoms(); ++i) {
    const DataAtom& a = model.atom(i);
    g.noalias() += a.w * model.sample_slope(i, theta) * a.x;
  }
  return g;
}

}  // namespace

std::string to_string(LossKind kind) {
  return kind == LossKind::kLeastSquares ? "least_squares" : "logistic_l2";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "least_squares" || name == "LeastSquares" || name == "lms") return LossKind::kLeastSquares;
  if (name == "logistic_l2" || name == "LogisticL2" || name == "logistic") return LossKind::kLogisticL2;
  throw ModelError("unknown model kind '" + name + "'");
}

double ObjectiveModel::sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

ObjectiveModel ObjectiveModel::create(LossKind kind, std::vector<DataAtom> atoms, double lambda,
                                      std::optional<double> radius) {
  if (atoms.empty()) throw ModelError("model has no atoms");
  const auto d = atoms.front().x.size();
  if (d == 0) throw ModelError("atoms have dimension 0");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ModelError("lambda must be finite and >= 0");
  if (kind == LossKind::kLogisticL2 && !(lambda > 0.0))
    throw ModelError("logistic model requires lambda > 0 for global strong convexity");

  double wsum = 0.0;
  double r2 = 0.0;
  for (const auto& a : atoms) {
    if (a.x.size() != d) throw ModelError("atoms have inconsistent dimensions");
    if (!a.x.allFinite() || !std::isfinite(a.y)) throw ModelError("atom has non-finite entries");
    if (!(a.w > 0.0 && a.w <= 1.0)) throw ModelError("atom weight must lie in (0, 1]");
    if (kind == LossKind::kLogisticL2 && a.y != 1.0 && a.y != -1.0)
      throw ModelError("logistic labels must be +1 or -1");
    wsum += a.w;
    r2 = std::max(r2, a.x.squaredNorm());
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw ModelError("atom weights sum to " + std::to_string(wsum) + ", not 1");
  if (radius) {
    if (*radius < 0.0) throw ModelError("radius must be >= 0");
    if (std::sqrt(r2) > *radius * (1.0 + 1e-12)) throw ModelError("atom norm exceeds declared radius");
  }

  ObjectiveModel m;
  m.kind_ = kind;
  m.d_ = static_cast<int>(d);
  m.atoms_ = std::move(atoms);
  m.lambda_ = lambda;
  m.radius_ = radius ? *radius : std::sqrt(r2);

  m.cumulative_.resize(m.atoms_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < m.atoms_.size(); ++i) {
    acc += m.atoms_[i].w;
    m.cumulative_[i] = acc / wsum;
  }
  m.cumulative_.back() = 1.0;

  m.sigma_ = Matrix::Zero(m.d_, m.d_);
  for (const auto& a : m.atoms_) m.sigma_.noalias() += a.w * a.x * a.x.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> sigma_eig(m.sigma_);
  const double sigma_min = sigma_eig.eigenvalues().minCoeff();
  const double sigma_max = sigma_eig.eigenvalues().maxCoeff();
  if (kind == LossKind::kLeastSquares && !(sigma_min + lambda > 1e-14 * std::max(1.0, sigma_max)))
    throw ModelError("least-squares second-moment matrix is not positive definite");

  m.theta_star_ = solve_optimum(m);
  m.f_star_ = m.value(m.theta_star_);

  ModelConstants& c = m.constants_;
  c.R2 = r2;
  if (kind == LossKind::kLeastSquares) {
    c.L = sigma_max + lambda;
    c.mu = sigma_min + lambda;
    c.mu_global = c.mu;
    c.L_cocoercive = r2 + lambda;
    Matrix k4 = Matrix::Zero(m.d_, m.d_);
    for (const auto& a : m.atoms_) k4.noalias() += a.w * a.x.squaredNorm() * a.x * a.x.transpose();
    if (sigma_min > 0.0) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(k4, m.sigma_);
      c.r2 = gen.eigenvalues().maxCoeff();
    } else {
      c.r2 = std::numeric_limits<double>::infinity();
    }
  } else {
    const Matrix h = exact_hessian(m, m.theta_star_);
    c.mu = Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff();
    c.mu_global = lambda;
    c.L = sigma_max / 4.0 + lambda;
    c.L_cocoercive = r2 / 4.0 + lambda;
    c.r2 = std::numeric_limits<double>::quiet_NaN();
  }
  const Vector fstar_grad = exact_gradient(m, m.theta_star_);
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < m.atoms_.size(); ++i) {
    const double e2 = (sample_gradient(m, i, m.theta_star_) - fstar_grad).squaredNorm();
    m2 += m.atoms_[i].w * e2;
    m4 += m.atoms_[i].w * e2 * e2;
  }
  c.tau2_sq = m2;
  c.tau4 = std::pow(m4, 0.25);
  return m;
}

double ObjectiveModel::value(const Vector& theta) const {
  require_dim(theta, d_, "value");
  double v = 0.5 * lambda_ * theta.squaredNorm();
  for (const auto& a : atoms_) {
    const double t = a.x.dot(theta);
    v += a.w * (kind_ == LossKind::kLeastSquares ? 0.5 * (t - a.y) * (t - a.y) : softplus(-a.y * t));
  }
  return v;
}

std::size_t ObjectiveModel::draw_atom(Stream& stream) const {
  const double u = stream.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
}

double ObjectiveModel::sample_curvature(std::size_t i, const Vector& theta) const {
  if (kind_ == LossKind::kLeastSquares) return 1.0;
  const double t = atoms_[i].y * atoms_[i].x.dot(theta);
  return sigmoid(t) * sigmoid(-t);
}

Vector exact_gradient(const ObjectiveModel& model, const Vector& theta) {
  require_dim(theta, model.dim(), "exact_gradient");
  return weighted_gradient_sum(model, theta);
}

Vector sample_gradient(const ObjectiveModel& model, std::size_t atom, const Vector& theta) {
  require_dim(theta, model.dim(), "sample_gradient");
  return model.sample_slope(atom, theta) * model.atom(atom).x + model.lambda() * theta;
}

Matrix exact_hessian(const ObjectiveModel& model, const Vector& theta) {
  require_dim(theta, model.dim(), "exact_hessian");
  const int d = model.dim();
  Matrix h = model.lambda() * Matrix::Identity(d, d);
  for (std::size_t i = 0; i < model.num_atoms(); ++i) {
    const DataAtom& a = model.atom(i);
    h.noalias() += a.w * model.sample_curvature(i, theta) * a.x * a.x.transpose();
  }
  return h;
}

Tensor3 exact_third_derivative(const ObjectiveModel& model, const Vector& theta) {
  require_dim(theta, model.dim(), "exact_third_derivative");
  const int d = model.dim();
  Tensor3 t(d);
  if (model.kind() == LossKind::kLeastSquares) return t;
  for (const auto& a : model.atoms()) {
    const double s = a.y * a.x.dot(theta);
    const double sp = ObjectiveModel::sigmoid(s);
    const double sm = ObjectiveModel::sigmoid(-s);
    const double c = a.w * sp * sm * (1.0 - 2.0 * sp) * a.y * a.y * a.y;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) t(i, j, l) += c * a.x(i) * a.x(j) * a.x(l);
  }
  return t;
}

NoiseCovariance noise_covariance(const ObjectiveModel& model, const Vector& theta) {
  require_dim(theta, model.dim(), "noise_covariance");
  const Vector mean = exact_gradient(model, theta);
  Matrix c = Matrix::Zero(model.dim(), model.dim());
  for (std::size_t i = 0; i < model.num_atoms(); ++i) {
    const Vector e = sample_gradient(model, i, theta) - mean;
    c.noalias() += model.atom(i).w * e * e.transpose();
  }
  c = 0.5 * (c + c.transpose()).eval();
  return {c, theta};
}

Vector solve_optimum(const ObjectiveModel& model) {
  const int d = model.dim();
  if (model.kind() == LossKind::kLeastSquares) {
    const Matrix a = model.second_moment() + model.lambda() * Matrix::Identity(d, d);
    Vector b = Vector::Zero(d);
    for (const auto& at : model.atoms()) b.noalias() += at.w * at.y * at.x;
    const Eigen::LDLT<Matrix> ldlt(a);
    Vector theta = ldlt.solve(b);
    // one refinement step against the exact gradient
    theta -= ldlt.solve(exact_gradient(model, theta));
    return theta;
  }

  Vector theta = Vector::Zero(d);
  double f = model.value(theta);
  for (int iter = 0; iter < 200; ++iter) {
    const Vector g = exact_gradient(model, theta);
    if (g.norm() <= 1e-12 * (1.0 + theta.norm())) return theta;
    const Matrix h = exact_hessian(model, theta);
    const Vector step = h.ldlt().solve(g);
    double t = 1.0;
    Vector next = theta - step;
    double fnext = model.value(next);
    while (fnext > f - 1e-4 * t * g.dot(step) && t > 1e-10) {
      t *= 0.5;
      next = theta - t * step;
      fnext = model.value(next);
    }
    if (next == theta) {
      // no representable progress; accept if the gradient is at rounding level
      if (g.norm() <= 1e-10 * (1.0 + theta.norm())) return theta;
      break;
    }
    theta = next;
    f = fnext;
  }
  throw ModelError("Newton iteration for the optimum did not converge in 200 iterations");
}

Vector NoiseOracle::stochastic_gradient(const Vector& theta) {
  return sample_gradient(*model_, draw(), theta);
}

AssumptionReport check_assumptions(const ObjectiveModel& model, std::uint64_t seed, int pairs) {
  AssumptionReport rep;
  const int d = model.dim();
  const auto& c = model.constants();
  rep.strongly_convex = c.mu_global > 0.0;
  Stream s(seed, 0, StreamPurpose::kTest);
  auto random_point = [&](double radius) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = 2.0 * s.uniform() - 1.0;
    return Vector(model.optimum() + radius * s.uniform() * v / std::max(v.norm(), 1e-300));
  };
  for (int p = 0; p < pairs; ++p) {
    const Vector theta = random_point(3.0);
    const Vector eta = random_point(3.0);
    const Vector exact = exact_gradient(model, theta);
    Vector avg = Vector::Zero(d);
    for (std::size_t i = 0; i < model.num_atoms(); ++i) {
      const Vector gt = sample_gradient(model, i, theta);
      avg += model.atom(i).w * gt;
      const Vector dg = gt - sample_gradient(model, i, eta);
      const Vector dt = theta - eta;
      const double slack = c.L_cocoercive * dg.dot(dt) - dg.squaredNorm();
      rep.cocoercivity_violation = (p == 0 && i == 0) ? slack : std::min(rep.cocoercivity_violation, slack);
    }
    rep.unbiasedness_residual = std::max(rep.unbiasedness_residual, (avg - exact).lpNorm<Eigen::Infinity>());
  }
  rep.notes.push_back("A5: C(theta) is a finite sum of smooth terms; constants not estimated");
  if (model.kind() == LossKind::kLogisticL2)
    rep.notes.push_back("A1 holds globally through the l2 term (mu_global = lambda)");
  return rep;
}

}  // namespace sgdlab
