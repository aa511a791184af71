// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/flow.hpp"

#include <cmath>
#include <sstream>

#include "sgdlab/chain.hpp"
#include "sgdlab/tensorops.hpp"

namespace sgdlab {

namespace {

void rk4_step(const ObjectiveModel& model, Vector& y, double h) {
  const Vector k1 = -exact_gradient(model, y);
  const Vector k2 = -exact_gradient(model, y + 0.5 * h * k1);
  const Vector k3 = -exact_gradient(model, y + 0.5 * h * k2);
  const Vector k4 = -exact_gradient(model, y + h * k3);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<Vector> rk4_path(const ObjectiveModel& model, const Vector& y0, double h, std::size_t n) {
  std::vector<Vector> out;
  out.reserve(n + 1);
  out.push_back(y0);
  Vector y = y0;
  for (std::size_t i = 0; i < n; ++i) {
    rk4_step(model, y, h);
    out.push_back(y);
  }
  return out;
}

constexpr std::size_t kMaxSteps = std::size_t{1} << 22;

}  // namespace

FlowSolution integrate_flow(const ObjectiveModel& model, const Vector& theta0, double T, double tol,
                            double h0) {
  require_dim(theta0, model.dim(), "integrate_flow");
  if (!(T > 0.0)) throw InvalidArgument("flow horizon must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("flow tolerance must be positive");
  const double h_init = h0 > 0.0 ? h0 : std::min(0.5 / model.constants().L, T / 16.0);
  // Multiple of 4 so that Simpson on every other point stays valid.
  std::size_t n = static_cast<std::size_t>(std::ceil(T / h_init / 4.0)) * 4;
  std::vector<Vector> prev = rk4_path(model, theta0, T / static_cast<double>(n), n);
  while (true) {
    if (2 * n > kMaxSteps) {
      std::ostringstream os;
      os << "gradient flow did not reach tolerance " << tol << " with " << n << " steps";
      throw ToleranceError(os.str());
    }
    const std::size_t n2 = 2 * n;
    const double h = T / static_cast<double>(n2);
    std::vector<Vector> cur = rk4_path(model, theta0, h, n2);
    double diff = 0.0;
    for (std::size_t i = 0; i <= n; ++i) diff = std::max(diff, (cur[2 * i] - prev[i]).norm());
    if (diff < tol) {
      FlowSolution s;
      s.theta0 = theta0;
      s.h = h;
      s.error_estimate = diff / 15.0;
      s.states = std::move(cur);
      s.t.resize(n2 + 1);
      for (std::size_t i = 0; i <= n2; ++i) s.t[i] = h * static_cast<double>(i);
      s.t.back() = T;
      return s;
    }
    prev = std::move(cur);
    n = n2;
  }
}

Observable Observable::identity() {
  Observable g;
  g.kind_ = Kind::kIdentity;
  g.name_ = "identity";
  return g;
}

Observable Observable::coordinate(int index) {
  if (index < 0) throw InvalidArgument("coordinate index must be non-negative");
  Observable g;
  g.kind_ = Kind::kCoordinate;
  g.index_ = index;
  g.name_ = "coordinate_" + std::to_string(index);
  return g;
}

Observable Observable::squared_distance() {
  Observable g;
  g.kind_ = Kind::kSquaredDistance;
  g.name_ = "squared_distance";
  return g;
}

Observable Observable::user(std::function<double(const Vector&)> fn, double g_star, double lipschitz,
                            std::string name) {
  if (!fn) throw InvalidArgument("user observable needs a function");
  Observable g;
  g.kind_ = Kind::kUser;
  g.fn_ = std::move(fn);
  g.g_star_ = g_star;
  g.lipschitz_ = lipschitz;
  g.name_ = std::move(name);
  return g;
}

Vector Observable::centered(const ObjectiveModel& model, const Vector& theta) const {
  const Vector& ts = model.optimum();
  switch (kind_) {
    case Kind::kIdentity:
      return theta - ts;
    case Kind::kCoordinate:
      if (index_ >= model.dim()) throw DimensionError("coordinate index out of range");
      return Vector::Constant(1, theta(index_) - ts(index_));
    case Kind::kSquaredDistance:
      return Vector::Constant(1, (theta - ts).squaredNorm());
    case Kind::kUser:
      return Vector::Constant(1, fn_(theta) - g_star_);
  }
  return {};
}

double Observable::centered_scalar(const ObjectiveModel& model, const Vector& theta) const {
  const Vector& ts = model.optimum();
  switch (kind_) {
    case Kind::kCoordinate:
      return theta(index_) - ts(index_);
    case Kind::kSquaredDistance:
      return (theta - ts).squaredNorm();
    case Kind::kUser:
      return fn_(theta) - g_star_;
    case Kind::kIdentity:
      break;
  }
  throw InvalidArgument("identity observable is vector-valued");
}

double Observable::tail_bound(double r0, double mu, double T) const {
  if (kind_ == Kind::kSquaredDistance) return r0 * r0 * std::exp(-2.0 * mu * T) / (2.0 * mu);
  const double lip = kind_ == Kind::kUser ? lipschitz_ : 1.0;
  return lip * r0 * std::exp(-mu * T) / mu;
}

namespace {

/// Composite Simpson over every `stride`-th grid point (grid has n+1 points,
/// n divisible by 2·stride).
Vector simpson(const std::vector<Vector>& f, double h, std::size_t stride) {
  const std::size_t n = (f.size() - 1) / stride;
  Vector acc = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f[i * stride];
  return acc * (h * static_cast<double>(stride) / 3.0);
}

}  // namespace

PoissonValue poisson_h(const ObjectiveModel& model, const Observable& g, const Vector& theta, double tol) {
  require_dim(theta, model.dim(), "poisson_h");
  if (!(tol > 0.0)) throw InvalidArgument("quadrature tolerance must be positive");
  PoissonValue out;
  out.g = g.name();
  out.theta = theta;
  const double r0 = (theta - model.optimum()).norm();
  const int m = g.outputs(model.dim());
  if (r0 == 0.0) {
    out.value = Vector::Zero(m);
    return out;
  }
  const double mu = model.constants().mu_global;
  // Smallest T with tail bound < tol/10, by doubling then bisection.
  double hi = 1.0;
  while (g.tail_bound(r0, mu, hi) >= tol / 10.0) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g.tail_bound(r0, mu, mid) >= tol / 10.0 ? lo : hi) = mid;
  }
  const double T = hi;
  out.horizon = T;

  double h0 = 0.0;
  std::optional<Vector> last;
  for (int attempt = 0; attempt < 12; ++attempt) {
    // RK4 stalls near 1e-13 relative accuracy from rounding, so the flow
    // tolerance is floored there.
    const double flow_tol = std::max(tol / (10.0 * std::max(1.0, T)), 1e-13 * (1.0 + r0));
    const FlowSolution flow = integrate_flow(model, theta, T, flow_tol, h0);
    std::vector<Vector> vals;
    vals.reserve(flow.states.size());
    for (const auto& s : flow.states) vals.push_back(g.centered(model, s));
    const Vector fine = simpson(vals, flow.h, 1);
    const Vector coarse = simpson(vals, flow.h, 2);
    const double err = (fine - coarse).norm() / 15.0;
    const double change = last ? (fine - *last).norm() : err;
    if (std::max(err, change) < tol) {
      out.value = fine;
      out.error_estimate = std::max(err, change) + g.tail_bound(r0, mu, T);
      return out;
    }
    last = fine;
    h0 = flow.h / 2.0;
  }
  throw ToleranceError("Poisson quadrature did not converge");
}

Matrix h_id_gradient_at_opt(const ObjectiveModel& model) {
  const int d = model.dim();
  return exact_hessian(model, model.optimum()).ldlt().solve(Matrix::Identity(d, d));
}

Matrix h_id_gradient_fd(const ObjectiveModel& model, double step, double tol) {
  const int d = model.dim();
  Matrix j(d, d);
  const Observable id = Observable::identity();
  for (int c = 0; c < d; ++c) {
    Vector up = model.optimum(), dn = model.optimum();
    up(c) += step;
    dn(c) -= step;
    j.col(c) = (poisson_h(model, id, up, tol).value - poisson_h(model, id, dn, tol).value) / (2.0 * step);
  }
  return j;
}

GeneratorCheck generator_identity_check(const ObjectiveModel& model, const Observable& g,
                                        const Vector& theta, const std::vector<double>& times,
                                        double dt, double tol) {
  if (g.outputs(model.dim()) != 1) throw InvalidArgument("generator check needs a scalar g");
  GeneratorCheck out;
  const double flow_tol = std::max(tol, 1e-13 * (1.0 + (theta - model.optimum()).norm()));
  auto point = [&](double t) -> Vector {
    if (t <= 0.0) return theta;
    return integrate_flow(model, theta, t, flow_tol).states.back();
  };
  auto hval = [&](double t) { return poisson_h(model, g, point(t), tol).value(0); };
  for (double t : times) {
    if (t < 2.0 * dt) throw InvalidArgument("generator check times must exceed 2·dt");
    const double deriv =
        (-hval(t + 2 * dt) + 8.0 * hval(t + dt) - 8.0 * hval(t - dt) + hval(t - 2 * dt)) / (12.0 * dt);
    const double gv = g.centered(model, point(t))(0);
    out.t.push_back(t);
    out.residual.push_back(std::abs(deriv + gv));
    out.max_residual = std::max(out.max_residual, out.residual.back());
  }
  return out;
}

Matrix poisson_hessian_at_opt(const ObjectiveModel& model, const Observable& g, double step, double tol) {
  const int d = model.dim();
  if (g.outputs(d) != 1) throw InvalidArgument("poisson_hessian_at_opt needs a scalar g");
  const Vector& ts = model.optimum();
  if (model.kind() == LossKind::kLeastSquares) {
    const Matrix h = exact_hessian(model, ts);
    if (g.kind() == Observable::Kind::kSquaredDistance)
      return 2.0 * operator_A(h).apply(Matrix::Identity(d, d));
    if (g.kind() == Observable::Kind::kCoordinate) return Matrix::Zero(d, d);
  }
  auto hv = [&](const Vector& th) { return poisson_h(model, g, th, tol).value(0); };
  auto second = [&](double s) {
    Matrix m(d, d);
    const double h0 = hv(ts);
    for (int a = 0; a < d; ++a) {
      const Vector ea = Vector::Unit(d, a) * s;
      m(a, a) = (hv(ts + ea) - 2.0 * h0 + hv(ts - ea)) / (s * s);
      for (int b = 0; b < a; ++b) {
        const Vector eb = Vector::Unit(d, b) * s;
        m(a, b) = m(b, a) =
            (hv(ts + ea + eb) - hv(ts + ea - eb) - hv(ts - ea + eb) + hv(ts - ea - eb)) / (4.0 * s * s);
      }
    }
    return m;
  };
  return (4.0 * second(step / 2.0) - second(step)) / 3.0;
}

namespace {

/// h_g in closed form where available (least squares), else by quadrature.
double h_scalar(const ObjectiveModel& model, const Observable& g, const Vector& theta,
                const std::optional<Matrix>& sq_form, const std::optional<Matrix>& h_inv) {
  const Vector phi = theta - model.optimum();
  if (sq_form) return phi.dot(*sq_form * phi);
  if (h_inv) return (h_inv->row(0) * phi)(0);
  return poisson_h(model, g, theta, 1e-10).value(0);
}

}  // namespace

WeakErrorReport weak_error_check(const ObjectiveModel& model, const Observable& g,
                                 const std::vector<double>& gammas, const Vector& theta0,
                                 std::uint64_t horizon, std::uint64_t seed, const WeakErrorOptions& opt) {
  const int d = model.dim();
  if (g.outputs(d) != 1) throw InvalidArgument("weak_error_check needs a scalar g");
  require_dim(theta0, d, "weak_error_check");
  if (gammas.empty()) throw InvalidArgument("empty step-size grid");
  if (opt.replicas == 0 || opt.batches == 0 || opt.replicas * opt.batches < 50)
    throw InvalidArgument("weak_error_check needs at least 50 batches in total");
  for (double gm : gammas) check_step_size(model, gm);

  const Vector& ts = model.optimum();
  const Matrix hess = exact_hessian(model, ts);
  std::optional<Matrix> sq_form, h_inv;
  if (model.kind() == LossKind::kLeastSquares) {
    if (g.kind() == Observable::Kind::kSquaredDistance) sq_form = operator_A(hess).apply(Matrix::Identity(d, d));
    if (g.kind() == Observable::Kind::kCoordinate) {
      if (g.index() >= d) throw DimensionError("coordinate index out of range");
      const Matrix inv = hess.ldlt().solve(Matrix::Identity(d, d));
      h_inv = Matrix(inv.row(g.index()));
    }
  }
  const Matrix hg2 = poisson_hessian_at_opt(model, g);
  const double trace_term = (hg2 * noise_covariance(model, ts).C).trace();
  const double h0 = h_scalar(model, g, theta0, sq_form, h_inv);
  const double gmin = *std::min_element(gammas.begin(), gammas.end());

  WeakErrorReport rep;
  rep.g = g.name();
  std::vector<double> xs, ys, ses;
  for (double gamma : gammas) {
    const std::uint64_t k = opt.equal_time
                                ? static_cast<std::uint64_t>(std::llround(static_cast<double>(horizon) * gmin / gamma))
                                : horizon;
    const std::uint64_t batch = k / opt.batches;
    if (batch == 0) throw NoiseFloorError("weak_error_check: horizon shorter than the batch count");
    std::vector<BatchMeans> bm(opt.replicas, BatchMeans(1, batch));
    std::vector<double> h_end(opt.replicas);
    for_each_replica(opt.replicas, opt.exec, [&](std::size_t r) {
      Stream stream(seed, r, StreamPurpose::kChain);
      ChainState s = make_chain_state(theta0, gamma);
      const DivergenceGuard guard(model, theta0);
      double v[1];
      for (std::uint64_t i = 1; i <= batch * opt.batches; ++i) {
        apply_step(s, model, model.draw_atom(stream), gamma);
        v[0] = g.centered_scalar(model, s.theta);
        bm[r].add(v);
        if (i % 65536 == 0) guard.check(s.theta, s.k);
      }
      apply_step(s, model, model.draw_atom(stream), gamma);
      guard.check(s.theta, s.k);
      h_end[r] = h_scalar(model, g, s.theta, sq_form, h_inv);
    });
    BatchMeans pooled(1, batch);
    for (const auto& b : bm) pooled.absorb(b);
    double h_mean = 0.0;
    for (double x : h_end) h_mean += x;
    h_mean /= static_cast<double>(opt.replicas);

    WeakErrorPoint p;
    p.gamma = gamma;
    p.horizon = batch * opt.batches;
    p.average = pooled.summary(0);
    p.correction = (h0 - h_mean) / (static_cast<double>(p.horizon) * gamma);
    p.leading = 0.5 * gamma * trace_term;
    p.residual = {p.average.mean - p.correction - p.leading, p.average.se};
    rep.points.push_back(p);
    xs.push_back(gamma);
    ys.push_back(p.residual.mean);
    ses.push_back(p.residual.se);
  }
  try {
    rep.fit = fit_loglog(xs, ys, ses, 3.0, 4, opt.min_span);
  } catch (const NoiseFloorError& e) {
    rep.note = e.what();
  }
  return rep;
}

}  // namespace sgdlab
