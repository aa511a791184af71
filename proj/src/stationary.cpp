// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/stationary.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sgdlab/tensorops.hpp"

namespace sgdlab {

double contraction_rate(const ObjectiveModel& model, double gamma) {
  const auto& c = model.constants();
  return 1.0 - 2.0 * c.mu_global * gamma * (1.0 - gamma * c.L / 2.0);
}

double contraction_rate_alt(const ObjectiveModel& model, double gamma) {
  return std::sqrt(1.0 - gamma * model.constants().mu_global);
}

std::uint64_t minimum_burn_in(const ObjectiveModel& model, double gamma, double tol) {
  check_step_size(model, gamma);
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("burn-in tolerance must lie in (0, 1)");
  const double rho = contraction_rate(model, gamma);
  if (rho <= 0.0) return 1;
  return static_cast<std::uint64_t>(std::ceil(std::log(tol) / std::log(rho)));
}

double second_moment_bound(const ObjectiveModel& model, double gamma) {
  const auto& c = model.constants();
  if (gamma * c.L >= 1.0) return std::numeric_limits<double>::infinity();
  return gamma * c.tau2_sq / (c.mu_global * (1.0 - gamma * c.L));
}

namespace {

/// Linearized companion chain used as a control variate.
struct LinearChain {
  Matrix h;
  std::vector<Vector> g_star;  // per-atom gradients at θ*
  Vector theta_star;
  Vector tmp;

  explicit LinearChain(const ObjectiveModel& model)
      : h(exact_hessian(model, model.optimum())), theta_star(model.optimum()), tmp(model.dim()) {
    for (std::size_t i = 0; i < model.num_atoms(); ++i)
      g_star.push_back(sample_gradient(model, i, model.optimum()));
  }

  void step(Vector& eta, std::size_t atom, double gamma) {
    tmp.noalias() = h * (eta - theta_star);
    tmp += g_star[atom];
    eta.noalias() -= gamma * tmp;
  }
};

constexpr std::uint64_t kGuardStride = 1 << 16;

void check_replicas(std::size_t replicas) {
  if (replicas == 0) throw InvalidArgument("replicas must be at least 1");
}

}  // namespace

StationaryEstimate estimate_stationary(const ObjectiveModel& model, double gamma, std::uint64_t seed,
                                       std::uint64_t burn_in, std::uint64_t samples,
                                       const StationaryOptions& opt) {
  check_step_size(model, gamma);
  check_replicas(opt.replicas);
  const std::uint64_t need = minimum_burn_in(model, gamma);
  if (burn_in < need) {
    std::ostringstream os;
    os << "burn-in " << burn_in << " below the contraction minimum " << need;
    throw InvalidArgument(os.str());
  }
  if (opt.batches == 0 || opt.replicas * opt.batches < 50)
    throw InvalidArgument("batch means needs at least 50 batches in total");
  const std::uint64_t batch_size = samples / opt.batches;
  if (batch_size == 0) throw NoiseFloorError("fewer samples than batches");

  const int d = model.dim();
  const Vector theta0 = opt.theta0 ? *opt.theta0 : model.optimum();
  require_dim(theta0, d, "estimate_stationary");
  const Vector& ts = model.optimum();
  const double fstar = model.optimal_value();
  const std::size_t nmain = static_cast<std::size_t>(d + d * d + 2);
  const std::size_t nc = static_cast<std::size_t>(d * d);
  const std::uint64_t stride = opt.cbar_stride;
  const bool track_c = stride > 0 && samples / stride >= opt.batches;
  const std::uint64_t cbar_batch = track_c ? std::max<std::uint64_t>(1, samples / stride / opt.batches) : 1;

  std::vector<BatchMeans> main(opt.replicas, BatchMeans(nmain, batch_size));
  std::vector<BatchMeans> cov(opt.replicas, BatchMeans(nc, cbar_batch));

  for_each_replica(opt.replicas, opt.exec, [&](std::size_t r) {
    Stream stream(seed, r, StreamPurpose::kChain);
    ChainState s = make_chain_state(theta0, gamma);
    const DivergenceGuard guard(model, theta0);
    std::optional<LinearChain> lin;
    Vector eta = theta0;
    if (opt.control_variate) lin.emplace(model);

    for (std::uint64_t t = 0; t < burn_in; ++t) {
      const std::size_t i = model.draw_atom(stream);
      if (lin) lin->step(eta, i, gamma);
      apply_step(s, model, i, gamma);
      if (t % kGuardStride == 0) guard.check(s.theta, s.k);
    }
    guard.check(s.theta, s.k);

    std::vector<double> buf(nmain);
    std::vector<double> cbuf(nc);
    Vector phi(d);
    for (std::uint64_t t = 0; t < samples; ++t) {
      const std::size_t i = model.draw_atom(stream);
      if (lin) lin->step(eta, i, gamma);
      apply_step(s, model, i, gamma);
      phi = s.theta - ts;
      for (int a = 0; a < d; ++a) buf[a] = lin ? s.theta(a) - eta(a) : phi(a);
      for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) buf[d + a + b * d] = phi(a) * phi(b);
      const double dist2 = phi.squaredNorm();
      buf[nmain - 2] = dist2 * dist2;
      buf[nmain - 1] = model.value(s.theta) - fstar;
      main[r].add(buf);
      if (track_c && t % stride == 0) {
        const Matrix c = noise_covariance(model, s.theta).C;
        std::copy(c.data(), c.data() + nc, cbuf.begin());
        cov[r].add(cbuf);
      }
      if (t % kGuardStride == 0) guard.check(s.theta, s.k);
    }
    guard.check(s.theta, s.k);
  });

  BatchMeans pooled(nmain, batch_size);
  BatchMeans pooled_c(nc, cbar_batch);
  for (std::size_t r = 0; r < opt.replicas; ++r) {
    pooled.absorb(main[r]);
    pooled_c.absorb(cov[r]);
  }
  const auto sm = pooled.summary();

  StationaryEstimate e;
  e.gamma = gamma;
  e.burn_in = burn_in;
  e.samples = samples;
  e.replicas = opt.replicas;
  e.batches = pooled.num_batches();
  e.control_variate = opt.control_variate;
  e.mean.resize(d);
  e.mean_se.resize(d);
  for (int a = 0; a < d; ++a) {
    e.mean(a) = ts(a) + sm[a].mean;
    e.mean_se(a) = sm[a].se;
  }
  e.second_moment.resize(d, d);
  e.second_moment_se.resize(d, d);
  for (int b = 0; b < d; ++b)
    for (int a = 0; a < d; ++a) {
      e.second_moment(a, b) = sm[d + a + b * d].mean;
      e.second_moment_se(a, b) = sm[d + a + b * d].se;
    }
  std::vector<double> tr(nmain, 0.0);
  for (int a = 0; a < d; ++a) tr[d + a + a * d] = 1.0;
  e.trace_second_moment = pooled.linear(tr);
  e.fourth_moment = sm[nmain - 2];
  e.fgap = sm[nmain - 1];

  e.cbar = Matrix::Zero(d, d);
  e.cbar_se = Matrix::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
  if (track_c && pooled_c.num_batches() >= 2) {
    const auto cs = pooled_c.summary();
    for (std::size_t k = 0; k < nc; ++k) {
      e.cbar.data()[k] = cs[k].mean;
      e.cbar_se.data()[k] = cs[k].se;
    }
  }

  Vector bias(d);
  for (int a = 0; a < d; ++a) bias(a) = sm[a].mean;
  e.bias_norm = {bias.norm(), e.mean_se.norm()};

  if (opt.target_se > 0.0 && e.mean_se.maxCoeff() > opt.target_se) {
    std::ostringstream os;
    os << "mean SE " << e.mean_se.maxCoeff() << " exceeds requested " << opt.target_se;
    throw NoiseFloorError(os.str());
  }
  return e;
}

std::size_t CoupledBias::index_of(double gamma) const {
  for (std::size_t j = 0; j < gammas_.size(); ++j)
    if (std::abs(gammas_[j] - gamma) <= 1e-12 * gamma) return j;
  throw InvalidArgument("step size not part of the coupled run");
}

Vector CoupledBias::combination(std::span<const double> weights, Vector* se) const {
  if (weights.size() != gammas_.size()) throw DimensionError("combination: one weight per step size");
  Vector m(d_);
  if (se) se->resize(d_);
  std::vector<double> coeffs(batches_.channels(), 0.0);
  for (int c = 0; c < d_; ++c) {
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    for (std::size_t j = 0; j < gammas_.size(); ++j) coeffs[j * d_ + c] = weights[j];
    const MeanWithError r = batches_.linear(coeffs);
    m(c) = r.mean;
    if (se) (*se)(c) = r.se;
  }
  return m;
}

MeanWithError CoupledBias::combination_norm(std::span<const double> weights) const {
  Vector se;
  const Vector m = combination(weights, &se);
  const double n = m.norm();
  if (n == 0.0) return {0.0, se.norm()};
  const Vector u = m / n;
  std::vector<double> coeffs(batches_.channels(), 0.0);
  for (std::size_t j = 0; j < gammas_.size(); ++j)
    for (int c = 0; c < d_; ++c) coeffs[j * d_ + c] = weights[j] * u(c);
  return {n, batches_.linear(coeffs).se};
}

Vector CoupledBias::bias(std::size_t j, Vector* se) const {
  std::vector<double> w(gammas_.size(), 0.0);
  w.at(j) = 1.0;
  return combination(w, se);
}

CoupledBias estimate_coupled_bias(const ObjectiveModel& model, std::vector<double> gammas,
                                  std::uint64_t seed, std::uint64_t burn_in, std::uint64_t samples,
                                  std::size_t replicas, std::size_t batches, const Execution& exec) {
  check_replicas(replicas);
  if (gammas.empty()) throw InvalidArgument("no step sizes");
  std::sort(gammas.begin(), gammas.end());
  std::uint64_t need = 0;
  for (double g : gammas) need = std::max(need, minimum_burn_in(model, g));
  if (burn_in == 0) burn_in = need;
  if (burn_in < need) throw InvalidArgument("burn-in below the contraction minimum");
  if (batches == 0 || replicas * batches < 50)
    throw InvalidArgument("batch means needs at least 50 batches in total");
  const std::uint64_t batch_size = samples / batches;
  if (batch_size == 0) throw NoiseFloorError("fewer samples than batches");

  const int d = model.dim();
  const std::size_t nj = gammas.size();
  const std::size_t nch = nj * static_cast<std::size_t>(d);
  const Vector& ts = model.optimum();
  const double lambda = model.lambda();
  std::vector<BatchMeans> per(replicas, BatchMeans(nch, batch_size));

  for_each_replica(replicas, exec, [&](std::size_t r) {
    Stream stream(seed, r, StreamPurpose::kChain);
    LinearChain lin(model);
    std::vector<Vector> theta(nj, ts), eta(nj, ts);
    const DivergenceGuard guard(model, ts);
    std::vector<double> buf(nch);
    const std::uint64_t total = burn_in + samples;
    for (std::uint64_t t = 0; t < total; ++t) {
      const std::size_t i = model.draw_atom(stream);
      const DataAtom& a = model.atom(i);
      for (std::size_t j = 0; j < nj; ++j) {
        const double g = gammas[j];
        lin.step(eta[j], i, g);
        const double slope = model.sample_slope(i, theta[j]);
        if (lambda != 0.0) theta[j] *= (1.0 - g * lambda);
        theta[j].noalias() -= (g * slope) * a.x;
      }
      if (t % kGuardStride == 0)
        for (const auto& th : theta) guard.check(th, t);
      if (t < burn_in) continue;
      for (std::size_t j = 0; j < nj; ++j)
        for (int c = 0; c < d; ++c) buf[j * d + c] = theta[j](c) - eta[j](c);
      per[r].add(buf);
    }
    for (const auto& th : theta) guard.check(th, total);
  });

  BatchMeans pooled(nch, batch_size);
  for (const auto& b : per) pooled.absorb(b);
  return CoupledBias(std::move(gammas), d, std::move(pooled));
}

BiasScaling fit_bias_scaling(const ObjectiveModel& model, const std::vector<double>& gammas,
                             std::uint64_t seed, const BiasScalingOptions& opt) {
  if (gammas.empty()) throw InvalidArgument("empty step-size grid");
  const double limit = 2.0 / model.constants().L;
  std::vector<double> all;
  for (double g : gammas) {
    check_step_size(model, g);
    check_step_size(model, 2.0 * g);
    for (double m : {1.0, 2.0, 4.0})
      if (m * g < limit) all.push_back(m * g);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
            all.end());

  const CoupledBias cb =
      estimate_coupled_bias(model, all, seed, opt.burn_in, opt.samples, opt.replicas, opt.batches, opt.exec);

  BiasScaling out;
  out.delta = model.kind() == LossKind::kLogisticL2 ? bias_constant_delta(model) : Vector(Vector::Zero(model.dim()));
  std::vector<double> xs, ys, ses, y2, se2;
  for (double g : gammas) {
    BiasPoint p;
    p.gamma = g;
    std::vector<double> w(all.size(), 0.0);
    w[cb.index_of(g)] = 1.0;
    p.single = cb.combination_norm(w);
    w[cb.index_of(g)] = 2.0;
    w[cb.index_of(2.0 * g)] = -1.0;
    p.rr2 = cb.combination_norm(w);
    if (4.0 * g < limit) {
      std::fill(w.begin(), w.end(), 0.0);
      w[cb.index_of(g)] = 8.0 / 3.0;
      w[cb.index_of(2.0 * g)] = -2.0;
      w[cb.index_of(4.0 * g)] = 1.0 / 3.0;
      p.rr3 = cb.combination_norm(w);
    }
    xs.push_back(g);
    ys.push_back(p.single.mean);
    ses.push_back(p.single.se);
    y2.push_back(p.rr2.mean);
    se2.push_back(p.rr2.se);
    out.points.push_back(p);
  }
  try {
    out.single_fit = fit_loglog(xs, ys, ses, 3.0, 4, opt.min_span);
  } catch (const NoiseFloorError& e) {
    out.single_note = e.what();
  }
  try {
    out.rr2_fit = fit_loglog(xs, y2, se2, 3.0, 4, opt.min_span);
  } catch (const NoiseFloorError& e) {
    out.rr2_note = e.what();
  }
  return out;
}

KScaling fit_k_scaling(const ObjectiveModel& model, double gamma, const Vector& theta0,
                       const std::vector<std::uint64_t>& k_grid, std::uint64_t seed,
                       const KScalingOptions& opt) {
  check_step_size(model, gamma);
  check_replicas(opt.replicas);
  require_dim(theta0, model.dim(), "fit_k_scaling");
  if (k_grid.size() < 3) throw InvalidArgument("k grid needs at least three points");
  for (std::size_t i = 0; i < k_grid.size(); ++i)
    if (k_grid[i] == 0 || (i > 0 && k_grid[i] <= k_grid[i - 1]))
      throw InvalidArgument("k grid must be positive and strictly increasing");
  if (static_cast<double>(k_grid.back()) < 10.0 * static_cast<double>(k_grid.front()) * (1.0 - 1e-12))
    throw InvalidArgument("k grid must span at least one decade");

  const int d = model.dim();
  const bool quadratic = model.kind() == LossKind::kLeastSquares;
  Vector ref;
  if (opt.reference) {
    ref = *opt.reference;
  } else if (quadratic) {
    ref = model.optimum();
  } else {
    const CoupledBias cb = estimate_coupled_bias(model, {gamma}, splitmix64(seed ^ 0x7265665fULL), 0,
                                                 200000, 50, 1, opt.exec);
    ref = model.optimum() + cb.bias(0);
  }
  require_dim(ref, d, "fit_k_scaling reference");

  const std::uint64_t burn_in = opt.burn_in ? opt.burn_in : minimum_burn_in(model, gamma);
  const std::uint64_t horizon = k_grid.back();
  const std::size_t nk = k_grid.size();
  const std::size_t R = opt.replicas;
  std::vector<Vector> err(R * nk);

  for_each_replica(R, opt.exec, [&](std::size_t r) {
    Vector start = theta0;
    if (opt.start == StartMode::kStationary) {
      Stream bs(seed, r, StreamPurpose::kBurnIn);
      ChainState b = make_chain_state(theta0, gamma);
      for (std::uint64_t t = 0; t < burn_in; ++t) apply_step(b, model, model.draw_atom(bs), gamma);
      DivergenceGuard(model, theta0).check(b.theta, b.k);
      start = b.theta;
    }
    Stream stream(seed, r, StreamPurpose::kChain);
    ChainState s = make_chain_state(start, gamma);
    const DivergenceGuard guard(model, start);
    std::size_t next = 0;
    while (s.k < horizon) {
      apply_step(s, model, model.draw_atom(stream), gamma);
      if (s.k % kGuardStride == 0) guard.check(s.theta, s.k);
      if (s.k == k_grid[next]) err[r * nk + next++] = s.avg - ref;
    }
    guard.check(s.theta, s.k);
  });

  KScaling out;
  out.k = k_grid;
  const Vector ts = model.optimum();
  Matrix sigma_inv;
  out.predicted_bias = out.predicted_variance = out.predicted_second_order =
      std::numeric_limits<double>::quiet_NaN();
  Vector predicted_bias_vec;
  if (quadratic) {
    sigma_inv = model.second_moment().ldlt().solve(Matrix::Identity(d, d));
    predicted_bias_vec = sigma_inv * (theta0 - ts) / gamma;
  }
  out.direction = Vector::Unit(d, 0);
  if (quadratic && predicted_bias_vec.norm() > 0.0) out.direction = predicted_bias_vec.normalized();

  std::vector<double> kd, proj, proj_se, mse, mse_se;
  const double rn = static_cast<double>(R);
  for (std::size_t j = 0; j < nk; ++j) {
    Vector mean = Vector::Zero(d), m2 = Vector::Zero(d);
    std::vector<double> p(R), q(R);
    for (std::size_t r = 0; r < R; ++r) {
      const Vector& e = err[r * nk + j];
      mean += e;
      p[r] = out.direction.dot(e);
      q[r] = e.squaredNorm();
    }
    mean /= rn;
    for (std::size_t r = 0; r < R; ++r) m2 += (err[r * nk + j] - mean).cwiseAbs2();
    Vector se = (R > 1) ? Vector((m2 / (rn - 1.0) / rn).cwiseSqrt()) : Vector(Vector::Zero(d));
    out.mean_error.push_back(mean);
    out.mean_error_se.push_back(se);
    const MeanWithError pm = R > 1 ? mean_and_se(p) : MeanWithError{p[0], 0.0};
    const MeanWithError qm = R > 1 ? mean_and_se(q) : MeanWithError{q[0], 0.0};
    out.mse.push_back(qm);
    kd.push_back(static_cast<double>(k_grid[j]));
    proj.push_back(pm.mean);
    proj_se.push_back(pm.se);
    mse.push_back(qm.mean);
    mse_se.push_back(qm.se);
  }
  out.bias_fit = fit_inverse_powers(kd, proj, proj_se);
  out.mse_fit = fit_inverse_powers(kd, mse, mse_se);

  if (quadratic) {
    out.predicted_bias = opt.start == StartMode::kFixed ? out.direction.dot(predicted_bias_vec) : 0.0;
    if (model.lambda() == 0.0 && gamma <= 1.0 / model.constants().r2) {
      const Vector phi_start = opt.start == StartMode::kFixed ? theta0 : ts;
      const QuadraticErrorExpansion ex = quadratic_error_expansion(model, gamma, phi_start);
      out.predicted_variance = ex.variance.trace();
      if (opt.start == StartMode::kFixed) {
        out.predicted_second_order = ex.second_order.trace();
      } else {
        // Ω[φ₀φ₀ᵀ − M] averages to zero under π_γ.
        const Matrix& m = ex.stationary_second_moment;
        const Matrix s2 = sigma_inv * sigma_inv;
        out.predicted_second_order = -(s2 * m + m * s2).trace() / (gamma * gamma);
      }
    }
  }
  return out;
}

double CouplingResult::worst_excess(double sigmas, double rel_slack) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k.size(); ++i)
    worst = std::max(worst, distance[i] - bound[i] - sigmas * se[i] - rel_slack * bound[i]);
  return worst;
}

CouplingResult coupling_contraction(const ObjectiveModel& model, double gamma, const Vector& theta0_a,
                                    const Vector& theta0_b, std::size_t replicas,
                                    std::uint64_t horizon, std::uint64_t seed, const Execution& exec) {
  check_step_size(model, gamma);
  check_replicas(replicas);
  require_dim(theta0_a, model.dim(), "coupling_contraction");
  require_dim(theta0_b, model.dim(), "coupling_contraction");
  const std::size_t nk = static_cast<std::size_t>(horizon) + 1;
  std::vector<double> dist(replicas * nk);

  for_each_replica(replicas, exec, [&](std::size_t r) {
    Stream stream(seed, r, StreamPurpose::kChain);
    ChainState a = make_chain_state(theta0_a, gamma);
    ChainState b = make_chain_state(theta0_b, gamma);
    const DivergenceGuard ga(model, theta0_a), gb(model, theta0_b);
    dist[r * nk] = (a.theta - b.theta).squaredNorm();
    for (std::uint64_t k = 1; k <= horizon; ++k) {
      const std::size_t i = model.draw_atom(stream);
      apply_step(a, model, i, gamma);
      apply_step(b, model, i, gamma);
      dist[r * nk + k] = (a.theta - b.theta).squaredNorm();
    }
    ga.check(a.theta, a.k);
    gb.check(b.theta, b.k);
  });

  CouplingResult out;
  out.rate = contraction_rate(model, gamma);
  out.rate_alt = 1.0 - gamma * model.constants().mu_global;
  const double d0 = (theta0_a - theta0_b).squaredNorm();
  std::vector<double> col(replicas);
  for (std::size_t k = 0; k < nk; ++k) {
    for (std::size_t r = 0; r < replicas; ++r) col[r] = dist[r * nk + k];
    const MeanWithError m = replicas > 1 ? mean_and_se(col) : MeanWithError{col[0], 0.0};
    out.k.push_back(k);
    out.distance.push_back(m.mean);
    out.se.push_back(m.se);
    out.bound.push_back(std::pow(out.rate, static_cast<double>(k)) * d0);
    out.bound_alt.push_back(std::pow(out.rate_alt, static_cast<double>(k)) * d0);
  }
  return out;
}

MomentGrowth moment_growth_check(const ObjectiveModel& model, const std::vector<double>& gammas,
                                 int p, std::uint64_t seed, std::uint64_t samples,
                                 const StationaryOptions& options, double min_span) {
  if (p != 1 && p != 2) throw InvalidArgument("moment order p must be 1 or 2");
  MomentGrowth out;
  out.p = p;
  out.gammas = gammas;
  std::vector<double> ys, ses;
  for (double g : gammas) {
    const StationaryEstimate e =
        estimate_stationary(model, g, seed, minimum_burn_in(model, g), samples, options);
    const MeanWithError m = p == 1 ? e.trace_second_moment : e.fourth_moment;
    out.moments.push_back(m);
    out.bound.push_back(p == 1 ? second_moment_bound(model, g) : std::numeric_limits<double>::quiet_NaN());
    ys.push_back(m.mean);
    ses.push_back(m.se);
  }
  try {
    out.fit = fit_loglog(gammas, ys, ses, 3.0, 4, min_span);
  } catch (const NoiseFloorError& e) {
    out.note = e.what();
  }
  return out;
}

}  // namespace sgdlab
