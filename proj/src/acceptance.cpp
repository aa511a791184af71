// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sgdlab/flow.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/stationary.hpp"
#include "sgdlab/tensorops.hpp"

namespace sgdlab {

std::string to_string(Status s) {
  switch (s) {
    case Status::kPass: return "PASS";
    case Status::kFail: return "FAIL";
    case Status::kSkip: return "SKIP";
  }
  return "?";
}

namespace {

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// random instances for the operator suite

double unit(Stream& s) { return 2.0 * s.uniform() - 1.0; }

Matrix random_matrix(Stream& s, int rows, int cols) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = unit(s);
  return m;
}

Matrix random_symmetric(Stream& s, int d) {
  const Matrix m = random_matrix(s, d, d);
  return 0.5 * (m + m.transpose());
}

Matrix random_spd(Stream& s, int d) {
  const Matrix b = random_matrix(s, d, d);
  return b * b.transpose() + 0.2 * Matrix::Identity(d, d);
}

ObjectiveModel random_least_squares(Stream& s, int d) {
  const int n = d + 2;
  std::vector<DataAtom> atoms(n);
  std::vector<double> w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += (w[i] = 0.2 + s.uniform());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    atoms[i].x = random_matrix(s, d, 1);
    atoms[i].y = unit(s);
    atoms[i].w = i + 1 < n ? w[i] / total : 1.0 - acc;
    acc += atoms[i].w;
  }
  return ObjectiveModel::create(LossKind::kLeastSquares, std::move(atoms));
}

double rel(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

struct Tracker {
  std::vector<OperatorCheck> checks;
  void record(const std::string& name, double err, double tol) {
    for (auto& c : checks) {
      if (c.name == name) {
        c.max_error = std::max(c.max_error, std::isnan(err) ? INFINITY : err);
        ++c.instances;
        return;
      }
    }
    checks.push_back({name, std::isnan(err) ? INFINITY : err, tol, 1});
  }
};

void operator_instance(Tracker& t, Stream& s) {
  const int d = 1 + static_cast<int>(s.uniform() * 4.0);
  const Matrix m = random_matrix(s, d, d);
  const Matrix n = random_matrix(s, d, d);
  const Matrix p = random_matrix(s, d, d);
  const Matrix q = random_matrix(s, d, d);

  // kron_apply against the vec identity
  t.record("kron_vec", (vec(kron_apply(m, n, p)) - kronecker(n.transpose(), m) * vec(p)).norm() /
                           std::max(1.0, kron_apply(m, n, p).norm()),
           1e-12);

  // linearity and materialization of a generic two-term operator
  MatrixOperator op = MatrixOperator::kron(m, n);
  op.add_term(-0.7, n, m);
  const double a = unit(s), b = unit(s);
  t.record("linearity", rel(op.apply(a * p + b * q), a * op.apply(p) + b * op.apply(q)), 1e-12);
  t.record("materialize", rel(unvec(op.materialize() * vec(p), d), op.apply(p)), 1e-10);

  // 𝐀: round trip and spectral action
  const Matrix h = random_spd(s, d);
  const MatrixOperator big_a = operator_A(h);
  const Matrix sym = random_symmetric(s, d);
  t.record("A_round_trip", rel(lyapunov_operator(h).apply(big_a.apply(sym)), sym), 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  double spec = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Matrix f = es.eigenvectors().col(i) * es.eigenvectors().col(j).transpose();
      spec = std::max(spec, rel(big_a.apply(f), f / (es.eigenvalues()(i) + es.eigenvalues()(j))));
    }
  }
  t.record("A_spectral", spec, 1e-10);

  // 𝐓 against brute-force atom summation
  const ObjectiveModel model = random_least_squares(s, d);
  const MatrixOperator big_t = operator_T(model);
  Matrix brute = Matrix::Zero(d, d);
  for (const auto& at : model.atoms()) brute += at.w * at.x.dot(sym * at.x) * at.x * at.x.transpose();
  t.record("T_exact", rel(big_t.apply(sym), brute), 1e-12);
  const Matrix kt = big_t.materialize();
  t.record("T_symmetric", rel(kt, kt.transpose()), 1e-12);
  t.record("T_psd", std::max(0.0, -big_t.min_eigenvalue_symmetric()), 1e-12);
  const Matrix& sigma = model.second_moment();
  const double lmax_t = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (kt + kt.transpose())).eigenvalues().maxCoeff();
  const double lmax_s = Eigen::SelfAdjointEigenSolver<Matrix>(sigma).eigenvalues().maxCoeff();
  t.record("T_r2_bound", std::max(0.0, lmax_t / (model.constants().r2 * lmax_s) - 1.0), 1e-10);

  // stationary operator: positive on symmetric matrices, symmetric solutions
  const double gamma = (0.05 + 0.9 * s.uniform()) / lmax_s;
  const MatrixOperator st = stationary_operator_quadratic(sigma, gamma);
  t.record("stationary_positive", st.min_eigenvalue_symmetric() > 0.0 ? 0.0 : 1.0, 0.0);
  const Matrix c = random_spd(s, d);
  const Matrix sol = stationary_second_moment_quadratic(sigma, gamma, c);
  t.record("stationary_symmetric", rel(sol, sol.transpose()), 1e-10);
  t.record("stationary_solves", rel(st.apply(sol), gamma * c), 1e-10);

  // Ω with 𝐓 = Σ⊗Σ is the identity; Ω∘(Σ⊗I + I⊗Σ − γ𝐓) = Σ⊗I + I⊗Σ − γΣ⊗Σ
  const MatrixOperator omega_id = omega_operator(sigma, gamma, MatrixOperator::kron(sigma, sigma));
  t.record("omega_identity", rel(omega_id.materialize(), Matrix::Identity(d * d, d * d)), 1e-10);
  if (gamma <= 1.0 / model.constants().r2) {
    const MatrixOperator omega = omega_operator(sigma, gamma, big_t);
    const Matrix lhs = omega.apply(lyapunov_operator(sigma).apply(p) - gamma * big_t.apply(p));
    t.record("omega_composition", rel(lhs, st.apply(p)), 1e-10);
  }
}

void operator_fixed_cases(Tracker& t) {
  Matrix one(1, 1), two(1, 1), three(1, 1), five(1, 1);
  one << 1.0;
  two << 2.0;
  three << 3.0;
  five << 5.0;
  t.record("fixed_kron_scalar", std::abs(kron_apply(two, three, five)(0, 0) - 30.0), 0.0);
  t.record("fixed_A_scalar", std::abs(operator_A(two).apply(one)(0, 0) - 0.25), 1e-15);
  const ObjectiveModel q1 = builtin_model("q1");
  t.record("fixed_lms_q1", std::abs(stationary_second_moment_lms(q1, 0.1)(0, 0) - 0.1 / 1.9), 1e-15);
  t.record("fixed_T_q1", rel(operator_T(q1).apply(five), five), 1e-15);
  t.record("fixed_omega_scalar", std::abs(omega_operator(one, 0.1, operator_T(q1)).apply(one)(0, 0) - 1.0), 1e-15);
}

// ---------------------------------------------------------------------------
// criteria

CriterionResult named(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

struct Budget {
  const AcceptanceOptions& opt;
  bool truncated = false;
  std::uint64_t operator()(std::uint64_t n) {
    if (opt.horizon && *opt.horizon < n) {
      truncated = true;
      return *opt.horizon;
    }
    return n;
  }
};

CriterionResult stationary_second_moment_q1(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(1, "quadratic stationary second moment");
  const ObjectiveModel q1 = builtin_model("q1");
  const double gamma = 0.1;
  const double exact = stationary_second_moment_lms(q1, gamma)(0, 0);
  StationaryOptions so;
  so.exec = opt.exec;
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = estimate_stationary(q1, gamma, opt.seed, minimum_burn_in(q1, gamma), budget(1000000), so);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double tol = 3.0 * e.second_moment_se(0, 0);
  r.measured = num(e.second_moment(0, 0), 9);
  r.target = num(exact, 9);
  r.tolerance = "3se=" + num(tol, 3) + ",runtime<10s";
  r.detail = "samples=" + std::to_string(e.samples) + " runtime=" + num(secs, 3) + "s";
  r.status = std::abs(e.second_moment(0, 0) - exact) <= tol && secs < 10.0 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult quadratic_zero_bias(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(2, "quadratic zero bias");
  double worst = 0.0;
  std::ostringstream detail;
  for (const char* name : {"q1", "lms3"}) {
    const ObjectiveModel m = builtin_model(name);
    for (double gamma : {0.05, 0.1, 0.2}) {
      StationaryOptions so;
      so.exec = opt.exec;
      const auto e = estimate_stationary(m, gamma, opt.seed, minimum_burn_in(m, gamma), budget(2000000), so);
      const double z = e.bias_norm.mean / e.bias_norm.se;
      worst = std::max(worst, z);
      detail << name << "@" << gamma << ":" << num(z, 3) << "se ";
    }
  }
  r.measured = "max|bias|/se=" + num(worst, 4);
  r.target = "0";
  r.tolerance = "3se";
  r.detail = detail.str();
  r.status = worst <= 3.0 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult bias_slopes(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(3, "bias slopes single/RR2/RR3");
  const ObjectiveModel l1 = builtin_model("l1");
  const double l = l1.constants().L;
  BiasScalingOptions bo;
  bo.samples = budget(20000);
  bo.replicas = 2000;
  bo.exec = opt.exec;
  const BiasScaling b = fit_bias_scaling(l1, {0.05 / l, 0.1 / l, 0.2 / l, 0.4 / l}, opt.seed, bo);
  const BiasPoint& last = b.points.back();
  const bool single_ok = b.single_fit && b.single_fit->slope >= 0.85 && b.single_fit->slope <= 1.15;
  const bool rr2_ok = b.rr2_fit && b.rr2_fit->slope >= 1.6 && b.rr2_fit->slope <= 2.4;
  const bool rr3_ok = last.rr3 && last.rr3->mean < last.rr2.mean;
  std::ostringstream m;
  m << "single_slope=" << (b.single_fit ? num(b.single_fit->slope, 4) : "none")
    << ",rr2_slope=" << (b.rr2_fit ? num(b.rr2_fit->slope, 4) : "none") << ",rr3=" << (last.rr3 ? num(last.rr3->mean, 4) : "none")
    << ",rr2=" << num(last.rr2.mean, 4);
  r.measured = m.str();
  r.target = "single_slope=1,rr2_slope=2,rr3<rr2";
  r.tolerance = "single[0.85,1.15],rr2[1.6,2.4]";
  std::ostringstream d;
  for (const auto& p : b.points)
    d << "g=" << num(p.gamma, 4) << " single=" << num(p.single.mean, 4) << "+-" << num(p.single.se, 2)
      << " rr2=" << num(p.rr2.mean, 4) << "+-" << num(p.rr2.se, 2) << "; ";
  if (!b.single_note.empty()) d << "single: " << b.single_note << "; ";
  if (!b.rr2_note.empty()) d << "rr2: " << b.rr2_note;
  r.detail = d.str();
  r.status = single_ok && rr2_ok && rr3_ok ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult coupling(const AcceptanceOptions& opt, Budget&) {
  CriterionResult r = named(4, "coupling contraction");
  const ObjectiveModel q1 = builtin_model("q1");
  const Vector a = Vector::Constant(1, 1.0);
  const Vector b = Vector::Constant(1, -1.0);
  const CouplingResult c = coupling_contraction(q1, 0.1, a, b, 2000, 200, opt.seed, opt.exec);
  const double excess = c.worst_excess(3.0, 1e-12);
  r.measured = "max(D-bound-3se)=" + num(excess, 4);
  r.target = "D(k)<=" + num(c.rate, 6) + "^k*D(0)";
  r.tolerance = "3se,rel 1e-12";
  r.detail = "k<=200 replicas=2000 D(200)=" + num(c.distance.back(), 4);
  r.status = excess <= 0.0 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult bias_constant(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(5, "averaged-iterate bias constant");
  const ObjectiveModel q1 = builtin_model("q1");
  const double gamma = 0.1;
  const Vector theta0 = Vector::Constant(1, 1.0);
  const std::uint64_t kmax = budget(10000);
  std::vector<std::uint64_t> grid;
  for (double k = 100.0; k <= static_cast<double>(kmax) * (1.0 + 1e-9); k *= std::pow(10.0, 0.125))
    grid.push_back(static_cast<std::uint64_t>(std::llround(k)));
  if (grid.empty() || static_cast<double>(grid.back()) / static_cast<double>(grid.front()) < 10.0) {
    grid.clear();
    for (double k = std::max<double>(1.0, kmax / 100.0); k <= kmax * (1.0 + 1e-9); k *= std::pow(10.0, 0.125))
      grid.push_back(static_cast<std::uint64_t>(std::llround(k)));
  }
  KScalingOptions ko;
  ko.replicas = 10000;
  ko.exec = opt.exec;
  const KScaling ks = fit_k_scaling(q1, gamma, theta0, grid, opt.seed, ko);
  const double target = ks.predicted_bias;
  r.measured = "c1=" + num(ks.bias_fit.c1, 5) + "+-" + num(ks.bias_fit.c1_se, 2);
  r.target = num(target, 5);
  r.tolerance = "15%";
  r.detail = "k in [" + std::to_string(grid.front()) + "," + std::to_string(grid.back()) + "] c2=" + num(ks.bias_fit.c2, 4);
  r.status = std::abs(ks.bias_fit.c1 - target) <= 0.15 * std::abs(target) ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult moment_bound(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(6, "stationary moment bound and fourth-moment slope");
  bool bound_ok = true;
  double worst_ratio = 0.0;
  std::ostringstream d;
  for (const char* name : {"q1", "l1", "lms3"}) {
    const ObjectiveModel m = builtin_model(name);
    for (double g : {0.05, 0.1, 0.2}) {
      const double gamma = g / m.constants().L;
      StationaryOptions so;
      so.exec = opt.exec;
      const auto e = estimate_stationary(m, gamma, opt.seed, minimum_burn_in(m, gamma), budget(1000000), so);
      const double bound = second_moment_bound(m, gamma);
      const double ratio = e.trace_second_moment.mean / bound;
      worst_ratio = std::max(worst_ratio, ratio);
      bound_ok = bound_ok && e.trace_second_moment.mean <= bound;
      d << name << "@" << num(gamma, 3) << ":" << num(ratio, 3) << " ";
    }
  }
  const ObjectiveModel q1 = builtin_model("q1");
  StationaryOptions so;
  so.exec = opt.exec;
  const MomentGrowth mg = moment_growth_check(q1, {0.025, 0.05, 0.1, 0.2}, 2, opt.seed, budget(2000000), so);
  const bool slope_ok = mg.fit && mg.fit->slope >= 1.7 && mg.fit->slope <= 2.3;
  r.measured = "max m2/bound=" + num(worst_ratio, 4) + ",m4_slope=" + (mg.fit ? num(mg.fit->slope, 4) : "none");
  r.target = "m2<=bound,m4_slope=2";
  r.tolerance = "slope[1.7,2.3]";
  r.detail = d.str() + mg.note;
  r.status = bound_ok && slope_ok ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult plateau_ratios(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(7, "plateau ratios");
  const ObjectiveModel l1 = builtin_model("l1");
  const double g_big = 1.0, g_small = 0.5;
  StationaryOptions so;
  so.exec = opt.exec;
  const auto big = estimate_stationary(l1, g_big, opt.seed, minimum_burn_in(l1, g_big), budget(2000000), so);
  const auto small = estimate_stationary(l1, g_small, opt.seed, minimum_burn_in(l1, g_small), budget(2000000), so);
  const double unavg = big.fgap.mean / small.fgap.mean;

  const CoupledBias cb = estimate_coupled_bias(l1, {g_small, g_big}, opt.seed, 0, budget(200000), 50, 1, opt.exec);
  const auto plateau = [&](double g) {
    const Vector theta = l1.optimum() + cb.bias(cb.index_of(g));
    return l1.value(theta) - l1.optimal_value();
  };
  const double avg = plateau(g_big) / plateau(g_small);
  r.measured = "unaveraged=" + num(unavg, 4) + ",averaged=" + num(avg, 4);
  r.target = "unaveraged=2,averaged=4";
  r.tolerance = "0.4,1.0";
  r.detail = "gamma=" + num(g_big) + "," + num(g_small) + " E f-f*=" + num(big.fgap.mean, 4) + "," +
             num(small.fgap.mean, 4) + " f(avg)-f*=" + num(plateau(g_big), 4) + "," + num(plateau(g_small), 4);
  r.status = std::abs(unavg - 2.0) <= 0.4 && std::abs(avg - 4.0) <= 1.0 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult flow_poisson(const AcceptanceOptions&, Budget&) {
  CriterionResult r = named(8, "gradient-flow Poisson solution");
  double h_err = 0.0;
  for (const char* name : {"q1", "lms3"}) {
    const ObjectiveModel m = builtin_model(name);
    const Matrix sigma_inv = m.second_moment().inverse();
    for (double scale : {0.5, 1.0, 2.0}) {
      Vector offset = Vector::LinSpaced(m.dim(), 1.0, -0.5) * scale;
      const Vector theta = m.optimum() + offset;
      const PoissonValue pv = poisson_h(m, Observable::identity(), theta, 1e-9);
      h_err = std::max(h_err, (pv.value - sigma_inv * offset).cwiseAbs().maxCoeff());
    }
  }
  double gen = 0.0;
  {
    const ObjectiveModel q1 = builtin_model("q1");
    const ObjectiveModel l1 = builtin_model("l1");
    const std::vector<double> times{0.25, 1.0, 3.0};
    gen = std::max(gen, generator_identity_check(q1, Observable::squared_distance(), q1.optimum() + Vector::Ones(1), times)
                            .max_residual);
    gen = std::max(gen, generator_identity_check(l1, Observable::coordinate(0), l1.optimum() + Vector::Ones(1), times)
                            .max_residual);
  }
  const ObjectiveModel l1 = builtin_model("l1");
  const double fd = (h_id_gradient_fd(l1) - h_id_gradient_at_opt(l1)).cwiseAbs().maxCoeff();
  r.measured = "h_err=" + num(h_err, 3) + ",generator=" + num(gen, 3) + ",grad_fd=" + num(fd, 3);
  r.target = "0";
  r.tolerance = "1e-6,1e-5,1e-4";
  r.status = h_err <= 1e-6 && gen < 1e-5 && fd <= 1e-4 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult weak_error(const AcceptanceOptions& opt, Budget& budget) {
  CriterionResult r = named(9, "weak-error remainder slope");
  const ObjectiveModel q1 = builtin_model("q1");
  WeakErrorOptions wo;
  wo.exec = opt.exec;
  const WeakErrorReport rep = weak_error_check(q1, Observable::squared_distance(), {0.025, 0.05, 0.1, 0.2}, q1.optimum(),
                                               budget(100000000), opt.seed, wo);
  r.measured = "slope=" + (rep.fit ? num(rep.fit->slope, 4) + "+-" + num(rep.fit->half_width, 2) : std::string("none"));
  r.target = ">=1.6";
  r.tolerance = "none";
  std::ostringstream d;
  for (const auto& p : rep.points) d << "g=" << p.gamma << " res=" << num(p.residual.mean, 4) << "+-" << num(p.residual.se, 2) << " ";
  d << rep.note;
  r.detail = d.str();
  r.status = rep.fit && rep.fit->slope >= 1.6 ? Status::kPass : Status::kFail;
  return r;
}

CriterionResult operator_checks(const AcceptanceOptions& opt, Budget&) {
  CriterionResult r = named(10, "operator unit suite");
  const auto checks = operator_suite(opt.seed, 10000);
  std::ostringstream failed;
  double worst = 0.0;
  for (const auto& c : checks) {
    if (!c.ok()) failed << c.name << "=" << num(c.max_error, 3) << " ";
    if (c.tolerance > 0.0) worst = std::max(worst, c.max_error / c.tolerance);
  }
  r.measured = "max err/tol=" + num(worst, 3);
  r.target = "all checks within tolerance";
  r.tolerance = "per check";
  r.detail = std::to_string(checks.size()) + " checks x 10000 instances " + failed.str();
  r.status = failed.str().empty() ? Status::kPass : Status::kFail;
  return r;
}

using CriterionFn = CriterionResult (*)(const AcceptanceOptions&, Budget&);
constexpr CriterionFn kCriteria[kNumCriteria] = {
    stationary_second_moment_q1, quadratic_zero_bias, bias_slopes, coupling, bias_constant,
    moment_bound, plateau_ratios, flow_poisson, weak_error, operator_checks,
};

}  // namespace

std::vector<OperatorCheck> operator_suite(std::uint64_t seed, std::size_t instances) {
  Tracker t;
  operator_fixed_cases(t);
  for (std::size_t i = 0; i < instances; ++i) {
    Stream s(seed, i, StreamPurpose::kTest);
    operator_instance(t, s);
  }
  return t.checks;
}

CriterionResult verify_criterion(int id, const AcceptanceOptions& options) {
  if (id < 1 || id > kNumCriteria) throw InvalidArgument("criterion must be in 1.." + std::to_string(kNumCriteria));
  Budget budget{options};
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = kCriteria[id - 1](options, budget);
  } catch (const NoiseFloorError& e) {
    r = named(id, "criterion " + std::to_string(id));
    r.status = Status::kFail;
    r.detail = std::string("noise floor: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget.truncated) {
    r.status = Status::kSkip;
    r.detail = "Monte Carlo budget cut to horizon " + std::to_string(*options.horizon) + "; " + r.detail;
  }
  return r;
}

std::vector<CriterionResult> verify_all(const AcceptanceOptions& options, std::ostream* log) {
  std::vector<int> ids = options.only;
  if (ids.empty())
    for (int i = 1; i <= kNumCriteria; ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    if (log) *log << "running criterion " << id << "\n" << std::flush;
    out.push_back(verify_criterion(id, options));
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion=" << r.id << "\tstatus=" << to_string(r.status) << "\tname=" << r.name << "\tmeasured=" << r.measured
     << "\ttarget=" << r.target << "\ttolerance=" << r.tolerance << "\tseconds=" << num(r.seconds, 4);
  if (!r.detail.empty()) os << "\tdetail=" << r.detail;
  return os.str();
}

int verify_exit_code(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (r.status == Status::kFail) return 1;
  return 0;
}

}  // namespace sgdlab
