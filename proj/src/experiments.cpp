// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sgdlab/chain.hpp"
#include "sgdlab/extrapolate.hpp"
#include "sgdlab/flow.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/report.hpp"
#include "sgdlab/stationary.hpp"
#include "sgdlab/tensorops.hpp"

namespace sgdlab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

json fit_json(const std::optional<ScalingFit>& fit, const std::string& note) {
  if (!fit) return {{"fitted", false}, {"note", note}};
  return {{"fitted", true},
          {"slope", fit->slope},
          {"intercept", fit->intercept},
          {"half_width", fit->half_width},
          {"residual", fit->residual},
          {"points_used", fit->num_used()}};
}

class Context {
 public:
  Context(const RunConfig& cfg, const ObjectiveModel& model, const Execution& exec, std::ostream* log)
      : cfg(cfg), model(model), exec(exec), log_(log) {
    std::filesystem::create_directories(cfg.out);
  }

  void table(const std::string& name, Table t) {
    t.comments.insert(t.comments.begin(), "sgdlab " + std::string(kVersion) + " experiment=" +
                                              to_string(cfg.experiment) + " seed=" + std::to_string(cfg.seed));
    t.write(cfg.out / name);
    files.emplace_back(name);
  }

  void plot(const std::string& name, const PlotSpec& spec, const std::vector<Series>& series) {
    if (!cfg.plots) return;
    write_text(cfg.out / name, line_plot_svg(spec, series));
    files.emplace_back(name);
  }

  void note(const std::string& msg) {
    if (log_) *log_ << msg << "\n";
  }

  Vector theta0() const {
    return cfg.theta0 ? *cfg.theta0 : Vector(model.optimum() + Vector::Ones(model.dim()));
  }

  std::vector<double> gammas(std::vector<double> default_over_L) const {
    auto g = resolve_gammas(cfg, model);
    if (!g.empty()) return g;
    for (double& x : default_over_L) x /= model.constants().L;
    return default_over_L;
  }

  const RunConfig& cfg;
  const ObjectiveModel& model;
  Execution exec;
  std::vector<std::filesystem::path> files;
  json summary = json::object();

 private:
  std::ostream* log_;
};

Table curve_table(const Trajectory& t, bool averaged, const std::string& label) {
  Table tab;
  tab.comments = t.comments;
  tab.comments.push_back("curve: " + label);
  tab.columns = {"k", "fgap"};
  for (const auto& r : t.rows) tab.add_row({static_cast<double>(r.k), averaged ? r.fgap_avg : r.fgap_theta});
  return tab;
}

Series curve_series(const Trajectory& t, bool averaged, const std::string& label) {
  Series s;
  s.label = label;
  for (const auto& r : t.rows) {
    if (r.k == 0) continue;
    s.x.push_back(static_cast<double>(r.k));
    s.y.push_back(averaged ? r.fgap_avg : r.fgap_theta);
  }
  return s;
}

void write_trajectory(Context& ctx, const std::string& name, const Trajectory& t) {
  std::ostringstream os;
  write_trajectory_csv(t, os);
  write_text(ctx.cfg.out / name, os.str());
  ctx.files.emplace_back(name);
}

void run_fig2(Context& ctx) {
  const auto& m = ctx.model;
  const double r2 = m.constants().R2;
  std::vector<double> gammas = resolve_gammas(ctx.cfg, m);
  if (gammas.empty()) gammas = {1.0 / r2, 1.0 / (2.0 * r2)};
  for (double g : gammas) check_step_size(m, g);
  const Vector theta0 = ctx.theta0();
  const auto sched = RecordSchedule::geometric(1.15);
  const std::uint64_t n = ctx.cfg.horizon;
  const std::size_t reps = ctx.cfg.replicas;

  std::vector<Series> series;
  json finals = json::object();
  std::vector<double> averaged_final;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    ctx.note("fig2: constant step " + fmt(gammas[i]));
    const Trajectory t = replica_mean_chain(m, gammas[i], theta0, n, sched, ctx.cfg.seed, reps, ctx.exec);
    const std::string tag = "g" + std::to_string(i);
    write_trajectory(ctx, "traj_" + tag + ".csv", t);
    const std::string lu = "sgd gamma=" + fmt(gammas[i]);
    const std::string la = "averaged gamma=" + fmt(gammas[i]);
    ctx.table("curve_sgd_" + tag + ".csv", curve_table(t, false, lu));
    ctx.table("curve_avg_" + tag + ".csv", curve_table(t, true, la));
    series.push_back(curve_series(t, false, lu));
    series.push_back(curve_series(t, true, la));
    finals[lu] = t.rows.back().fgap_theta;
    finals[la] = t.rows.back().fgap_avg;
    averaged_final.push_back(t.rows.back().fgap_avg);
  }

  const double base = *std::min_element(gammas.begin(), gammas.end());
  if (2.0 * base < 2.0 / m.constants().L) {
    ctx.note("fig2: Richardson-Romberg at " + fmt(base));
    const Trajectory rr = replica_mean_rr(m, base, theta0, n, sched, ctx.cfg.seed, RRScheme::two_step(), reps, ctx.exec);
    write_trajectory(ctx, "traj_rr.csv", rr);
    const std::string l = "richardson-romberg gamma=" + fmt(base);
    ctx.table("curve_rr.csv", curve_table(rr, true, l));
    series.push_back(curve_series(rr, true, l));
    const double f = rr.rows.back().fgap_avg;
    finals[l] = f;
    bool below = true;
    for (double a : averaged_final) below = below && f < a;
    ctx.summary["rr_below_averaged"] = below;
  }

  const double c = 1.0 / (2.0 * r2);
  ctx.note("fig2: decaying step c/sqrt(k), c=" + fmt(c));
  const Trajectory dec = replica_mean_decaying(m, c, theta0, n, sched, ctx.cfg.seed, reps, ctx.exec);
  write_trajectory(ctx, "traj_decaying.csv", dec);
  const std::string ld = "averaged decaying c=" + fmt(c);
  ctx.table("curve_decaying.csv", curve_table(dec, true, ld));
  series.push_back(curve_series(dec, true, ld));
  finals[ld] = dec.rows.back().fgap_avg;

  ctx.summary["final_fgap"] = finals;
  ctx.plot("fig2.svg", {"f-gap vs iterations", "n", "f - f*"}, series);
}

void run_rr_bias(Context& ctx) {
  const auto gammas = ctx.gammas({0.05, 0.1, 0.2, 0.4});
  BiasScalingOptions opt;
  opt.samples = ctx.cfg.horizon;
  opt.replicas = std::max<std::size_t>(ctx.cfg.replicas, 50);
  opt.exec = ctx.exec;
  ctx.note("rr-bias-scaling: " + std::to_string(opt.replicas) + " replicas x " + std::to_string(opt.samples) + " steps");
  const BiasScaling b = fit_bias_scaling(ctx.model, gammas, ctx.cfg.seed, opt);

  Table t;
  t.columns = {"gamma", "single", "single_se", "rr2", "rr2_se", "rr3", "rr3_se", "first_order_prediction"};
  Series s1{"single", {}, {}}, s2{"rr2", {}, {}}, s3{"rr3", {}, {}};
  for (const auto& p : b.points) {
    t.add_row({p.gamma, p.single.mean, p.single.se, p.rr2.mean, p.rr2.se, p.rr3 ? p.rr3->mean : kNaN,
               p.rr3 ? p.rr3->se : kNaN, p.gamma * b.delta.norm()});
    s1.x.push_back(p.gamma);
    s1.y.push_back(p.single.mean);
    s2.x.push_back(p.gamma);
    s2.y.push_back(p.rr2.mean);
    if (p.rr3) {
      s3.x.push_back(p.gamma);
      s3.y.push_back(p.rr3->mean);
    }
  }
  if (b.single_fit) t.comments.push_back("single slope " + fmt(b.single_fit->slope) + " +- " + fmt(b.single_fit->half_width));
  if (b.rr2_fit) t.comments.push_back("rr2 slope " + fmt(b.rr2_fit->slope) + " +- " + fmt(b.rr2_fit->half_width));
  ctx.table("bias_scaling.csv", std::move(t));
  ctx.summary["single_fit"] = fit_json(b.single_fit, b.single_note);
  ctx.summary["rr2_fit"] = fit_json(b.rr2_fit, b.rr2_note);
  ctx.summary["delta_norm"] = b.delta.norm();
  ctx.plot("bias_scaling.svg", {"stationary bias vs step size", "gamma", "bias norm"}, {s1, s2, s3});
}

void run_stationary_table(Context& ctx) {
  const auto& m = ctx.model;
  const int d = m.dim();
  const auto gammas = ctx.gammas({0.05, 0.1, 0.2});
  StationaryOptions opt;
  opt.replicas = ctx.cfg.replicas;
  opt.batches = (50 + opt.replicas - 1) / opt.replicas;
  opt.exec = ctx.exec;
  Table t;
  t.columns = {"gamma", "burn_in", "samples"};
  for (int i = 0; i < d; ++i) t.columns.push_back("mean_" + std::to_string(i));
  for (int i = 0; i < d; ++i) t.columns.push_back("mean_se_" + std::to_string(i));
  for (const char* c : {"trace_m2", "trace_m2_se", "trace_m2_exact", "m2_bound", "m4", "m4_se", "fgap", "fgap_se",
                        "cbar_trace"})
    t.columns.emplace_back(c);
  json rows = json::array();
  for (double g : gammas) {
    ctx.note("stationary-table: gamma " + fmt(g));
    const StationaryEstimate e = estimate_stationary(m, g, ctx.cfg.seed, minimum_burn_in(m, g), ctx.cfg.horizon, opt);
    double exact = kNaN;
    if (m.kind() == LossKind::kLeastSquares && m.lambda() == 0.0 && g <= 1.0 / m.constants().r2)
      exact = stationary_second_moment_lms(m, g).trace();
    std::vector<double> row{g, static_cast<double>(e.burn_in), static_cast<double>(e.samples)};
    for (int i = 0; i < d; ++i) row.push_back(e.mean(i));
    for (int i = 0; i < d; ++i) row.push_back(e.mean_se(i));
    row.insert(row.end(), {e.trace_second_moment.mean, e.trace_second_moment.se, exact, second_moment_bound(m, g),
                           e.fourth_moment.mean, e.fourth_moment.se, e.fgap.mean, e.fgap.se, e.cbar.trace()});
    t.add_row(std::move(row));
    json r = {{"gamma", g}, {"trace_m2", e.trace_second_moment.mean}, {"trace_m2_se", e.trace_second_moment.se}};
    if (std::isfinite(exact)) {
      r["trace_m2_exact"] = exact;
      r["within_3se"] = std::abs(e.trace_second_moment.mean - exact) <= 3.0 * e.trace_second_moment.se;
    }
    rows.push_back(r);
  }
  ctx.table("stationary.csv", std::move(t));
  ctx.summary["rows"] = rows;
}

void run_coupling(Context& ctx) {
  const auto& m = ctx.model;
  const double g = ctx.gammas({0.1}).front();
  const Vector a = ctx.theta0();
  const Vector b = 2.0 * m.optimum() - a;
  ctx.note("coupling: gamma " + fmt(g));
  const CouplingResult c = coupling_contraction(m, g, a, b, ctx.cfg.replicas, ctx.cfg.horizon, ctx.cfg.seed, ctx.exec);
  Table t;
  t.comments.push_back("rate " + fmt(c.rate) + ", alternative rate " + fmt(c.rate_alt));
  t.columns = {"k", "distance", "se", "bound", "bound_alt"};
  Series sd{"D(k)", {}, {}}, sb{"rho^k D(0)", {}, {}};
  for (std::size_t i = 0; i < c.k.size(); ++i) {
    t.add_row({static_cast<double>(c.k[i]), c.distance[i], c.se[i], c.bound[i], c.bound_alt[i]});
    sd.x.push_back(static_cast<double>(c.k[i]));
    sd.y.push_back(c.distance[i]);
    sb.x.push_back(static_cast<double>(c.k[i]));
    sb.y.push_back(c.bound[i]);
  }
  ctx.table("coupling.csv", std::move(t));
  ctx.summary["rate"] = c.rate;
  ctx.summary["rate_alt"] = c.rate_alt;
  ctx.summary["worst_excess"] = c.worst_excess(3.0, 1e-12);
  PlotSpec spec{"coupled squared distance", "k", "D(k)"};
  spec.log_x = false;
  ctx.plot("coupling.svg", spec, {sd, sb});
}

std::vector<std::uint64_t> geometric_grid(std::uint64_t lo, std::uint64_t hi, double ratio) {
  std::vector<std::uint64_t> out;
  for (double x = static_cast<double>(lo); x <= static_cast<double>(hi); x *= ratio) {
    const auto k = static_cast<std::uint64_t>(std::llround(x));
    if (out.empty() || k > out.back()) out.push_back(k);
  }
  if (out.back() != hi) out.push_back(hi);
  return out;
}

void run_k_scaling(Context& ctx) {
  const auto& m = ctx.model;
  const double g = ctx.gammas({0.1}).front();
  const Vector theta0 = ctx.theta0();
  const auto grid = geometric_grid(10, ctx.cfg.horizon, 1.25);
  std::vector<Series> series;
  for (StartMode mode : {StartMode::kFixed, StartMode::kStationary}) {
    const std::string tag = mode == StartMode::kFixed ? "fixed" : "stationary";
    ctx.note("k-scaling: " + tag + " start");
    KScalingOptions opt;
    opt.replicas = ctx.cfg.replicas;
    opt.start = mode;
    opt.exec = ctx.exec;
    const KScaling ks = fit_k_scaling(m, g, theta0, grid, ctx.cfg.seed, opt);
    Table t;
    t.comments.push_back(tag + " start, gamma " + fmt(g));
    t.columns = {"k", "mean_error", "mean_error_se", "mse", "mse_se"};
    Series s{"E|avg - mean|^2 (" + tag + ")", {}, {}};
    for (std::size_t i = 0; i < ks.k.size(); ++i) {
      const double proj = ks.direction.dot(ks.mean_error[i]);
      const double pse = std::sqrt(ks.direction.cwiseAbs2().dot(ks.mean_error_se[i].cwiseAbs2()));
      t.add_row({static_cast<double>(ks.k[i]), proj, pse, ks.mse[i].mean, ks.mse[i].se});
      s.x.push_back(static_cast<double>(ks.k[i]));
      s.y.push_back(ks.mse[i].mean);
    }
    ctx.table("k_scaling_" + tag + ".csv", std::move(t));
    series.push_back(s);
    ctx.summary[tag] = {{"bias_c1", ks.bias_fit.c1},         {"bias_c1_se", ks.bias_fit.c1_se},
                        {"bias_c2", ks.bias_fit.c2},         {"bias_c2_se", ks.bias_fit.c2_se},
                        {"mse_c1", ks.mse_fit.c1},           {"mse_c1_se", ks.mse_fit.c1_se},
                        {"mse_c2", ks.mse_fit.c2},           {"predicted_bias", ks.predicted_bias},
                        {"predicted_variance", ks.predicted_variance},
                        {"predicted_second_order", ks.predicted_second_order}};
  }
  ctx.plot("k_scaling.svg", {"averaged iterate error vs k", "k", "mean squared error"}, series);
}

void run_weak_error(Context& ctx) {
  const auto& m = ctx.model;
  const auto gammas = ctx.gammas({0.025, 0.05, 0.1, 0.2});
  const Observable g = m.kind() == LossKind::kLeastSquares ? Observable::squared_distance() : Observable::coordinate(0);
  WeakErrorOptions opt;
  opt.replicas = ctx.cfg.replicas;
  opt.batches = (50 + opt.replicas - 1) / opt.replicas;
  opt.exec = ctx.exec;
  ctx.note("weak-error: g = " + g.name());
  const WeakErrorReport rep = weak_error_check(m, g, gammas, ctx.theta0(), ctx.cfg.horizon, ctx.cfg.seed, opt);
  Table t;
  t.comments.push_back("g = " + g.name());
  t.columns = {"gamma", "steps", "average", "average_se", "correction", "leading", "residual", "residual_se"};
  Series s{"residual", {}, {}};
  for (const auto& p : rep.points) {
    t.add_row({p.gamma, static_cast<double>(p.horizon), p.average.mean, p.average.se, p.correction, p.leading,
               p.residual.mean, p.residual.se});
    s.x.push_back(p.gamma);
    s.y.push_back(p.residual.mean);
  }
  ctx.table("weak_error.csv", std::move(t));
  ctx.summary["residual_fit"] = fit_json(rep.fit, rep.note);
  ctx.plot("weak_error.svg", {"weak-error remainder vs step size", "gamma", "residual"}, {s});
}

void run_moment_growth(Context& ctx) {
  const auto& m = ctx.model;
  const auto gammas = ctx.gammas({0.025, 0.05, 0.1, 0.2});
  StationaryOptions opt;
  opt.replicas = ctx.cfg.replicas;
  opt.batches = (50 + opt.replicas - 1) / opt.replicas;
  opt.exec = ctx.exec;
  ctx.note("moment-growth: p = 1, 2");
  const MomentGrowth p1 = moment_growth_check(m, gammas, 1, ctx.cfg.seed, ctx.cfg.horizon, opt);
  const MomentGrowth p2 = moment_growth_check(m, gammas, 2, ctx.cfg.seed, ctx.cfg.horizon, opt);
  Table t;
  t.columns = {"gamma", "m2", "m2_se", "m2_bound", "m4", "m4_se"};
  Series s1{"second moment", {}, {}}, s2{"fourth moment", {}, {}};
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    t.add_row({gammas[i], p1.moments[i].mean, p1.moments[i].se, p1.bound[i], p2.moments[i].mean, p2.moments[i].se});
    s1.x.push_back(gammas[i]);
    s1.y.push_back(p1.moments[i].mean);
    s2.x.push_back(gammas[i]);
    s2.y.push_back(p2.moments[i].mean);
  }
  ctx.table("moments.csv", std::move(t));
  ctx.summary["p1_fit"] = fit_json(p1.fit, p1.note);
  ctx.summary["p2_fit"] = fit_json(p2.fit, p2.note);
  ctx.plot("moments.svg", {"stationary moments vs step size", "gamma", "moment"}, {s1, s2});
}

json model_json(const ObjectiveModel& m) {
  const auto& c = m.constants();
  json j = json::parse(model_to_json(m));
  j["constants"] = {{"mu", c.mu}, {"mu_global", c.mu_global}, {"L", c.L}, {"L_cocoercive", c.L_cocoercive},
                    {"R2", c.R2}, {"tau2_sq", c.tau2_sq}, {"r2", c.r2}};
  j["theta_star"] = std::vector<double>(m.optimum().data(), m.optimum().data() + m.dim());
  return j;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, const Execution& exec, std::ostream* log) {
  const ObjectiveModel model = load_config_model(cfg);
  validate_config(cfg, model);
  Context ctx(cfg, model, exec, log);

  ExperimentResult res;
  res.status = "ok";
  try {
    switch (cfg.experiment) {
      case ExperimentKind::kFig2: run_fig2(ctx); break;
      case ExperimentKind::kRRBiasScaling: run_rr_bias(ctx); break;
      case ExperimentKind::kStationaryTable: run_stationary_table(ctx); break;
      case ExperimentKind::kCoupling: run_coupling(ctx); break;
      case ExperimentKind::kKScaling: run_k_scaling(ctx); break;
      case ExperimentKind::kWeakError: run_weak_error(ctx); break;
      case ExperimentKind::kMomentGrowth: run_moment_growth(ctx); break;
    }
  } catch (const DivergenceError& e) {
    res.exit_code = 3;
    res.status = "diverged";
    res.message = e.what();
  }

  json man;
  man["tool"] = "sgdlab";
  man["version"] = kVersion;
  man["experiment"] = to_string(cfg.experiment);
  man["seed"] = cfg.seed;
  man["config"] = cfg.source.empty() ? json::parse(config_to_json(cfg)) : json::parse(cfg.source);
  man["model"] = model_json(model);
  man["status"] = res.status;
  if (!res.message.empty()) man["message"] = res.message;
  man["summary"] = ctx.summary;
  man["files"] = json::array();
  for (const auto& f : ctx.files) man["files"].push_back({{"path", f.generic_string()}, {"fnv1a64", file_hash(cfg.out / f)}});
  res.manifest = cfg.out / "manifest.json";
  write_text(res.manifest, man.dump(2) + "\n");
  res.files = ctx.files;
  return res;
}

}  // namespace sgdlab
