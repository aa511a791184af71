// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgdlab/acceptance.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/experiments.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/report.hpp"

using namespace sgdlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgdlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config(const std::string& experiment, const fs::path& out) {
  RunConfig c = parse_config(R"({"model": "builtin:q1", "experiment": ")" + experiment +
                             R"(", "gammas": [0.1], "horizon": 20000, "replicas": 2, "seed": 3})");
  c.out = out;
  return c;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("SGDLAB_CLI");
  REQUIRE(cli != nullptr);
  const int rc = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(
      R"({"model": "m.json", "experiment": "coupling", "gammas_over_L": [0.1, 0.2], "horizon": 5000,
          "replicas": 4, "seed": 9, "out": "o", "plots": false, "theta0": [1.0]})",
      "/base");
  CHECK(c.experiment == ExperimentKind::kCoupling);
  CHECK(c.gammas_over_L.size() == 2);
  CHECK(c.horizon == 5000);
  CHECK(c.replicas == 4);
  CHECK(c.seed == 9);
  CHECK_FALSE(c.plots);
  REQUIRE(c.theta0);
  CHECK((*c.theta0)(0) == 1.0);
  CHECK(parse_config(config_to_json(c), "/base").seed == 9);

  CHECK_THROWS_AS(parse_config(R"({"model": "m", "experiment": "fig3"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": "m", "experiment": "fig2", "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": "m", "experiment": "fig2", "gammas": [1], "gammas_over_L": [1]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2"), ConfigError);
  CHECK(experiment_names().size() == 7);
}

TEST_CASE("config validation against the model") {
  const ObjectiveModel q1 = builtin_model("q1");
  RunConfig c = parse_config(R"({"model": "builtin:q1", "experiment": "fig2", "gammas": [2.5]})");
  CHECK_THROWS_AS(validate_config(c, q1), ConfigError);
  c.gammas = {0.5};
  c.horizon = 999;
  CHECK_THROWS_AS(validate_config(c, q1), ConfigError);
  c.horizon = 1000;
  c.replicas = 0;
  CHECK_THROWS_AS(validate_config(c, q1), ConfigError);
  c.replicas = 1;
  CHECK_NOTHROW(validate_config(c, q1));
  c.gammas = {};
  c.gammas_over_L = {0.5};
  CHECK(resolve_gammas(c, builtin_model("l1"))[0] == doctest::Approx(0.5 / 0.35));
}

TEST_CASE("stationary-table on Q1 matches the exact value and the manifest is complete") {
  const fs::path out = scratch("stationary");
  const auto res = run_experiment(small_config("stationary-table", out), {});
  CHECK(res.exit_code == 0);
  const auto man = nlohmann::json::parse(slurp(res.manifest));
  CHECK(man["status"] == "ok");
  CHECK(man["version"] == kVersion);
  CHECK(man["seed"] == 3);
  CHECK(man["model"]["constants"]["L"] == 1.0);
  const auto& row = man["summary"]["rows"][0];
  CHECK(row["trace_m2_exact"].get<double>() == doctest::Approx(0.1 / 1.9));
  CHECK(row["within_3se"].get<bool>());
  REQUIRE(man["files"].size() == res.files.size());
  for (const auto& f : man["files"]) CHECK(file_hash(out / f["path"].get<std::string>()) == f["fnv1a64"]);
  const std::string csv = slurp(out / "stationary.csv");
  CHECK(csv.rfind("# ", 0) == 0);
  CHECK(csv.find("gamma,burn_in,samples,mean_0") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  RunConfig ca = small_config("coupling", a), cb = small_config("coupling", b);
  run_experiment(ca, {});
  run_experiment(cb, Execution{3});
  for (const char* f : {"coupling.csv", "coupling.svg"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("fig2 writes six curves and a log-axis plot") {
  const fs::path out = scratch("fig2");
  RunConfig c = parse_config(R"({"model": "builtin:l1", "experiment": "fig2", "horizon": 20000, "replicas": 2})");
  c.out = out;
  const auto res = run_experiment(c, {});
  CHECK(res.exit_code == 0);
  int curves = 0;
  for (const auto& f : res.files) curves += f.string().rfind("curve_", 0) == 0;
  CHECK(curves == 6);
  const std::string svg = slurp(out / "fig2.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("log10") != std::string::npos);
  const auto man = nlohmann::json::parse(slurp(res.manifest));
  CHECK(man["summary"].contains("rr_below_averaged"));
}

TEST_CASE("plots can be disabled") {
  const fs::path out = scratch("noplot");
  RunConfig c = small_config("moment-growth", out);
  c.gammas = {0.05, 0.1, 0.2, 0.4};
  c.plots = false;
  const auto res = run_experiment(c, {});
  for (const auto& f : res.files) CHECK(f.extension() != ".svg");
  CHECK(fs::exists(out / "moments.csv"));
}

TEST_CASE("a bad model fails before anything is written") {
  const fs::path dir = scratch("badmodel");
  {
    std::ofstream(dir / "broken.json") << R"({"kind": "least_squares", "d": 1, "atoms": [{"x": [1], )";
    std::ofstream(dir / "cfg.json") << R"({"model": "broken.json", "experiment": "fig2", "out": "out"})";
  }
  const RunConfig c = load_config(dir / "cfg.json");
  CHECK_THROWS_AS(run_experiment(c, {}), ModelError);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("divergence is recorded and partial outputs kept") {
  // γ just under 2/L but far above 2/R² on a model with one long atom
  std::vector<DataAtom> atoms(2);
  atoms[0].x = Vector::Constant(1, 0.1);
  atoms[0].y = 0.0;
  atoms[0].w = 0.99;
  atoms[1].x = Vector::Constant(1, 10.0);
  atoms[1].y = 1.0;
  atoms[1].w = 0.01;
  const ObjectiveModel m = ObjectiveModel::create(LossKind::kLeastSquares, atoms);
  const fs::path dir = scratch("diverge");
  std::ofstream(dir / "m.json") << model_to_json(m);
  std::ofstream(dir / "cfg.json") << R"({"model": "m.json", "experiment": "fig2", "gammas": [)"
                                  << 1.9 / m.constants().L << R"(], "horizon": 100000, "out": "out"})";
  const auto res = run_experiment(load_config(dir / "cfg.json"), {});
  CHECK(res.exit_code == 3);
  const auto man = nlohmann::json::parse(slurp(res.manifest));
  CHECK(man["status"] == "diverged");
  CHECK(man.contains("message"));
}

TEST_CASE("acceptance reporting") {
  AcceptanceOptions opt;
  opt.horizon = 1000;
  const CriterionResult r1 = verify_criterion(1, opt);
  CHECK(r1.status == Status::kSkip);
  const CriterionResult r4 = verify_criterion(4, opt);
  CHECK(r4.status == Status::kPass);
  const std::string line = format_line(r4);
  CHECK(line.rfind("criterion=4\tstatus=PASS\t", 0) == 0);
  CHECK(line.find("measured=") != std::string::npos);
  CHECK(verify_exit_code({r1, r4}) == 0);
  CriterionResult bad = r4;
  bad.status = Status::kFail;
  CHECK(verify_exit_code({r1, bad}) == 1);
  CHECK_THROWS_AS(verify_criterion(11, opt), InvalidArgument);
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.json") << R"({"model": "builtin:q1", "experiment": "fig9"})";
  std::ofstream(dir / "ok.json") << R"({"model": "builtin:q1", "experiment": "coupling", "gammas": [0.1],
                                       "horizon": 1000, "replicas": 4, "out": "out"})";
  CHECK(run_cli("run --config " + (dir / "bad.json").string()) != 0);
  CHECK(run_cli("run --config " + (dir / "missing.json").string()) != 0);
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("run --config " + (dir / "ok.json").string() + " --no-plots --workers 2 --seed 5") == 0);
  CHECK(fs::exists(dir / "out" / "coupling.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "coupling.svg"));
  CHECK(run_cli("inspect-model builtin:l1") == 0);
  CHECK(run_cli("verify --criterion 4 --horizon 1000") == 0);
}
