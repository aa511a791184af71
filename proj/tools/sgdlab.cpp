// SPDX-License-Identifier: Apache-2.0
// sgdlab: run experiments, verify acceptance criteria, inspect models.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgdlab/acceptance.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/experiments.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/report.hpp"

namespace {

constexpr int kUsageError = 2;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, int workers,
            const std::string& out, bool no_plots) {
  sgdlab::RunConfig cfg = sgdlab::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.out = out;
  if (no_plots) cfg.plots = false;
  // Fail on a bad model or config before any simulation starts.
  sgdlab::validate_config(cfg, sgdlab::load_config_model(cfg));
  const auto res = sgdlab::run_experiment(cfg, sgdlab::Execution{workers}, &std::cerr);
  std::cout << "status=" << res.status << " files=" << res.files.size() << " manifest=" << res.manifest.string() << "\n";
  if (!res.message.empty()) std::cerr << "sgdlab: " << res.message << "\n";
  return res.exit_code;
}

int cmd_verify(const std::vector<int>& criteria, std::optional<std::uint64_t> horizon,
               std::optional<std::uint64_t> seed, int workers) {
  sgdlab::AcceptanceOptions opt;
  if (seed) opt.seed = *seed;
  opt.exec.workers = workers;
  opt.horizon = horizon;
  opt.only = criteria;
  const auto results = sgdlab::verify_all(opt, &std::cerr);
  for (const auto& r : results) std::cout << sgdlab::format_line(r) << "\n";
  return sgdlab::verify_exit_code(results);
}

int cmd_inspect(const std::string& model, const std::string& config_path) {
  sgdlab::ObjectiveModel m = [&] {
    if (!config_path.empty()) return sgdlab::load_config_model(sgdlab::load_config(config_path));
    if (model.rfind("builtin:", 0) == 0) return sgdlab::builtin_model(model.substr(8));
    return sgdlab::load_model(model);
  }();
  std::cout << sgdlab::describe_model(m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant step-size SGD experiments"};
  app.set_version_flag("--version", std::string(sgdlab::kVersion));
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  int workers = 1;

  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  std::string config_path, out;
  bool no_plots = false;
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--workers", workers, "replica worker threads (1 = serial)")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "override the output directory");
  run->add_flag("--no-plots", no_plots, "skip SVG plots");

  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  std::vector<int> criteria;
  std::optional<std::uint64_t> horizon;
  verify->add_option("--criterion", criteria, "criterion id(s), default all")->check(CLI::Range(1, sgdlab::kNumCriteria));
  verify->add_option("--horizon", horizon, "cap Monte Carlo run lengths");
  verify->add_option("--seed", seed, "base seed");
  verify->add_option("--workers", workers, "replica worker threads")->check(CLI::PositiveNumber);

  auto* inspect = app.add_subcommand("inspect-model", "print model constants and assumption checks");
  std::string model, inspect_config;
  inspect->add_option("model", model, "model file or builtin:<name>");
  inspect->add_option("--config", inspect_config, "take the model from this config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, workers, out, no_plots);
    if (*verify) return cmd_verify(criteria, horizon, seed, workers);
    if (*inspect) {
      if (model.empty() && inspect_config.empty()) {
        std::cerr << "sgdlab: inspect-model needs a model path or --config\n";
        return kUsageError;
      }
      return cmd_inspect(model, inspect_config);
    }
  } catch (const sgdlab::ConfigError& e) {
    std::cerr << "sgdlab: config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const sgdlab::ModelError& e) {
    std::cerr << "sgdlab: model error: " << e.what() << "\n";
    return kUsageError;
  } catch (const sgdlab::Error& e) {
    std::cerr << "sgdlab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
