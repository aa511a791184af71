// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgdlab/model_io.hpp"

namespace sgdlab {

using nlohmann::json;

namespace {

struct NamedKind {
  const char* name;
  ExperimentKind kind;
};

constexpr NamedKind kKinds[] = {
    {"fig2", ExperimentKind::kFig2},
    {"rr-bias-scaling", ExperimentKind::kRRBiasScaling},
    {"stationary-table", ExperimentKind::kStationaryTable},
    {"coupling", ExperimentKind::kCoupling},
    {"k-scaling", ExperimentKind::kKScaling},
    {"weak-error", ExperimentKind::kWeakError},
    {"moment-growth", ExperimentKind::kMomentGrowth},
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  std::string list;
  for (const auto& k : kKinds) list += std::string(list.empty() ? "" : ", ") + k.name;
  throw ConfigError("unknown experiment '" + name + "' (expected one of: " + list + ")");
}

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& k : kKinds) out.emplace_back(k.name);
  return out;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const char* known[] = {"model", "experiment", "gammas", "gammas_over_L", "horizon",
                                "replicas", "seed", "out", "plots", "theta0"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config field '" + key + "'");
  }
  RunConfig c;
  c.base_dir = base_dir;
  try {
    c.model = j.at("model").get<std::string>();
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    if (j.contains("gammas")) c.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("gammas_over_L")) c.gammas_over_L = j.at("gammas_over_L").get<std::vector<double>>();
    if (!c.gammas.empty() && !c.gammas_over_L.empty())
      throw ConfigError("give either gammas or gammas_over_L, not both");
    const auto horizon = j.value("horizon", static_cast<std::int64_t>(c.horizon));
    const auto replicas = j.value("replicas", static_cast<std::int64_t>(c.replicas));
    if (horizon < 0 || replicas < 0) throw ConfigError("horizon and replicas must be non-negative");
    c.horizon = static_cast<std::uint64_t>(horizon);
    c.replicas = static_cast<std::size_t>(replicas);
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out.string());
    if (c.out.is_relative()) c.out = base_dir / c.out;
    c.plots = j.value("plots", c.plots);
    if (j.contains("theta0")) {
      const auto v = j.at("theta0").get<std::vector<double>>();
      c.theta0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.source = j.dump();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["model"] = c.model;
  j["experiment"] = to_string(c.experiment);
  if (!c.gammas.empty()) j["gammas"] = c.gammas;
  if (!c.gammas_over_L.empty()) j["gammas_over_L"] = c.gammas_over_L;
  j["horizon"] = c.horizon;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["plots"] = c.plots;
  if (c.theta0) j["theta0"] = std::vector<double>(c.theta0->data(), c.theta0->data() + c.theta0->size());
  return j.dump(2);
}

ObjectiveModel load_config_model(const RunConfig& c) {
  const std::string prefix = "builtin:";
  if (c.model.rfind(prefix, 0) == 0) return builtin_model(c.model.substr(prefix.size()));
  std::filesystem::path p = c.model;
  if (p.is_relative()) p = c.base_dir / p;
  return load_model(p);
}

std::vector<double> resolve_gammas(const RunConfig& c, const ObjectiveModel& model) {
  if (!c.gammas.empty()) return c.gammas;
  std::vector<double> out;
  for (double g : c.gammas_over_L) out.push_back(g / model.constants().L);
  return out;
}

void validate_config(const RunConfig& c, const ObjectiveModel& model) {
  const double limit = 2.0 / model.constants().L;
  for (double g : resolve_gammas(c, model)) {
    if (!(g > 0.0 && g < limit)) {
      std::ostringstream os;
      os << "step size " << g << " outside (0, 2/L) = (0, " << limit << ")";
      throw ConfigError(os.str());
    }
  }
  if (c.horizon < 1000) throw ConfigError("horizon must be at least 1000");
  if (c.replicas < 1) throw ConfigError("replicas must be at least 1");
  if (c.theta0 && c.theta0->size() != model.dim()) throw ConfigError("theta0 dimension does not match the model");
}

}  // namespace sgdlab
