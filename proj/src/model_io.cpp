// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace sgdlab {

using nlohmann::json;

ObjectiveModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const LossKind kind = loss_kind_from_string(j.at("kind").get<std::string>());
    const int d = j.at("d").get<int>();
    if (d <= 0) throw ModelError("d must be positive");
    const double lambda = j.value("lambda", 0.0);
    std::optional<double> radius;
    if (j.contains("radius")) radius = j.at("radius").get<double>();
    std::vector<DataAtom> atoms;
    for (const auto& a : j.at("atoms")) {
      const auto xs = a.at("x").get<std::vector<double>>();
      if (static_cast<int>(xs.size()) != d)
        throw ModelError("atom dimension " + std::to_string(xs.size()) + " does not match d=" + std::to_string(d));
      DataAtom atom;
      atom.x = Eigen::Map<const Vector>(xs.data(), d);
      atom.y = a.at("y").get<double>();
      atom.w = a.at("w").get<double>();
      atoms.push_back(std::move(atom));
    }
    return ObjectiveModel::create(kind, std::move(atoms), lambda, radius);
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model description: ") + e.what());
  }
}

ObjectiveModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string model_to_json(const ObjectiveModel& model) {
  json j;
  j["kind"] = to_string(model.kind());
  j["d"] = model.dim();
  j["lambda"] = model.lambda();
  j["radius"] = model.radius();
  j["atoms"] = json::array();
  for (const auto& a : model.atoms()) {
    j["atoms"].push_back({{"x", std::vector<double>(a.x.data(), a.x.data() + a.x.size())},
                          {"y", a.y},
                          {"w", a.w}});
  }
  return j.dump(2);
}

namespace {

constexpr const char* kQ1 = R"({
  "kind": "least_squares",
  "d": 1,
  "lambda": 0.0,
  "atoms": [
    {"x": [1.0], "y": 1.0, "w": 0.5},
    {"x": [1.0], "y": -1.0, "w": 0.5}
  ]
}
)";

constexpr const char* kL1 = R"({
  "kind": "logistic_l2",
  "d": 1,
  "lambda": 0.1,
  "atoms": [
    {"x": [1.0], "y": 1, "w": 0.7},
    {"x": [1.0], "y": -1, "w": 0.3}
  ]
}
)";

constexpr const char* kLms3 = R"({
  "kind": "least_squares",
  "d": 3,
  "lambda": 0.0,
  "radius": 1.0,
  "atoms": [
    {"x": [1.0, 0.0, 0.0],   "y": 0.5,  "w": 0.20},
    {"x": [0.0, 0.9, 0.0],   "y": -0.3, "w": 0.15},
    {"x": [0.0, 0.0, 0.8],   "y": 0.7,  "w": 0.15},
    {"x": [0.6, 0.6, 0.0],   "y": 1.0,  "w": 0.20},
    {"x": [0.0, 0.5, -0.7],  "y": -0.4, "w": 0.15},
    {"x": [0.5, -0.4, 0.6],  "y": 0.2,  "w": 0.15}
  ]
}
)";

}  // namespace

std::string builtin_model_json(const std::string& name) {
  if (name == "q1") return kQ1;
  if (name == "l1") return kL1;
  if (name == "lms3") return kLms3;
  throw ModelError("unknown built-in model '" + name + "'");
}

ObjectiveModel builtin_model(const std::string& name) { return parse_model(builtin_model_json(name)); }

std::string describe_model(const ObjectiveModel& model) {
  const auto& c = model.constants();
  std::ostringstream os;
  os << std::setprecision(12);
  os << "kind          " << to_string(model.kind()) << "\n"
     << "d             " << model.dim() << "\n"
     << "atoms         " << model.num_atoms() << "\n"
     << "lambda        " << model.lambda() << "\n"
     << "mu            " << c.mu << "\n"
     << "mu_global     " << c.mu_global << "\n"
     << "L             " << c.L << "\n"
     << "L_cocoercive  " << c.L_cocoercive << "\n"
     << "R2            " << c.R2 << "\n"
     << "tau2^2        " << c.tau2_sq << "\n";
  if (model.kind() == LossKind::kLeastSquares) os << "r2            " << c.r2 << "\n";
  os << "theta*        [";
  for (int i = 0; i < model.dim(); ++i) os << (i ? ", " : "") << model.optimum()(i);
  os << "]\n"
     << "f(theta*)     " << model.optimal_value() << "\n"
     << "max step 2/L  " << 2.0 / c.L << "\n";
  const AssumptionReport rep = check_assumptions(model);
  os << "A1 strong convexity      " << (rep.strongly_convex ? "ok" : "FAILED") << "\n"
     << "A2 smoothness            ok\n"
     << "A3 unbiasedness residual " << rep.unbiasedness_residual << "\n"
     << "A4 co-coercivity slack   " << rep.cocoercivity_violation
     << (rep.cocoercivity_violation >= -1e-9 ? " (ok)" : " (VIOLATED)") << "\n"
     << "A5 noise regularity      ok\n";
  for (const auto& n : rep.notes) os << "  note: " << n << "\n";
  return os.str();
}

}  // namespace sgdlab
