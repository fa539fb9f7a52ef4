#include "tdvar/config.hpp"

#include "tdvar/io.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <set>
#include <sstream>

namespace tdvar {

namespace {

class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.IsMap()) throw ConfigError("config: '" + name_ + "' must be a mapping");
  }

  template <class T>
  T get(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) throw ConfigError("config: missing field '" + name_ + "." + key + "'");
    try {
      return v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config: field '" + name_ + "." + key + "' has the wrong type");
    }
  }

  template <class T>
  std::vector<T> list(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) throw ConfigError("config: missing field '" + name_ + "." + key + "'");
    if (!v.IsSequence() || v.size() == 0) throw ConfigError("config: field '" + name_ + "." + key + "' must be a nonempty list");
    std::vector<T> out;
    try {
      for (const auto& e : v) out.push_back(e.as<T>());
    } catch (const YAML::Exception&) {
      throw ConfigError("config: field '" + name_ + "." + key + "' has the wrong element type");
    }
    return out;
  }

  Parameter parameter(const std::string& key) {
    const auto v = list<double>(key);
    if (v.size() != 2) throw ConfigError("config: field '" + name_ + "." + key + "' must have two entries");
    return Eigen::Map<const Vector>(v.data(), 2);
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) throw ConfigError("config: missing field '" + name_ + "." + key + "'");
    return Section(v, name_ + "." + key);
  }

  /// Rejects keys that were never requested.
  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("config: unknown field '" + name_ + "." + key + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("config: field '" + field + "' " + what);
}

bool in_box(const Parameter& mu) { return mu.size() == 2 && (mu.array() >= 0.1).all() && (mu.array() <= 10.0).all(); }

void validate(const ExperimentConfig& c) {
  check(c.mesh.nx >= 4 && c.mesh.ny >= 4 && c.mesh.nx % 4 == 0 && c.mesh.ny % 4 == 0, "mesh.nx/ny",
        "must be positive multiples of 4");
  check(c.model.poly_degree >= 0 && c.model.poly_degree <= 7, "model.poly_degree", "must lie in [0, 7]");
  check(in_box(c.model.mu_true), "model.mu_true", "must lie in [0.1, 10]^2");
  const auto& m = c.measurement;
  check(m.library_n >= 1, "measurement.library_n", "must be positive");
  check(m.library_lo >= 0.0 && m.library_lo < m.library_hi && m.library_hi <= 1.0, "measurement.library_lo/hi",
        "must satisfy 0 <= lo < hi <= 1");
  check(m.sigma > 0.0, "measurement.sigma", "must be positive");
  check(m.beta0 > 0.0 && m.beta0 <= 1.0, "measurement.beta0", "must lie in (0, 1]");
  check(m.l_max >= 1, "measurement.l_max", "must be positive");
  check(m.training_n >= 1, "measurement.training_n", "must be positive");
  check(c.rb.state_tol > 0.0, "rb.state_tol", "must be positive");
  check(c.rb.adjoint_tol > 0.0, "rb.adjoint_tol", "must be positive");
  check(c.rb.state_training_n >= 1, "rb.state_training_n", "must be positive");
  check(c.rb.adjoint_training_count >= 1, "rb.adjoint_training_count", "must be positive");
  check(c.rb.n_max >= 1, "rb.n_max", "must be positive");
  check(c.rb.drop_tol > 0.0 && c.rb.drop_tol < 1.0, "rb.drop_tol", "must lie in (0, 1)");
  const auto& r = c.run;
  for (double l : r.lambdas) check(l > 0.0 && std::isfinite(l), "run.lambdas", "must be positive");
  check(r.noise_sigma >= 0.0, "run.noise_sigma", "must be nonnegative");
  check(r.seeds >= 2, "run.seeds", "must be at least 2");
  for (int k : r.costs) check(k >= 1 && k <= 3, "run.costs", "must be 1, 2 or 3");
  check(r.solver == "rb" || r.solver == "truth", "run.solver", "must be 'rb' or 'truth'");
  check(in_box(r.start), "run.start", "must lie in [0.1, 10]^2");
  check(r.nm_tol > 0.0, "run.nm_tol", "must be positive");
  check(r.nm_step > 0.0, "run.nm_step", "must be positive");
  check(r.max_eval >= 3, "run.max_eval", "must be at least 3");
  check(r.bench_params >= 1, "run.bench_params", "must be positive");
  check(r.bench_repetitions >= 1, "run.bench_repetitions", "must be positive");
  check(r.stability_lambda_lo > 0.0 && r.stability_lambda_lo <= r.stability_lambda_hi, "run.stability_lambda_lo/hi",
        "must satisfy 0 < lo <= hi");
  check(r.stability_points >= 1, "run.stability_points", "must be positive");
  check(r.stability_grid >= 1, "run.stability_grid", "must be positive");
  check(!c.output.empty(), "output", "must not be empty");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) {
    validate(c);
    return c;
  }
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  std::set<std::string> known = {"mesh", "model", "measurement", "rb", "run", "output"};
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  if (root["mesh"]) {
    Section s(root["mesh"], "mesh");
    c.mesh.nx = s.get<int>("nx");
    c.mesh.ny = s.get<int>("ny");
    s.finish();
  }
  if (root["model"]) {
    Section s(root["model"], "model");
    c.model.poly_degree = s.get<int>("poly_degree");
    c.model.mu_true = s.parameter("mu_true");
    Section u = s.sub("u_true");
    c.model.u_true_mean = u.get<double>("mean");
    c.model.u_true_amplitude = u.get<double>("amplitude");
    u.finish();
    s.finish();
  }
  if (root["measurement"]) {
    Section s(root["measurement"], "measurement");
    c.measurement.library_n = s.get<int>("library_n");
    c.measurement.library_lo = s.get<double>("library_lo");
    c.measurement.library_hi = s.get<double>("library_hi");
    c.measurement.sigma = s.get<double>("sigma");
    c.measurement.beta0 = s.get<double>("beta0");
    c.measurement.l_max = s.get<int>("l_max");
    c.measurement.training_n = s.get<int>("training_n");
    c.measurement.pair_mode = s.get<bool>("pair_mode");
    s.finish();
  }
  if (root["rb"]) {
    Section s(root["rb"], "rb");
    c.rb.state_tol = s.get<double>("state_tol");
    c.rb.state_training_n = s.get<int>("state_training_n");
    c.rb.adjoint_tol = s.get<double>("adjoint_tol");
    c.rb.adjoint_training_count = s.get<int>("adjoint_training_count");
    c.rb.n_max = s.get<int>("n_max");
    c.rb.drop_tol = s.get<double>("drop_tol");
    s.finish();
  }
  if (root["run"]) {
    Section s(root["run"], "run");
    c.run.lambdas = s.list<double>("lambdas");
    c.run.noise_sigma = s.get<double>("noise_sigma");
    c.run.seed = s.get<std::uint64_t>("seed");
    c.run.seeds = s.get<int>("seeds");
    c.run.costs = s.list<int>("costs");
    c.run.solver = s.get<std::string>("solver");
    c.run.start = s.parameter("start");
    c.run.nm_tol = s.get<double>("nm_tol");
    c.run.nm_step = s.get<double>("nm_step");
    c.run.max_eval = s.get<int>("max_eval");
    c.run.bench_params = s.get<int>("bench_params");
    c.run.bench_repetitions = s.get<int>("bench_repetitions");
    c.run.stability_lambda_lo = s.get<double>("stability_lambda_lo");
    c.run.stability_lambda_hi = s.get<double>("stability_lambda_hi");
    c.run.stability_points = s.get<int>("stability_points");
    c.run.stability_grid = s.get<int>("stability_grid");
    s.finish();
  }
  if (root["output"]) {
    try {
      c.output = root["output"].as<std::string>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config: field 'output' has the wrong type");
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text);
}

std::string config_to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto seq = [&](const auto& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (auto x : v) out << x;
    out << YAML::EndSeq;
  };
  auto param = [&](const Parameter& mu) { seq(std::vector<double>(mu.data(), mu.data() + mu.size())); };
  out << YAML::BeginMap;
  out << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "nx" << YAML::Value << c.mesh.nx;
  out << YAML::Key << "ny" << YAML::Value << c.mesh.ny;
  out << YAML::EndMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "poly_degree" << YAML::Value << c.model.poly_degree;
  out << YAML::Key << "mu_true" << YAML::Value;
  param(c.model.mu_true);
  out << YAML::Key << "u_true" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mean" << YAML::Value << c.model.u_true_mean;
  out << YAML::Key << "amplitude" << YAML::Value << c.model.u_true_amplitude;
  out << YAML::EndMap << YAML::EndMap;
  const auto& m = c.measurement;
  out << YAML::Key << "measurement" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "library_n" << YAML::Value << m.library_n;
  out << YAML::Key << "library_lo" << YAML::Value << m.library_lo;
  out << YAML::Key << "library_hi" << YAML::Value << m.library_hi;
  out << YAML::Key << "sigma" << YAML::Value << m.sigma;
  out << YAML::Key << "beta0" << YAML::Value << m.beta0;
  out << YAML::Key << "l_max" << YAML::Value << m.l_max;
  out << YAML::Key << "training_n" << YAML::Value << m.training_n;
  out << YAML::Key << "pair_mode" << YAML::Value << m.pair_mode;
  out << YAML::EndMap;
  out << YAML::Key << "rb" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "state_tol" << YAML::Value << c.rb.state_tol;
  out << YAML::Key << "state_training_n" << YAML::Value << c.rb.state_training_n;
  out << YAML::Key << "adjoint_tol" << YAML::Value << c.rb.adjoint_tol;
  out << YAML::Key << "adjoint_training_count" << YAML::Value << c.rb.adjoint_training_count;
  out << YAML::Key << "n_max" << YAML::Value << c.rb.n_max;
  out << YAML::Key << "drop_tol" << YAML::Value << c.rb.drop_tol;
  out << YAML::EndMap;
  const auto& r = c.run;
  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambdas" << YAML::Value;
  seq(r.lambdas);
  out << YAML::Key << "noise_sigma" << YAML::Value << r.noise_sigma;
  out << YAML::Key << "seed" << YAML::Value << r.seed;
  out << YAML::Key << "seeds" << YAML::Value << r.seeds;
  out << YAML::Key << "costs" << YAML::Value;
  seq(r.costs);
  out << YAML::Key << "solver" << YAML::Value << r.solver;
  out << YAML::Key << "start" << YAML::Value;
  param(r.start);
  out << YAML::Key << "nm_tol" << YAML::Value << r.nm_tol;
  out << YAML::Key << "nm_step" << YAML::Value << r.nm_step;
  out << YAML::Key << "max_eval" << YAML::Value << r.max_eval;
  out << YAML::Key << "bench_params" << YAML::Value << r.bench_params;
  out << YAML::Key << "bench_repetitions" << YAML::Value << r.bench_repetitions;
  out << YAML::Key << "stability_lambda_lo" << YAML::Value << r.stability_lambda_lo;
  out << YAML::Key << "stability_lambda_hi" << YAML::Value << r.stability_lambda_hi;
  out << YAML::Key << "stability_points" << YAML::Value << r.stability_points;
  out << YAML::Key << "stability_grid" << YAML::Value << r.stability_grid;
  out << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace tdvar
