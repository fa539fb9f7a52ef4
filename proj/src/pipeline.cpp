#include "tdvar/pipeline.hpp"

#include "tdvar/io.hpp"

#include <json.hpp>

#include <chrono>
#include <ostream>

namespace tdvar {

namespace {

using json = nlohmann::ordered_json;

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json parameter_json(const Parameter& mu) { return std::vector<double>(mu.data(), mu.data() + mu.size()); }

json greedy_json(const GreedyResult& g) {
  json steps = json::array();
  for (const auto& s : g.steps) steps.push_back({{"mu", parameter_json(s.mu)}, {"rhs", s.rhs}, {"estimator", s.estimator}});
  return {{"dim", g.basis.cols()}, {"converged", g.converged}, {"max_estimator", g.max_estimator}, {"steps", steps}};
}

}  // namespace

Model build_model(const ExperimentConfig& config) {
  ThermalBlockOptions o;
  o.nx = config.mesh.nx;
  o.ny = config.mesh.ny;
  o.poly_degree = config.model.poly_degree;
  o.mu_true = config.model.mu_true;
  o.u_true_mean = config.model.u_true_mean;
  o.u_true_amplitude = config.model.u_true_amplitude;
  return make_thermal_block(o);
}

OfflineResult run_offline(const Model& model, const ExperimentConfig& config, std::ostream* log) {
  auto say = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };
  const Matrix u_basis = Matrix::Identity(model.control_dim(), model.control_dim());
  Stopwatch clock;
  StageTimings timings;

  GreedyOptions state_opts{config.rb.state_tol, config.rb.n_max, config.rb.drop_tol};
  GreedyResult state = weak_greedy_state(model, u_basis, model.domain.log_grid(config.rb.state_training_n), state_opts);
  timings.emplace_back("state_greedy", clock.lap());
  say("state space: dim " + std::to_string(state.basis.cols()) + (state.converged ? "" : " (not converged)"));

  const auto& m = config.measurement;
  const FunctionalLibrary library = gaussian_library(*model.space, m.library_n, m.library_lo, m.library_hi, m.sigma);
  timings.emplace_back("library", clock.lap());
  OmpOptions omp_opts;
  omp_opts.beta0 = m.beta0;
  omp_opts.l_max = m.l_max;
  omp_opts.pair_mode = m.pair_mode;
  OmpResult omp = greedy_omp(model, state.basis, u_basis, library, model.domain.log_grid(m.training_n), omp_opts);
  timings.emplace_back("omp", clock.lap());
  say("sensors: " + std::to_string(omp.ms.size()) + ", beta " + std::to_string(omp.beta) +
      (omp.reached_target ? "" : " (target not reached)"));

  GreedyOptions adj_opts{config.rb.adjoint_tol, config.rb.n_max, config.rb.drop_tol};
  GreedyResult adjoint =
      build_adjoint_space(model, omp.ms, model.domain.log_boundary(config.rb.adjoint_training_count), adj_opts);
  timings.emplace_back("adjoint_greedy", clock.lap());
  say("adjoint space: dim " + std::to_string(adjoint.basis.cols()) + (adjoint.converged ? "" : " (not converged)"));

  GreedyResult merged = merge_spaces(*model.space, {&state, &adjoint}, config.rb.drop_tol);
  RBSpaces rb = build_rb_spaces(model, omp.ms, u_basis, merged.basis, merged.tags);
  timings.emplace_back("rb_assembly", clock.lap());
  say("reduced spaces: dim U_R " + std::to_string(rb.u_dim()) + ", dim Y_R " + std::to_string(rb.y_dim()));
  return OfflineResult{std::move(state), std::move(omp), std::move(adjoint), std::move(merged), std::move(rb),
                       std::move(timings)};
}

void save_measurement_space(const MeasurementSpace& ms, const std::filesystem::path& dir) {
  write_matrix_market(dir / "functionals.mtx", SparseMatrix(ms.functionals().sparseView()));
  json sensors = json::array();
  for (const auto& s : ms.sensors()) sensors.push_back({{"x", s.x}, {"y", s.y}, {"sigma", s.sigma}});
  json j = {{"format", "tdvar-measurement/1"}, {"count", ms.size()}, {"sensors", sensors}};
  atomic_write(dir / "measurement.json", j.dump(2) + "\n");
}

MeasurementSpace load_measurement_space(std::shared_ptr<const FESpace> space, const std::filesystem::path& dir) {
  const json j = json::parse(read_file(dir / "measurement.json"));
  if (j.at("format") != "tdvar-measurement/1") throw std::runtime_error("measurement.json: unsupported format");
  const Matrix g = read_matrix_market(dir / "functionals.mtx");
  if (g.rows() != space->dim()) throw std::runtime_error("measurement functionals do not match the FE space");
  std::vector<Vector> functionals;
  std::vector<SensorSpec> sensors;
  for (Eigen::Index l = 0; l < g.cols(); ++l) {
    functionals.push_back(g.col(l));
    const auto& s = j.at("sensors").at(static_cast<std::size_t>(l));
    auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
    sensors.push_back({num(s.at("x")), num(s.at("y")), num(s.at("sigma"))});
  }
  return MeasurementSpace::build(std::move(space), functionals, sensors);
}

void save_offline(const OfflineResult& r, const ExperimentConfig& config, const std::filesystem::path& dir) {
  save_measurement_space(r.omp.ms, dir / "measurement");
  save_rb_spaces(r.rb, dir / "rb");
  atomic_write(dir / "omp_trace.csv", omp_trace_to_csv(r.omp));

  json manifest;
  manifest["format"] = "tdvar-offline/1";
  manifest["config"] = config_to_yaml(config);
  manifest["seed"] = config.run.seed;
  manifest["dims"] = {{"U", r.rb.u_basis.rows()},
                      {"U_R", r.rb.u_dim()},
                      {"T", r.omp.ms.size()},
                      {"Y_y", r.state.basis.cols()},
                      {"Y_p", r.adjoint.basis.cols()},
                      {"Y_R", r.rb.y_dim()},
                      {"N", r.rb.y_basis.rows()}};
  manifest["state_greedy"] = greedy_json(r.state);
  manifest["adjoint_greedy"] = greedy_json(r.adjoint);
  manifest["omp"] = {{"selected", r.omp.selected},
                     {"skipped", r.omp.skipped},
                     {"beta", r.omp.beta},
                     {"reached_target", r.omp.reached_target}};
  manifest["files"] = {{"measurement", "measurement/measurement.json"},
                       {"functionals", "measurement/functionals.mtx"},
                       {"rb", "rb/manifest.json"},
                       {"omp_trace", "omp_trace.csv"},
                       {"timing", "timing.json"}};
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

  json timing = json::object();
  double total = 0.0;
  for (const auto& [stage, s] : r.timings) {
    timing[stage] = s;
    total += s;
  }
  timing["total"] = total;
  atomic_write(dir / "timing.json", timing.dump(2) + "\n");
}

OfflineArtifacts load_offline(const Model& model, const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.json")) {
    throw std::runtime_error("no offline artifacts in " + dir.string() + " (run the offline command first)");
  }
  OfflineArtifacts a{load_measurement_space(model.space, dir / "measurement"), load_rb_spaces(dir / "rb")};
  if (a.rb.y_basis.rows() != model.state_dim()) throw std::runtime_error("offline artifacts were built for another mesh");
  return a;
}

SyntheticData synthetic_data(const Model& model, const MeasurementSpace& ms) {
  SyntheticData d;
  d.y_true = model.manufacture_truth(model.mu_true, model.u_true);
  d.m_clean = ms.measure(d.y_true);
  return d;
}

}  // namespace tdvar
