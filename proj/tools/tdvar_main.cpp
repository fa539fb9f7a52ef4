#include "tdvar/config.hpp"
#include "tdvar/estimate.hpp"
#include "tdvar/io.hpp"
#include "tdvar/parallel.hpp"
#include "tdvar/pipeline.hpp"
#include "tdvar/rb.hpp"
#include "tdvar/stability.hpp"
#include "tdvar/truth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace tdvar;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::vector<double> lambdas;
  std::string mu;
  std::string cost;
  std::string solver;
  bool compare = false;
  int n_params = 0;
  int seeds = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Parameter parse_mu(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("--mu: cannot parse '" + item + "'");
    }
  }
  if (v.size() != 2) throw ConfigError("--mu expects two comma-separated values");
  return Eigen::Map<const Vector>(v.data(), 2);
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// Config with command-line overrides applied.
ExperimentConfig effective_config(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
  if (!o.out.empty()) c.output = o.out;
  if (o.seed) c.run.seed = *o.seed;
  if (!o.lambdas.empty()) {
    for (double l : o.lambdas) {
      if (!(l > 0.0)) throw ConfigError("--lambda must be positive");
    }
    c.run.lambdas = o.lambdas;
  }
  if (!o.cost.empty()) c.run.costs = {static_cast<int>(parse_cost_kind(o.cost))};
  if (!o.solver.empty()) {
    if (o.solver != "rb" && o.solver != "truth") throw ConfigError("--solver must be 'truth' or 'rb'");
    c.run.solver = o.solver;
  }
  if (o.seeds > 0) c.run.seeds = o.seeds;
  if (o.n_params > 0) c.run.bench_params = o.n_params;
  return c;
}

json run_metadata(const std::string& command, const ExperimentConfig& c) {
  return {{"command", command},
          {"seed", c.run.seed},
          {"noise_generator", kNoiseGenerator},
          {"config", config_to_yaml(c)}};
}

NelderMeadOptions nm_options(const ExperimentConfig& c) { return {c.run.nm_step, c.run.nm_tol, c.run.max_eval}; }

int cmd_offline(const ExperimentConfig& c) {
  const fs::path dir = c.output;
  atomic_write(dir / "status.json", json({{"status", "running"}}).dump() + "\n");
  std::string stage = "model";
  try {
    const Model model = build_model(c);
    stage = "offline";
    const OfflineResult r = run_offline(model, c, &std::cout);
    stage = "save";
    save_offline(r, c, dir);
  } catch (const std::exception& e) {
    atomic_write(dir / "status.json", json({{"status", "failed"}, {"stage", stage}, {"message", e.what()}}).dump() + "\n");
    throw;
  }
  atomic_write(dir / "status.json", json({{"status", "complete"}}).dump() + "\n");
  std::cout << "offline artifacts written to " << dir.string() << "\n";
  return 0;
}

/// Data coordinates of the (noisy) synthetic measurements; noise stream 0 of the base seed.
Vector run_data(const ExperimentConfig& c, const MeasurementSpace& ms, const SyntheticData& data) {
  const Vector m = c.run.noise_sigma > 0.0 ? add_noise(data.m_clean, c.run.noise_sigma, c.run.seed, 0) : data.m_clean;
  return ms.data_coords(m);
}

int cmd_solve(const ExperimentConfig& c, const Options& o) {
  const Model model = build_model(c);
  const OfflineArtifacts art = load_offline(model, c.output);
  const Parameter mu = o.mu.empty() ? c.model.mu_true : parse_mu(o.mu);
  model.domain.require(mu);
  const double lambda = o.lambdas.empty() ? 100.0 : o.lambdas.front();
  const SyntheticData data = synthetic_data(model, art.ms);
  const Vector cd = run_data(c, art.ms, data);
  const fs::path dir = fs::path(c.output) / "solve";
  json meta = run_metadata("solve", c);
  meta["mu"] = vec_json(mu);
  meta["lambda"] = lambda;
  meta["solver"] = c.run.solver;
  if (c.run.solver == "truth") {
    const TruthSolver solver(model, art.ms);
    const SaddleSolution s = solver.solve(mu, lambda, cd);
    atomic_write(dir / "solution.json", solution_to_json(s, solver.check(s)) + "\n");
    std::cout << "truth cost " << s.cost << "\n";
  } else {
    const RBSolution s = solve_rb(art.rb, mu, lambda, cd);
    const ErrorBounds b = certify(art.rb, s);
    json j;
    j["mu"] = vec_json(s.mu);
    j["lambda"] = s.lambda;
    j["cost"] = s.cost;
    j["u"] = vec_json(lift_u(art.rb, s));
    j["d_coords"] = vec_json(s.d_coords);
    j["y_reduced"] = vec_json(s.y);
    j["p_reduced"] = vec_json(s.p);
    j["y"] = vec_json(lift_y(art.rb, s));
    atomic_write(dir / "solution.json", j.dump(1) + "\n");
    atomic_write(dir / "bounds.csv", bounds_to_csv({b}, {mu}));
    std::cout << "rb cost " << s.cost << ", bounds u " << b.delta_u << " y " << b.delta_y << " d " << b.delta_d << " p "
              << b.delta_p << "\n";
  }
  atomic_write(dir / "run.json", meta.dump(2) + "\n");
  return 0;
}

int cmd_stability(const ExperimentConfig& c, const Options& o) {
  const Model model = build_model(c);
  const OfflineArtifacts art = load_offline(model, c.output);
  std::vector<Parameter> mus;
  if (!o.mu.empty()) {
    mus.push_back(parse_mu(o.mu));
    model.domain.require(mus.back());
  } else {
    mus.push_back(c.model.mu_true);
    for (const auto& mu : model.domain.log_grid(c.run.stability_grid)) mus.push_back(mu);
  }
  std::vector<double> lambdas = o.lambdas;
  if (lambdas.empty()) {
    const int n = c.run.stability_points;
    const double lo = std::log10(c.run.stability_lambda_lo), hi = std::log10(c.run.stability_lambda_hi);
    for (int k = 0; k < n; ++k) lambdas.push_back(std::pow(10.0, n == 1 ? lo : lo + (hi - lo) * k / (n - 1)));
  }
  std::vector<std::vector<StabilityRow>> per_mu(mus.size());
  parallel_for(static_cast<int>(mus.size()), [&](int i) {
    const ResponseBasis basis = build_response_basis(model, art.ms, mus[static_cast<std::size_t>(i)]);
    for (double l : lambdas) per_mu[static_cast<std::size_t>(i)].push_back(stability_row(basis, l));
  });
  std::vector<StabilityRow> rows;
  for (auto& r : per_mu) rows.insert(rows.end(), r.begin(), r.end());
  const fs::path dir = fs::path(c.output) / "stability";
  atomic_write(dir / "stability.csv", stability_to_csv(rows));
  atomic_write(dir / "stability.json", run_metadata("stability", c).dump(2) + "\n");
  std::cout << "stability rows: " << rows.size() << "\n";
  return 0;
}

/// Truth and RB inner solvers over one set of data coordinates.
struct Solvers {
  const Model& model;
  const OfflineArtifacts& art;
  TruthSolver truth;

  Solvers(const Model& m, const OfflineArtifacts& a) : model(m), art(a), truth(m, a.ms) {}

  CostFunctional cost(CostKind kind, double lambda, const Vector& m, bool use_truth) const {
    const Vector cd = art.ms.data_coords(m);
    InnerSolver inner = use_truth ? truth_inner_solver(model, art.ms, truth, lambda, cd) : rb_inner_solver(art.rb, lambda, cd);
    return CostFunctional{kind, lambda, std::move(inner), m};
  }
};

EstimateRow estimate_row(const Solvers& s, const ExperimentConfig& c, const SyntheticData& data, CostKind kind, double lambda,
                         bool use_truth) {
  const CostFunctional cf = s.cost(kind, lambda, data.m_clean, use_truth);
  EstimateRow row;
  row.kind = kind;
  row.lambda = lambda;
  row.result = estimate_parameters(s.model.domain, cf, c.run.start, nm_options(c));
  row.log_distance = log_distance(row.result.mu_hat, c.model.mu_true);
  const InnerSolution at = cf.solver(row.result.mu_hat, true);
  row.errors = reconstruction_errors(s.model, data.y_true, at.u, at.y);
  return row;
}

int cmd_estimate(const ExperimentConfig& c, const Options& o) {
  const Model model = build_model(c);
  const OfflineArtifacts art = load_offline(model, c.output);
  const Solvers solvers(model, art);
  const SyntheticData data = synthetic_data(model, art.ms);
  const bool use_truth = c.run.solver == "truth";
  std::vector<EstimateRow> rows, other;
  for (int k : c.run.costs) {
    for (double lambda : c.run.lambdas) {
      rows.push_back(estimate_row(solvers, c, data, static_cast<CostKind>(k), lambda, use_truth));
      if (o.compare) other.push_back(estimate_row(solvers, c, data, static_cast<CostKind>(k), lambda, !use_truth));
      std::cout << to_string(rows.back().kind) << " lambda " << lambda << ": mu " << rows.back().result.mu_hat.transpose()
                << ", log distance " << rows.back().log_distance << "\n";
    }
  }
  const fs::path dir = fs::path(c.output) / "estimate";
  atomic_write(dir / ("estimates_" + c.run.solver + ".csv"), estimates_to_csv(rows));
  if (o.compare) {
    atomic_write(dir / (std::string("estimates_") + (use_truth ? "rb" : "truth") + ".csv"), estimates_to_csv(other));
    std::ostringstream os;
    os.precision(17);
    os << "# tdvar-estimate-comparison/1\n";
    os << "i,lambda,truth_rb_log_dist,truth_seconds,rb_seconds,speedup\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const EstimateRow& t = use_truth ? rows[r] : other[r];
      const EstimateRow& b = use_truth ? other[r] : rows[r];
      os << static_cast<int>(t.kind) << ',' << t.lambda << ',' << log_distance(t.result.mu_hat, b.result.mu_hat) << ','
         << t.result.seconds << ',' << b.result.seconds << ',' << t.result.seconds / b.result.seconds << '\n';
    }
    atomic_write(dir / "comparison.csv", os.str());
  }
  atomic_write(dir / "run.json", run_metadata("estimate", c).dump(2) + "\n");
  return 0;
}

int cmd_ensemble(const ExperimentConfig& c) {
  const Model model = build_model(c);
  const OfflineArtifacts art = load_offline(model, c.output);
  const Solvers solvers(model, art);
  const SyntheticData data = synthetic_data(model, art.ms);
  const bool use_truth = c.run.solver == "truth";
  std::vector<EnsembleRow> rows;
  for (int k : c.run.costs) {
    for (double lambda : c.run.lambdas) {
      const auto kind = static_cast<CostKind>(k);
      const EstimateResult reference =
          estimate_parameters(model.domain, solvers.cost(kind, lambda, data.m_clean, use_truth), c.run.start, nm_options(c));
      EnsembleRow row;
      row.kind = kind;
      row.lambda = lambda;
      row.sigma = c.run.noise_sigma;
      row.seeds = c.run.seeds;
      row.base_seed = c.run.seed;
      row.summary = noise_ensemble(
          model.domain, [&](const Vector& noisy) { return solvers.cost(kind, lambda, noisy, use_truth); }, data.m_clean,
          c.run.noise_sigma, c.run.seeds, c.run.seed, reference.mu_hat, c.run.start, nm_options(c));
      std::cout << to_string(kind) << " lambda " << lambda << ": mean distance " << row.summary.mean << " (min "
                << row.summary.min << ", max " << row.summary.max << ", failures " << row.summary.failures.size() << ")\n";
      rows.push_back(std::move(row));
    }
  }
  const fs::path dir = fs::path(c.output) / "ensemble";
  atomic_write(dir / "ensembles.csv", ensembles_to_csv(rows));
  atomic_write(dir / "run.json", run_metadata("ensemble", c).dump(2) + "\n");
  return 0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const ExperimentConfig& c, const Options& o) {
  const Model model = build_model(c);
  const OfflineArtifacts art = load_offline(model, c.output);
  const TruthSolver truth(model, art.ms);
  const SyntheticData data = synthetic_data(model, art.ms);
  const Vector cd = run_data(c, art.ms, data);
  const double lambda = o.lambdas.empty() ? 100.0 : o.lambdas.front();
  std::mt19937_64 rng(c.run.seed);
  const int reps = c.run.bench_repetitions;
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-bench/1\n";
  os << "mu1,mu2,truth_seconds,rb_solve_seconds,rb_bound_seconds\n";
  double sum_truth = 0.0, sum_solve = 0.0, sum_bound = 0.0;
  for (int i = 0; i < c.run.bench_params; ++i) {
    const Parameter mu = model.domain.sample(rng);
    std::vector<double> tt, ts, tb;
    double check = 0.0;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      check += truth.solve(mu, lambda, cd).cost;
      tt.push_back(seconds_since(t0));
    }
    for (int r = 0; r < reps; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      const RBSolution rs = solve_rb(art.rb, mu, lambda, cd);
      ts.push_back(seconds_since(t0));
      t0 = std::chrono::steady_clock::now();
      check += certify(art.rb, rs).delta_u;
      tb.push_back(seconds_since(t0));
    }
    if (!std::isfinite(check)) throw NumericalError("bench: non-finite result");
    const double a = median(tt), b = median(ts), d = median(tb);
    sum_truth += a;
    sum_solve += b;
    sum_bound += d;
    os << mu[0] << ',' << mu[1] << ',' << a << ',' << b << ',' << d << '\n';
  }
  const double n = c.run.bench_params;
  std::ostringstream summary;
  summary.precision(17);
  summary << "# tdvar-bench-summary/1\n";
  summary << "params,repetitions,N,truth_mean_seconds,rb_solve_mean_seconds,rb_bound_mean_seconds,speedup\n";
  summary << c.run.bench_params << ',' << reps << ',' << model.state_dim() << ',' << sum_truth / n << ',' << sum_solve / n
          << ',' << sum_bound / n << ',' << sum_truth / (sum_solve + sum_bound) << '\n';
  const fs::path dir = fs::path(c.output) / "bench";
  atomic_write(dir / "bench.csv", os.str());
  atomic_write(dir / "summary.csv", summary.str());
  atomic_write(dir / "run.json", run_metadata("bench", c).dump(2) + "\n");
  std::cout << "speedup " << sum_truth / (sum_solve + sum_bound) << " (truth " << 1e3 * sum_truth / n << " ms, rb "
            << 1e3 * (sum_solve + sum_bound) / n << " ms)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified reduced-basis 3D-VAR for the thermal block"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "YAML or JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output and artifact directory (overrides the config)");
  app.add_option("--seed", o.seed, "Base seed (overrides the config)");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--lambda", o.lambdas, "Regularization parameter(s)")->delimiter(',');
  app.add_option("--mu", o.mu, "Parameter as mu1,mu2");
  app.add_option("--cost", o.cost, "Cost functional")->check(CLI::IsMember({"j1", "j2", "j3"}));
  app.add_option("--solver", o.solver, "Inner solver")->check(CLI::IsMember({"truth", "rb"}));

  auto* offline = app.add_subcommand("offline", "Build measurement and reduced spaces");
  auto* solve = app.add_subcommand("solve", "Solve one 3D-VAR problem");
  auto* stability = app.add_subcommand("stability", "Stability constants over parameters and lambda");
  auto* estimate = app.add_subcommand("estimate", "Parameter estimation on noise-free data");
  estimate->add_flag("--compare", o.compare, "Also run the other solver and compare");
  auto* ensemble = app.add_subcommand("ensemble", "Parameter estimation under measurement noise");
  ensemble->add_option("--seeds", o.seeds, "Number of noise draws")->check(CLI::PositiveNumber);
  auto* bench = app.add_subcommand("bench", "Truth versus reduced online timing");
  bench->add_option("--params", o.n_params, "Number of random parameters")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_num_threads(o.threads);
    const ExperimentConfig c = effective_config(o);
    if (!o.mu.empty()) parse_mu(o.mu);
    if (offline->parsed()) return cmd_offline(c);
    if (solve->parsed()) return cmd_solve(c, o);
    if (stability->parsed()) return cmd_stability(c, o);
    if (estimate->parsed()) return cmd_estimate(c, o);
    if (ensemble->parsed()) return cmd_ensemble(c);
    if (bench->parsed()) return cmd_bench(c, o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
