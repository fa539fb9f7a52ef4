#pragma once

#include "tdvar/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tdvar {

/// Experiment settings. Defaults reproduce the thermal block study.
struct ExperimentConfig {
  struct Mesh {
    int nx = 64;
    int ny = 64;
  } mesh;

  struct ModelSettings {
    int poly_degree = 3;
    Parameter mu_true = (Parameter(2) << 7.0, 0.3).finished();
    /// u_true(x) = mean + amplitude sin(2 pi x).
    double u_true_mean = 1.5;
    double u_true_amplitude = 0.3;
  } model;

  struct Measurement {
    /// Gaussian library on a library_n x library_n grid over [library_lo, library_hi]^2.
    int library_n = 97;
    double library_lo = 0.02;
    double library_hi = 0.98;
    double sigma = 0.01;
    double beta0 = 0.5;
    int l_max = 30;
    /// Per-axis size of the OMP training grid.
    int training_n = 21;
    bool pair_mode = true;
  } measurement;

  struct Rb {
    double state_tol = 1e-5;
    int state_training_n = 41;
    double adjoint_tol = 1e-5;
    /// Number of boundary parameters of the adjoint training set.
    int adjoint_training_count = 40;
    int n_max = 300;
    double drop_tol = 1e-10;
  } rb;

  struct Run {
    std::vector<double> lambdas = {1.0, 10.0, 100.0, 1000.0};
    double noise_sigma = 0.01;
    std::uint64_t seed = 2019;
    int seeds = 100;
    std::vector<int> costs = {1, 2, 3};
    std::string solver = "rb";
    Parameter start = (Parameter(2) << 1.0, 1.0).finished();
    double nm_tol = 1e-12;
    double nm_step = 0.25;
    int max_eval = 2000;
    int bench_params = 200;
    int bench_repetitions = 5;
    /// Lambda grid of the stability report: stability_points values log-spaced on [lo, hi].
    double stability_lambda_lo = 0.1;
    double stability_lambda_hi = 1e4;
    int stability_points = 11;
    int stability_grid = 5;
  } run;

  std::string output = "out";
};

/// Parses YAML (or JSON) text. Every section is optional and takes its defaults when absent;
/// a present section must list all of its fields. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical YAML rendering; parse_config(config_to_yaml(c)) reproduces c.
std::string config_to_yaml(const ExperimentConfig& config);

}  // namespace tdvar
