#pragma once

#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"
#include "tdvar/rb.hpp"
#include "tdvar/truth.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tdvar {

/// J1 = 1/2 |u|_U^2 + lambda/2 |d|_Y^2, J2 = 1/2 |m - g(y)|_2^2, J3 = 1/2 |d|_Y^2.
enum class CostKind { J1 = 1, J2 = 2, J3 = 3 };

/// Accepts "j1".."j3" or "1".."3".
CostKind parse_cost_kind(const std::string& s);
std::string to_string(CostKind kind);

/// The parts of an inner 3D-VAR solution that the costs and reports need.
struct InnerSolution {
  /// Correction in U coefficients.
  Vector u;
  /// State in FE coefficients (empty unless requested).
  Vector y;
  Vector d_coords;
  /// g_l(y) for every measurement functional.
  Vector measured;
  double u_norm_sq = 0.0;
};

/// mu -> inner solution for fixed lambda and data; with_state asks for the FE state.
using InnerSolver = std::function<InnerSolution(const Parameter& mu, bool with_state)>;

/// The referenced objects must outlive the returned solver.
InnerSolver truth_inner_solver(const Model& model, const MeasurementSpace& ms, const TruthSolver& solver, double lambda,
                               const Vector& data_coords);
InnerSolver rb_inner_solver(const RBSpaces& rb, double lambda, const Vector& data_coords);

double cost_value(CostKind kind, double lambda, const InnerSolution& s, const Vector& measurements);

struct CostFunctional {
  CostKind kind = CostKind::J3;
  double lambda = 1.0;
  InnerSolver solver;
  /// Raw measurement values (used by J2).
  Vector measurements;

  double operator()(const Parameter& mu) const;
};

struct NelderMeadOptions {
  /// Initial simplex: start plus step along each coordinate.
  double step = 0.25;
  /// Convergence when max |x_i - x_best|_inf <= tol and max |f_i - f_best| <= tol.
  double tol = 1e-12;
  /// Hard cap on function evaluations; the best vertex is returned unconverged when reached.
  int max_eval = 2000;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  /// Best value after every iteration.
  std::vector<double> trace;
};

/// Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2) on the box
/// [lower, upper]; trial points are clamped to the box.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start, const Vector& lower,
                             const Vector& upper, const NelderMeadOptions& options = {});

struct EstimateResult {
  Parameter mu_hat;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  double seconds = 0.0;
  std::vector<double> trace;
};

/// Minimizes the cost over the parameter box in log10 coordinates.
EstimateResult estimate_parameters(const ParameterDomain& domain, const CostFunctional& cost, const Parameter& start,
                                   const NelderMeadOptions& options = {});

/// Distances of the reconstruction u_start + u and y from u_true and y_true.
struct ReconstructionErrors {
  double u = 0.0;
  double y = 0.0;
};

ReconstructionErrors reconstruction_errors(const Model& model, const Vector& y_true, const Vector& u, const Vector& y);

struct EnsembleSummary {
  std::vector<Parameter> estimates;
  /// Log distance of every successful estimate to the reference.
  std::vector<double> distances;
  /// Seeds (streams) whose estimate failed.
  std::vector<int> failures;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  /// Standard error of the mean distance.
  double std_error = 0.0;
  /// Log distance between the log-mean of the estimates and the reference.
  double mean_parameter_distance = 0.0;
};

/// Runs one estimate per noise draw add_noise(measurements, sigma, seed, k), k = 0..n-1, and
/// compares each with the reference estimate. make_cost builds the cost for noisy measurements.
EnsembleSummary noise_ensemble(const ParameterDomain& domain,
                               const std::function<CostFunctional(const Vector& noisy)>& make_cost,
                               const Vector& measurements, double sigma, int n_seeds, std::uint64_t seed,
                               const Parameter& reference, const Parameter& start, const NelderMeadOptions& options = {});

struct EstimateRow {
  CostKind kind = CostKind::J3;
  double lambda = 0.0;
  EstimateResult result;
  double log_distance = 0.0;
  ReconstructionErrors errors;
};

/// Columns: i, lambda, mu1, mu2, log_dist, evals, u_error, y_error, value, seconds.
std::string estimates_to_csv(const std::vector<EstimateRow>& rows);

struct EnsembleRow {
  CostKind kind = CostKind::J3;
  double lambda = 0.0;
  double sigma = 0.0;
  int seeds = 0;
  std::uint64_t base_seed = 0;
  EnsembleSummary summary;
};

/// Columns: i, lambda, sigma, seeds, base_seed, min, mean, max, std_error, failures.
std::string ensembles_to_csv(const std::vector<EnsembleRow>& rows);

}  // namespace tdvar
