#pragma once

#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"

#include <string>
#include <vector>

namespace tdvar {

/// Candidate measurement functionals (sparse columns) with their sensor metadata.
struct FunctionalLibrary {
  SparseMatrix functionals;
  std::vector<SensorSpec> sensors;

  int size() const { return static_cast<int>(functionals.cols()); }
};

/// Gaussians of width sigma centered on an n x n regular grid over [lo, hi]^2; x varies fastest.
FunctionalLibrary gaussian_library(const FESpace& space, int n, double lo, double hi, double sigma);

struct OmpOptions {
  double beta0 = 0.5;
  /// Maximal number of selected functionals.
  int l_max = 30;
  /// Index of the first worst-case parameter in the training set; -1 selects the middle entry.
  int start = -1;
  /// Continue with the pair criterion once min kappa exceeds beta0.
  bool pair_mode = true;
};

struct OmpIteration {
  int size = 0;
  int library_index = -1;
  SensorSpec sensor;
  /// "kappa" or "pair": the criterion whose worst case chose this functional.
  std::string criterion;
  Parameter mu;
  /// Second parameter of the worst pair (empty in the kappa phase).
  Parameter nu;
  /// Minima over the training set after adding the functional (beta_pair_min is NaN when
  /// pair_mode is off).
  double kappa_min = 0.0;
  double beta_pair_min = 0.0;
};

struct OmpResult {
  MeasurementSpace ms;
  std::vector<int> selected;
  /// Library indices rejected as linearly dependent.
  std::vector<int> skipped;
  std::vector<OmpIteration> trace;
  /// Final value of the active criterion.
  double beta = 0.0;
  bool reached_target = false;
};

/// Greedy orthogonal matching pursuit over the library, driven by the worst reduced inf-sup
/// constant kappa_{T,R}(mu) on the training set and, in pair mode, afterwards by the worst
/// pair constant beta_{T,R}(mu, nu) over all unordered training pairs.
///
/// y_basis is a Y-orthonormal reduced state space (FE coefficients as columns) that
/// approximates the responses to u_basis and the best-knowledge state; all per-parameter
/// quantities are reduced Galerkin solutions in it.
OmpResult greedy_omp(const Model& model, const Matrix& y_basis, const Matrix& u_basis, const FunctionalLibrary& library,
                     const std::vector<Parameter>& training, const OmpOptions& options = {});

/// CSV: iteration, library_index, center_x, center_y, criterion, mu1, mu2, nu1, nu2, kappa_min, beta_pair_min.
std::string omp_trace_to_csv(const OmpResult& result);

}  // namespace tdvar
