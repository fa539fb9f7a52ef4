#pragma once

#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tdvar {

/// Family of coercive problems a(y, psi; mu) = f_j(psi; mu), one per right side f_j.
struct SnapshotProblem {
  AffineForm<SparseMatrix> a;
  std::vector<AffineForm<Vector>> rhs;
  /// Names of the right sides, used as provenance tags.
  std::vector<std::string> rhs_names;
  std::function<double(const Parameter&)> alpha_lb;
};

/// State snapshots: right sides f_bk(mu) and b(phi, .; mu) for every column phi of u_basis.
SnapshotProblem state_snapshot_problem(const Model& model, const Matrix& u_basis);

/// Adjoint snapshots: a(psi, w; mu) = <psi, tau_hat_l>_Y for every orthonormal measurement representer.
SnapshotProblem adjoint_snapshot_problem(const Model& model, const MeasurementSpace& ms);

struct GreedyOptions {
  double tol_rel = 1e-5;
  int n_max = 300;
  /// Relative drop tolerance of the snapshot orthonormalization.
  double drop_tol = 1e-10;
};

/// Origin of a basis vector.
struct BasisTag {
  std::string source;
  Parameter mu;
};

struct GreedyStep {
  Parameter mu;
  int rhs = 0;
  /// Estimator at (mu, rhs) before the snapshot was added.
  double estimator = 0.0;
};

struct GreedyResult {
  /// Y-orthonormal basis (FE coefficients as columns).
  Matrix basis;
  std::vector<BasisTag> tags;
  std::vector<GreedyStep> steps;
  /// Largest estimator over the training set for the returned basis.
  double max_estimator = 0.0;
  /// False when n_max was reached (or a snapshot added no new direction) before tol_rel.
  bool converged = false;
};

/// Weak greedy with the estimator |r|_{Y'} / (alpha_LB(mu) |y_R|_Y). The pair (mu, f_j) of largest
/// estimator is added until the maximum drops to tol_rel; exact ties go to the first training
/// parameter and then to the first right side.
GreedyResult weak_greedy(const FESpace& space, const SnapshotProblem& problem, const std::vector<Parameter>& training,
                         const GreedyOptions& options = {});

/// Estimator of the Galerkin approximation in span(basis) for every parameter (max over right sides).
std::vector<double> greedy_estimators(const FESpace& space, const SnapshotProblem& problem, const Matrix& basis,
                                      const std::vector<Parameter>& params);

GreedyResult weak_greedy_state(const Model& model, const Matrix& u_basis, const std::vector<Parameter>& training,
                               const GreedyOptions& options = {});

GreedyResult build_adjoint_space(const Model& model, const MeasurementSpace& ms, const std::vector<Parameter>& training,
                                 const GreedyOptions& options = {});

/// Y-orthonormal basis of the sum of the given spaces (concatenation in order, modified
/// Gram-Schmidt with drop tolerance). Tags follow the surviving columns.
GreedyResult merge_spaces(const FESpace& space, const std::vector<const GreedyResult*>& parts, double drop_tol = 1e-10);

}  // namespace tdvar
