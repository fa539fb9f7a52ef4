#pragma once

#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"

#include <string>

namespace tdvar {

/// Solution of the 3D-VAR optimality system for one (mu, lambda, data).
struct SaddleSolution {
  Parameter mu;
  double lambda = 0.0;
  /// Correction in U coefficients.
  Vector u;
  /// State and adjoint in FE coefficients.
  Vector y;
  Vector p;
  /// Misfit d = y_d - Pi y in orthonormal measurement coordinates.
  Vector d_coords;
  /// 1/2 |u|_U^2 + lambda/2 |d|_Y^2.
  double cost = 0.0;
  /// Relative residual of the block system, |r|_2 / |rhs|_2.
  double block_residual = 0.0;
};

/// Relative residuals of the three optimality identities.
struct OptimalityResiduals {
  /// U u - B0^T p against |U u| + |B0^T p|.
  double control = 0.0;
  /// A p - lambda K d against |A p| + lambda |K d|.
  double adjoint = 0.0;
  /// A y - f - B0 u against |A y| + |f| + |B0 u|.
  double state = 0.0;
};

/// Assembled operators of one optimality system: A(mu), B0(mu) (the b coupling), f(mu), the U
/// Gram matrix and S_hat (K times the orthonormal measurement representers).
struct SaddleBlocks {
  SparseMatrix a;
  Matrix b0;
  Vector f;
  Matrix u_mass;
  SparseMatrix s_hat;
};

/// Solves the optimality system for the given blocks; mu is left empty.
SaddleSolution solve_saddle_blocks(const SaddleBlocks& blocks, double lambda, const Vector& data_coords);

/// Full-order 3D-VAR solver.
///
/// The symmetric block system [U 0 B^T; 0 lambda P A; B A 0] with B = -B0 and P = S_hat S_hat^T
/// is solved through an equivalent sparse system that carries z = S_hat^T y as extra unknowns,
/// so the rank-L block P never has to be formed densely. The factorization is a sparse LU (KLU).
class TruthSolver {
 public:
  TruthSolver(const Model& model, const MeasurementSpace& ms);

  /// data_coords are the orthonormal coordinates of y_d (MeasurementSpace::data_coords).
  SaddleSolution solve(const Parameter& mu, double lambda, const Vector& data_coords) const;
  OptimalityResiduals check(const SaddleSolution& sol) const;

  /// Misfit as FE coefficients.
  Vector misfit(const SaddleSolution& sol) const { return ms_->lift(sol.d_coords); }

 private:
  const Model* model_;
  const MeasurementSpace* ms_;
  SparseMatrix s_hat_;
};

/// Orthonormal basis (columns) of the null space of m; singular values below rel_tol * sigma_max count as zero.
Matrix kernel_basis(const Matrix& m, double rel_tol = 1e-10);

/// U-orthonormal basis (U coefficients as columns) of the corrections whose response is invisible to the sensors.
Matrix nullspace_U0(const Model& model, const MeasurementSpace& ms, const Parameter& mu);

std::string solution_to_json(const SaddleSolution& sol, const OptimalityResiduals& residuals);

}  // namespace tdvar
