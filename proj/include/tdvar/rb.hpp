#pragma once

#include "tdvar/greedy.hpp"
#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"
#include "tdvar/residual.hpp"
#include "tdvar/truth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tdvar {

/// Reduced spaces U_R, Y_R and every mu-independent quantity the online phase needs.
struct RBSpaces {
  ParameterDomain domain = ParameterDomain::thermal_block();
  std::vector<std::string> theta_a;
  std::vector<std::string> theta_b;
  std::vector<std::string> theta_f;
  /// Norms of the b components as maps U -> Y' (for gamma_b^UB).
  std::vector<double> b_component_norms;

  /// M x M_R U coefficients, U-orthonormal; N x N_R FE coefficients, Y-orthonormal.
  Matrix u_basis;
  Matrix y_basis;
  std::vector<BasisTag> y_tags;

  /// Reduced forms: Z^T A_q Z, Z^T B_q E, Z^T f_q, E^T U E.
  std::vector<Matrix> a_r;
  std::vector<Matrix> b_r;
  std::vector<Vector> f_r;
  Matrix u_mass_r;
  /// Z^T S_hat (N_R x L): measurement coordinates of the state basis.
  Matrix s_r;
  /// G^T Z (L x N_R): raw measurement values of the state basis.
  Matrix g_r;

  /// Residual data. r_u lives in U' and is evaluated exactly: B_q^T Z (M x N_R), U E (M x M_R)
  /// and the Cholesky factor of the U Gram matrix.
  std::vector<Matrix> bt_z;
  Matrix u_mass_e;
  Matrix u_chol;
  /// Whitened coordinates of the Y' terms, ordered [f_q | B_q E | A_q Z | S_hat].
  Matrix residual_w;

  int u_dim() const { return static_cast<int>(u_basis.cols()); }
  int y_dim() const { return static_cast<int>(y_basis.cols()); }
  int measurement_count() const { return static_cast<int>(s_r.cols()); }

  Vector theta_a_at(const Parameter& mu) const;
  Vector theta_b_at(const Parameter& mu) const;
  Vector theta_f_at(const Parameter& mu) const;
  /// min-theta coercivity bound.
  double alpha_lb(const Parameter& mu) const;
  double gamma_b_ub(const Parameter& mu) const;
};

/// Assembles the online data for the given bases. The a components must be symmetric.
RBSpaces build_rb_spaces(const Model& model, const MeasurementSpace& ms, const Matrix& u_basis, const Matrix& y_basis,
                         std::vector<BasisTag> y_tags = {});

/// Reduced 3D-VAR solution in RB coordinates.
struct RBSolution {
  Parameter mu;
  double lambda = 0.0;
  Vector u;
  Vector y;
  Vector p;
  /// Misfit in orthonormal measurement coordinates.
  Vector d_coords;
  double cost = 0.0;
};

/// Solves the reduced optimality system by eliminating state and adjoint through the
/// Cholesky factor of A_R(mu): (I + lambda O^T O) u = lambda O^T (c_d - S_R^T y_0) with
/// O = S_R^T A_R^{-1} B_R, y = y_0 + A_R^{-1} B_R u and p = lambda A_R^{-1} S_R d.
RBSolution solve_rb(const RBSpaces& rb, const Parameter& mu, double lambda, const Vector& data_coords);

/// Lifted FE/U vectors of a reduced solution.
Vector lift_u(const RBSpaces& rb, const RBSolution& sol);
Vector lift_y(const RBSpaces& rb, const RBSolution& sol);
Vector lift_p(const RBSpaces& rb, const RBSolution& sol);
/// Raw measurement values g_l(y_R).
Vector measure_rb(const RBSpaces& rb, const RBSolution& sol);

struct ResidualNorms {
  double u = 0.0;
  double p = 0.0;
  double y = 0.0;
};

ResidualNorms residual_norms(const RBSpaces& rb, const RBSolution& sol);

struct ErrorBounds {
  ResidualNorms residuals;
  double alpha_lb = 0.0;
  double gamma_b_ub = 0.0;
  double lambda = 0.0;
  double p_u = 0.0;
  double q_u = 0.0;
  double p_d = 0.0;
  double q_d = 0.0;
  double delta_u = 0.0;
  double delta_y = 0.0;
  double delta_d = 0.0;
  double delta_p = 0.0;
};

ErrorBounds error_bounds(const ResidualNorms& norms, double alpha_lb, double gamma_b_ub, double lambda);

/// Residual norms and bounds at the solution's parameter.
ErrorBounds certify(const RBSpaces& rb, const RBSolution& sol);

/// Writes the spaces as a directory: manifest.json plus Matrix Market files.
void save_rb_spaces(const RBSpaces& rb, const std::filesystem::path& dir);
RBSpaces load_rb_spaces(const std::filesystem::path& dir);

/// CSV with one row per reduced solution: mu, lambda, residual norms, bounds.
std::string bounds_to_csv(const std::vector<ErrorBounds>& bounds, const std::vector<Parameter>& mus);

}  // namespace tdvar
