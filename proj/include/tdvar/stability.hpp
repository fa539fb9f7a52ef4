#pragma once

#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"

#include <string>
#include <vector>

namespace tdvar {

/// State responses y_m = A(mu)^{-1} B0 phi_m spanning Y_mu, with the Gram matrices that reduce
/// every stability constant on the M-dimensional space H0(mu) to a small eigenproblem.
struct ResponseBasis {
  Parameter mu;
  /// N x M responses; empty for hand-built Gram matrices.
  Matrix responses;
  /// Best-knowledge state at mu.
  Vector y_bk;
  /// U Gram matrix of the correction basis.
  Matrix g_u;
  /// Y Gram matrix of the responses.
  Matrix g_y;
  /// Y Gram matrix of the projected responses Pi y_m.
  Matrix g_proj;
};

ResponseBasis build_response_basis(const Model& model, const MeasurementSpace& ms, const Parameter& mu);

/// inf over Y_mu of |Pi y| / |y|, from the pencil (G_proj, G_y) restricted to range(G_y).
double kappa_T(const ResponseBasis& rb);

struct EtaRatios {
  double low = 0.0;
  double high = 0.0;
};

/// Minimal and maximal |y|_Y / |u|_U over H0(mu).
EtaRatios eta_ratios(const ResponseBasis& rb);

/// Piecewise lower bound on the H0-coercivity constant of the penalized quadratic form.
double alpha_A_lower_bound(double lambda, double eta_low, double eta_high, double kappa);

/// Exact H0-coercivity constant: lambda_min(G_u + lambda G_proj, G_u + G_y).
double delta_true(const ResponseBasis& rb, double lambda);

/// inf over span(u_basis) sup over span(w_basis) of b(u, w) / (|u|_U |w|_Y).
/// u_basis holds U coefficients (any basis); w_basis must be Y-orthonormal FE vectors.
double beta_b(const Model& model, const Parameter& mu, const Matrix& u_basis, const Matrix& w_basis);

/// Inf-sup of the measurement space over span{y_bk(mu), y_bk(nu), Y_mu, Y_nu}.
double beta_T_pair(const MeasurementSpace& ms, const ResponseBasis& rb_mu, const ResponseBasis& rb_nu);

struct BrezziBounds {
  /// Bound on |(u*, y*)|_H.
  double primal = 0.0;
  /// Bound on |p*|_Y.
  double adjoint = 0.0;
};

/// Stability bounds of the saddle problem with the inf-sup constant of the constraint replaced by
/// its lower bound alpha_a_lb; gamma_a = max{1, lambda}.
BrezziBounds brezzi_stability_coefficients(double alpha_a_lb, double gamma_a, double delta, double yd_norm,
                                           double f_dual_norm, double lambda);

struct StabilityRow {
  Parameter mu;
  double lambda = 0.0;
  double kappa = 0.0;
  double eta_low = 0.0;
  double eta_high = 0.0;
  double alpha_lb = 0.0;
  double delta = 0.0;
};

StabilityRow stability_row(const ResponseBasis& rb, double lambda);

/// CSV: mu1, mu2, lambda, kappa_T, eta_low, eta_high, alpha_A_LB, delta, delta_over_alpha.
std::string stability_to_csv(const std::vector<StabilityRow>& rows);

}  // namespace tdvar
