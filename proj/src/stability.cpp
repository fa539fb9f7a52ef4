#include "tdvar/stability.hpp"

#include "tdvar/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace tdvar {

ResponseBasis build_response_basis(const Model& model, const MeasurementSpace& ms, const Parameter& mu) {
  ResponseBasis rb;
  rb.mu = mu;
  const StateSolver solver = model.state_solver(mu);
  const Matrix b0 = model.b_matrix(mu);
  rb.responses = solver.solve(b0);
  rb.y_bk = solver.solve(model.f_vector(mu));
  rb.g_u = model.u_mass;
  rb.g_y = rb.responses.transpose() * (model.space->gram() * rb.responses);
  const Matrix projected = ms.orthonormal_loads().transpose() * rb.responses;
  rb.g_proj = projected.transpose() * projected;
  return rb;
}

double kappa_T(const ResponseBasis& rb) {
  if (!(rb.g_y.trace() > 0.0)) throw std::invalid_argument("kappa_T: response Gram matrix is zero");
  const GeneralizedEigen ge = generalized_eigen(rb.g_proj, rb.g_y, 1e-12);
  if (ge.rank == 0) throw std::invalid_argument("kappa_T: response Gram matrix is zero");
  return std::sqrt(std::clamp(ge.values[0], 0.0, 1.0));
}

EtaRatios eta_ratios(const ResponseBasis& rb) {
  const GeneralizedEigen ge = generalized_eigen(rb.g_y, rb.g_u, 1e-12);
  if (ge.rank < rb.g_u.rows()) throw std::invalid_argument("eta_ratios: U Gram matrix is not positive definite");
  return {std::sqrt(std::max(0.0, ge.values[0])), std::sqrt(std::max(0.0, ge.values[ge.values.size() - 1]))};
}

double alpha_A_lower_bound(double lambda, double eta_low, double eta_high, double kappa) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("alpha_A_lower_bound: lambda must be nonnegative");
  if (!(eta_low >= 0.0) || !(eta_low <= eta_high)) {
    throw std::invalid_argument("alpha_A_lower_bound: need 0 <= eta_low <= eta_high");
  }
  if (!(kappa >= 0.0) || !(kappa <= 1.0 + 1e-12)) throw std::invalid_argument("alpha_A_lower_bound: kappa must lie in [0, 1]");
  const double lk2 = lambda * kappa * kappa;
  const double eta = lk2 <= 1.0 ? eta_high : eta_low;
  return (1.0 + lk2 * eta * eta) / (1.0 + eta * eta);
}

double delta_true(const ResponseBasis& rb, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("delta_true: lambda must be nonnegative");
  const GeneralizedEigen ge = generalized_eigen(rb.g_u + lambda * rb.g_proj, rb.g_u + rb.g_y, 1e-12);
  return ge.values[0];
}

double beta_b(const Model& model, const Parameter& mu, const Matrix& u_basis, const Matrix& w_basis) {
  if (u_basis.cols() == 0 || w_basis.cols() == 0) throw std::invalid_argument("beta_b: bases must be nonempty");
  if (w_basis.cols() < u_basis.cols()) return 0.0;
  const Matrix gram = u_basis.transpose() * model.u_mass * u_basis;
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("beta_b: U basis is linearly dependent");
  Matrix coupling = w_basis.transpose() * (model.b_matrix(mu) * u_basis);
  // Right-multiply by L^{-T} so the columns refer to a U-orthonormal basis of V.
  coupling = llt.matrixU().transpose().solve(coupling.transpose()).transpose();
  return smallest_singular_value(coupling);
}

double beta_T_pair(const MeasurementSpace& ms, const ResponseBasis& rb_mu, const ResponseBasis& rb_nu) {
  GramSchmidt q(ms.space().gram(), 1e-10);
  auto add = [&](const Vector& v) {
    if (v.norm() > 0.0) q.add(v);
  };
  add(rb_mu.y_bk);
  add(rb_nu.y_bk);
  for (Eigen::Index k = 0; k < rb_mu.responses.cols(); ++k) add(rb_mu.responses.col(k));
  for (Eigen::Index k = 0; k < rb_nu.responses.cols(); ++k) add(rb_nu.responses.col(k));
  if (q.size() == 0) throw std::invalid_argument("beta_T_pair: all spanning vectors vanish");
  const Matrix projected = ms.orthonormal_loads().transpose() * q.basis();
  return smallest_singular_value(projected);
}

BrezziBounds brezzi_stability_coefficients(double alpha_a_lb, double gamma_a, double delta, double yd_norm,
                                           double f_dual_norm, double lambda) {
  if (!(delta > 0.0)) throw std::invalid_argument("brezzi_stability_coefficients: delta must be positive");
  if (!(alpha_a_lb > 0.0) || !(gamma_a > 0.0) || yd_norm < 0.0 || f_dual_norm < 0.0 || lambda < 0.0) {
    throw std::invalid_argument("brezzi_stability_coefficients: invalid arguments");
  }
  const double beta = alpha_a_lb;
  const double factor = gamma_a / delta + 1.0;
  BrezziBounds out;
  out.primal = lambda * yd_norm / delta + f_dual_norm / beta * factor;
  out.adjoint = lambda * yd_norm / beta * factor + gamma_a * f_dual_norm / (beta * beta) * factor;
  return out;
}

StabilityRow stability_row(const ResponseBasis& rb, double lambda) {
  StabilityRow row;
  row.mu = rb.mu;
  row.lambda = lambda;
  row.kappa = kappa_T(rb);
  const EtaRatios eta = eta_ratios(rb);
  row.eta_low = eta.low;
  row.eta_high = eta.high;
  row.alpha_lb = alpha_A_lower_bound(lambda, eta.low, eta.high, row.kappa);
  row.delta = delta_true(rb, lambda);
  return row;
}

std::string stability_to_csv(const std::vector<StabilityRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-stability/1\n";
  os << "mu1,mu2,lambda,kappa_T,eta_low,eta_high,alpha_A_LB,delta,delta_over_alpha\n";
  for (const auto& r : rows) {
    os << r.mu[0] << ',' << (r.mu.size() > 1 ? r.mu[1] : 0.0) << ',' << r.lambda << ',' << r.kappa << ','
       << r.eta_low << ',' << r.eta_high << ',' << r.alpha_lb << ',' << r.delta << ',' << r.delta / r.alpha_lb
       << '\n';
  }
  return os.str();
}

}  // namespace tdvar
