#pragma once

#include "tdvar/fe_space.hpp"
#include "tdvar/types.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace tdvar {

/// Box of admissible parameters. Grids and distances use base-10 logarithms per component.
class ParameterDomain {
 public:
  ParameterDomain(Vector lower, Vector upper);
  /// [1/10, 10]^2.
  static ParameterDomain thermal_block();

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector log_lower() const { return lower_.array().log10(); }
  Vector log_upper() const { return upper_.array().log10(); }

  bool contains(const Parameter& mu) const;
  /// Throws std::invalid_argument naming the offending component.
  void require(const Parameter& mu) const;

  Vector to_log(const Parameter& mu) const;
  /// Inverse of to_log; the result is clamped into the box to absorb rounding.
  Parameter from_log(const Vector& log_mu) const;
  Vector clamp_log(const Vector& log_mu) const;

  /// n points per axis, regular in log coordinates; the first component varies fastest.
  std::vector<Parameter> log_grid(int n) const;
  /// count points evenly spaced along the perimeter of the log box (2D only), starting at the
  /// lower-left corner and running counterclockwise.
  std::vector<Parameter> log_boundary(int count) const;
  /// Log-uniform sample.
  Parameter sample(std::mt19937_64& rng) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Euclidean distance of base-10 logarithms.
double log_distance(const Parameter& a, const Parameter& b);

/// Named coefficient function theta(mu).
struct Coefficient {
  std::string name;
  std::function<double(const Parameter&)> fn;
};

/// Looks up "one" or "mu<k>" (1-based component).
Coefficient coefficient_by_name(const std::string& name);

/// sum_q theta_q(mu) * component_q.
template <class Component>
struct AffineForm {
  std::vector<Coefficient> coefficients;
  std::vector<Component> components;

  std::size_t size() const { return components.size(); }

  Vector theta(const Parameter& mu) const {
    Vector t(static_cast<Eigen::Index>(coefficients.size()));
    for (std::size_t q = 0; q < coefficients.size(); ++q) t[static_cast<Eigen::Index>(q)] = coefficients[q].fn(mu);
    return t;
  }

  Component evaluate_theta(const Vector& theta) const {
    if (components.empty()) throw std::logic_error("AffineForm: no components");
    if (theta.size() != static_cast<Eigen::Index>(components.size())) {
      throw std::invalid_argument("AffineForm: theta has wrong length");
    }
    Component sum = theta[0] * components[0];
    for (std::size_t q = 1; q < components.size(); ++q) sum += theta[static_cast<Eigen::Index>(q)] * components[q];
    return sum;
  }

  Component evaluate(const Parameter& mu) const { return evaluate_theta(theta(mu)); }
};

/// Sparse Cholesky factorization of A(mu).
class StateSolver {
 public:
  explicit StateSolver(const SparseMatrix& a);
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

 private:
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

/// Parametrized elliptic problem a(y, psi; mu) = f(psi; mu) + b(u, psi; mu) with boundary
/// correction u in a polynomial trace space.
struct Model {
  ParameterDomain domain = ParameterDomain::thermal_block();
  std::shared_ptr<const FESpace> space;
  std::shared_ptr<const BoundaryTraceSpace> trace;
  AffineForm<SparseMatrix> a;
  AffineForm<Matrix> b;
  AffineForm<Vector> f;
  /// U coefficients of the best-knowledge correction that defines f.
  Vector u_start;
  /// U Gram matrix.
  Matrix u_mass;
  /// Largest singular value of each b component as a map U -> Y'.
  std::vector<double> b_component_norms;

  Parameter mu_true;
  std::function<double(double)> u_true;

  int state_dim() const { return space->dim(); }
  int control_dim() const { return static_cast<int>(u_mass.rows()); }

  SparseMatrix a_matrix(const Parameter& mu) const;
  Matrix b_matrix(const Parameter& mu) const;
  Vector f_vector(const Parameter& mu) const;

  /// min-theta bound; valid because the a components are PSD and sum to the Y Gram matrix.
  double coercivity_lower_bound(const Parameter& mu) const;
  /// sum_q |theta_b^q(mu)| * b_component_norms[q].
  double continuity_upper_bound_b(const Parameter& mu) const;

  StateSolver state_solver(const Parameter& mu) const;
  /// Solution of a(y) = f(mu).
  Vector best_knowledge_state(const Parameter& mu) const;
  /// Solution of a(y) = b(u) for U coefficients u (no f term).
  Vector manufacture_truth(const Parameter& mu, const Vector& u_coeffs) const;
  /// Solution of a(y) = int_inflow u psi for a boundary function u(x1).
  Vector manufacture_truth(const Parameter& mu, const std::function<double(double)>& u) const;

  /// Recomputes b_component_norms from the current b components.
  void update_b_norms();
};

struct ThermalBlockOptions {
  int nx = 64;
  int ny = 64;
  int poly_degree = 3;
  Parameter mu_true = (Parameter(2) << 7.0, 0.3).finished();
  double u_true_mean = 1.5;
  double u_true_amplitude = 0.3;
};

/// Thermal block: a = grad-grad on the lower region, mu1 on the inner square, mu2 on the
/// upper region; b = L2 pairing on the inflow edge; f = b(1, .); u_true = mean + amp sin(2 pi x).
Model make_thermal_block(const ThermalBlockOptions& options = {});

}  // namespace tdvar
