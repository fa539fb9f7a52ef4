#pragma once

#include "tdvar/mesh.hpp"
#include "tdvar/types.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>

namespace tdvar {

/// Element stiffness matrix of a P1 triangle with counterclockwise vertices.
Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2);

/// P1 finite elements on a Mesh with the Dirichlet vertices (y = 1) eliminated.
///
/// The Y inner product is the H1 seminorm; its Gram matrix K is the sum of the
/// three subdomain stiffness matrices.
class FESpace {
 public:
  explicit FESpace(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  int dim() const { return static_cast<int>(vertex_of_dof_.size()); }
  /// Free dof of a vertex, or -1 for Dirichlet vertices.
  int dof(int vertex) const { return dof_of_vertex_[static_cast<std::size_t>(vertex)]; }
  int vertex(int dof) const { return vertex_of_dof_[static_cast<std::size_t>(dof)]; }

  SparseMatrix assemble_subdomain_stiffness(int subdomain) const;
  SparseMatrix assemble_mass() const;

  const SparseMatrix& gram() const { return gram_; }
  const Eigen::SimplicialLLT<SparseMatrix>& gram_factor() const { return *factor_; }

  /// Solves K tau = g.
  Vector riesz(const Vector& functional) const;
  Matrix riesz_columns(const Matrix& functionals) const;

  double inner(const Vector& a, const Vector& b) const;
  double norm(const Vector& v) const;
  /// sqrt(g^T K^{-1} g), evaluated with one triangular solve.
  double dual_norm(const Vector& functional) const;

  Vector interpolate(const std::function<double(const Point&)>& f) const;
  /// Value of the FE function at x in the closed unit square.
  double evaluate(const Vector& coeffs, const Point& x) const;

 private:
  Mesh mesh_;
  std::vector<int> dof_of_vertex_;
  std::vector<int> vertex_of_dof_;
  SparseMatrix gram_;
  std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> factor_;
};

/// Polynomials of degree <= p on the inflow edge, L2-orthonormalized shifted Legendre basis.
class BoundaryTraceSpace {
 public:
  explicit BoundaryTraceSpace(int degree);

  int degree() const { return degree_; }
  int dim() const { return degree_ + 1; }
  /// All basis functions at x in [0, 1].
  Vector basis_values(double x) const;
  double evaluate(const Vector& coeffs, double x) const;
  /// L2 Gram matrix of the basis (identity up to rounding).
  const Matrix& mass() const { return mass_; }
  /// Coefficients of the L2 projection of u onto the space.
  Vector project(const std::function<double(double)>& u) const;
  /// L2(0,1) distance between u and the polynomial with the given coefficients.
  double l2_distance(const std::function<double(double)>& u, const Vector& coeffs) const;
  double l2_norm(const std::function<double(double)>& u) const;

 private:
  int degree_;
  Matrix legendre_to_basis_;
  Matrix mass_;
};

/// (B0)_{n,m} = integral over the inflow edge of phi_m psi_n.
Matrix assemble_boundary_coupling(const FESpace& space, const BoundaryTraceSpace& trace);

/// Load vector integral over the inflow edge of u psi_n for a function u(x1).
Vector assemble_boundary_load(const FESpace& space, const std::function<double(double)>& u);

/// Unit-mass Gaussian weight w(x) = exp(-|x-c|^2/(2 sigma^2)) / (2 pi sigma^2) tested against P1 functions.
Vector gaussian_functional(const FESpace& space, const Point& center, double sigma);

/// Columns are Gaussian functionals at the given centers.
SparseMatrix gaussian_functionals(const FESpace& space, const std::vector<Point>& centers, double sigma);

}  // namespace tdvar
