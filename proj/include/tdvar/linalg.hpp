#pragma once

#include "tdvar/types.hpp"

#include <optional>

namespace tdvar {

/// Eigenpairs of the pencil (A, B), ascending; eigenvectors are B-orthonormal.
struct GeneralizedEigen {
  Vector values;
  Matrix vectors;
  /// Rank of B retained after truncation.
  Eigen::Index rank = 0;
};

/// Solves A x = lambda B x for symmetric A and symmetric positive semidefinite B.
/// B is whitened by its eigendecomposition; eigenvalues of B below rel_tol * trace(B)
/// are discarded, so the pencil is restricted to range(B).
GeneralizedEigen generalized_eigen(const Matrix& a, const Matrix& b, double rel_tol = 1e-12);

double smallest_singular_value(const Matrix& m);
double largest_singular_value(const Matrix& m);

/// Incremental modified Gram-Schmidt with one re-orthogonalization pass.
///
/// The inner product is <a, b> = a^T G b for an SPD matrix G (Euclidean if none is given).
/// Callers that already know G v may pass it to avoid a matrix product. With recompute_image
/// off, G q is carried through the same recurrence as q, which keeps exact zeros of sparse
/// images (e.g. K tau = g for local functionals g).
class GramSchmidt {
 public:
  explicit GramSchmidt(Eigen::Index n, double drop_tol = 1e-10);
  GramSchmidt(const SparseMatrix& gram, double drop_tol = 1e-10, bool recompute_image = true);

  Eigen::Index dim() const { return n_; }
  int size() const { return k_; }
  Matrix basis() const { return q_.leftCols(k_); }
  /// G times the basis.
  Matrix gram_basis() const { return gq_.leftCols(k_); }
  auto column(int i) const { return q_.col(i); }

  /// Orthonormalizes v against the basis. On success appends the new direction and returns
  /// coefficients r with v = basis() * r (length size() after the call). Returns nullopt when
  /// the remaining part is below drop_tol relative to the norm of v; the basis is unchanged.
  std::optional<Vector> add(const Vector& v);
  std::optional<Vector> add(const Vector& v, const Vector& gv);

  /// Coefficients of the orthogonal projection of v onto the basis.
  Vector coefficients(const Vector& v) const;

 private:
  void reserve(int columns);

  Eigen::Index n_;
  double drop_tol_;
  const SparseMatrix* gram_ = nullptr;
  bool recompute_image_ = true;
  Matrix q_;
  Matrix gq_;
  int k_ = 0;
};

}  // namespace tdvar
