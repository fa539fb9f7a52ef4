#pragma once

#include "tdvar/fe_space.hpp"
#include "tdvar/types.hpp"

namespace tdvar {

/// Dual norms of linear combinations of fixed load vectors.
///
/// Every load l_j is whitened with the Cholesky factor of the Y Gram matrix, x_j = L^{-1} P l_j,
/// so that |sum_j c_j l_j|_{Y'} = |sum_j c_j x_j|_2. The whitened loads are orthonormalized
/// incrementally and only their coordinates W are kept, which gives |r|_{Y'} = |W c|_2 without
/// the cancellation of a Gram-matrix quadratic form.
class DualNormEvaluator {
 public:
  explicit DualNormEvaluator(const FESpace& space, double drop_tol = 1e-13);
  /// Restores an evaluator from stored coordinates; no further terms can be appended.
  explicit DualNormEvaluator(Matrix coordinates);

  /// Appends the columns of loads as new terms.
  void append(const Matrix& loads);
  void append(const Vector& load);

  int terms() const { return terms_; }
  int rank() const { return rank_; }
  /// rank x terms coordinate matrix W.
  Matrix coordinates() const { return w_.topLeftCorner(rank_, terms_); }

  /// |sum_j c_j l_j|_{Y'}; c may be shorter than terms() (missing entries are zero).
  double norm(const Vector& c) const;

 private:
  void append_whitened(const Vector& x);

  const FESpace* space_ = nullptr;
  double drop_tol_ = 1e-13;
  Matrix q_;
  Matrix w_;
  int rank_ = 0;
  int terms_ = 0;
};

}  // namespace tdvar
