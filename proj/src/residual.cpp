#include "tdvar/residual.hpp"

#include <cmath>

namespace tdvar {

DualNormEvaluator::DualNormEvaluator(const FESpace& space, double drop_tol) : space_(&space), drop_tol_(drop_tol) {}

DualNormEvaluator::DualNormEvaluator(Matrix coordinates)
    : w_(std::move(coordinates)), rank_(static_cast<int>(w_.rows())), terms_(static_cast<int>(w_.cols())) {}

void DualNormEvaluator::append(const Vector& load) {
  if (space_ == nullptr) throw std::logic_error("DualNormEvaluator: restored evaluators are read-only");
  if (load.size() != space_->dim()) throw std::invalid_argument("DualNormEvaluator: load has wrong length");
  const auto& llt = space_->gram_factor();
  const Vector x = llt.matrixL().solve(llt.permutationP() * load);
  append_whitened(x);
}

void DualNormEvaluator::append(const Matrix& loads) {
  for (Eigen::Index j = 0; j < loads.cols(); ++j) append(Vector(loads.col(j)));
}

void DualNormEvaluator::append_whitened(const Vector& x) {
  const Eigen::Index n = x.size();
  if (q_.rows() != n) q_.resize(n, 0);
  if (terms_ + 1 > w_.cols()) w_.conservativeResize(Eigen::NoChange, 2 * terms_ + 16);
  const double norm0 = x.norm();
  Vector coeffs = Vector::Zero(rank_ + 1);
  Vector r = x;
  // Classical Gram-Schmidt with one re-orthogonalization pass.
  for (int pass = 0; pass < 2 && rank_ > 0; ++pass) {
    const Vector h = q_.leftCols(rank_).transpose() * r;
    r.noalias() -= q_.leftCols(rank_) * h;
    coeffs.head(rank_) += h;
  }
  const double rest = r.norm();
  if (norm0 > 0.0 && rest > drop_tol_ * norm0) {
    if (rank_ + 1 > q_.cols()) q_.conservativeResize(Eigen::NoChange, 2 * rank_ + 16);
    q_.col(rank_) = r / rest;
    coeffs[rank_] = rest;
    ++rank_;
    if (w_.rows() < rank_) {
      const Eigen::Index old_rows = w_.rows();
      w_.conservativeResize(2 * rank_ + 16, Eigen::NoChange);
      w_.bottomRows(w_.rows() - old_rows).setZero();
    }
  } else if (w_.rows() < rank_ + 1) {
    const Eigen::Index old_rows = w_.rows();
    w_.conservativeResize(2 * rank_ + 16, Eigen::NoChange);
    w_.bottomRows(w_.rows() - old_rows).setZero();
  }
  w_.col(terms_).setZero();
  w_.col(terms_).head(rank_) = coeffs.head(rank_);
  ++terms_;
}

double DualNormEvaluator::norm(const Vector& c) const {
  if (c.size() > terms_) throw std::invalid_argument("DualNormEvaluator: too many coefficients");
  const Eigen::Index k = c.size();
  if (k == 0 || rank_ == 0) return 0.0;
  return (w_.topLeftCorner(rank_, k) * c).norm();
}

}  // namespace tdvar
