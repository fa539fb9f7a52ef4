#include "tdvar/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace tdvar {

GeneralizedEigen generalized_eigen(const Matrix& a, const Matrix& b, double rel_tol) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw std::invalid_argument("generalized_eigen: matrices must be square and of equal size");
  }
  GeneralizedEigen out;
  const Eigen::Index n = a.rows();
  if (n == 0) return out;
  const Matrix bs = 0.5 * (b + b.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eb(bs);
  const double trace = bs.trace();
  if (!(trace > 0.0)) return out;
  const double cutoff = rel_tol * trace;
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < n; ++i) keep += eb.eigenvalues()[i] > cutoff ? 1 : 0;
  out.rank = keep;
  if (keep == 0) return out;
  const Matrix w = eb.eigenvectors().rightCols(keep) *
                   eb.eigenvalues().tail(keep).cwiseSqrt().cwiseInverse().asDiagonal();
  Matrix c = w.transpose() * a * w;
  c = 0.5 * (c + c.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> ec(c);
  out.values = ec.eigenvalues();
  out.vectors = w * ec.eigenvectors();
  return out;
}

double smallest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  if (m.rows() < m.cols()) return 0.0;
  return svd.singularValues()[svd.singularValues().size() - 1];
}

double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()[0];
}

GramSchmidt::GramSchmidt(Eigen::Index n, double drop_tol) : n_(n), drop_tol_(drop_tol) {}

GramSchmidt::GramSchmidt(const SparseMatrix& gram, double drop_tol, bool recompute_image)
    : n_(gram.rows()), drop_tol_(drop_tol), gram_(&gram), recompute_image_(recompute_image) {}

void GramSchmidt::reserve(int columns) {
  if (columns <= q_.cols()) return;
  const int capacity = std::max(columns, 2 * static_cast<int>(q_.cols()) + 8);
  q_.conservativeResize(n_, capacity);
  gq_.conservativeResize(n_, capacity);
}

std::optional<Vector> GramSchmidt::add(const Vector& v) {
  if (gram_ != nullptr) return add(v, Vector(*gram_ * v));
  return add(v, v);
}

std::optional<Vector> GramSchmidt::add(const Vector& v, const Vector& gv) {
  if (v.size() != n_ || gv.size() != n_) throw std::invalid_argument("GramSchmidt::add: wrong vector length");
  const double norm0 = std::sqrt(std::max(0.0, v.dot(gv)));
  Vector r = Vector::Zero(k_ + 1);
  if (!(norm0 > 0.0)) return std::nullopt;
  Vector w = v;
  Vector gw = gv;
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < k_; ++i) {
      const double c = gq_.col(i).dot(w);
      w.noalias() -= c * q_.col(i);
      gw.noalias() -= c * gq_.col(i);
      r[i] += c;
    }
  }
  if (gram_ != nullptr && recompute_image_) gw = *gram_ * w;
  const double norm = std::sqrt(std::max(0.0, w.dot(gw)));
  if (!(norm > drop_tol_ * norm0)) return std::nullopt;
  reserve(k_ + 1);
  q_.col(k_) = w / norm;
  gq_.col(k_) = gw / norm;
  r[k_] = norm;
  ++k_;
  return r;
}

Vector GramSchmidt::coefficients(const Vector& v) const { return gq_.leftCols(k_).transpose() * v; }

}  // namespace tdvar
