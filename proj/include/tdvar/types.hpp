#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace tdvar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Point = Eigen::Vector2d;

/// Parameter vector mu; for the thermal block (mu1, mu2).
using Parameter = Eigen::VectorXd;

/// Raised when a linear algebra step breaks down (singular system, lost orthogonality).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or missing configuration entries.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by Gram-Schmidt style constructions when a vector adds no new direction.
class DependentVectorError : public NumericalError {
 public:
  DependentVectorError(const std::string& what, int index)
      : NumericalError(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

}  // namespace tdvar
