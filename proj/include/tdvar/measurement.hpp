#pragma once

#include "tdvar/fe_space.hpp"
#include "tdvar/linalg.hpp"
#include "tdvar/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tdvar {

/// Descriptive metadata of a sensor (Gaussian center and width); all NaN for arbitrary functionals.
struct SensorSpec {
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
};

/// Span of the Riesz representers tau_l of the measurement functionals g_l.
///
/// Keeps tau = tau_hat R with tau_hat Y-orthonormal (so T = R^T R) and S_hat = K tau_hat,
/// which is available without extra solves because K tau = g. The projection onto the
/// span is Pi y = tau_hat S_hat^T y.
class MeasurementSpace {
 public:
  explicit MeasurementSpace(std::shared_ptr<const FESpace> space);

  /// Builds the space from functionals; throws DependentVectorError with the offending index.
  static MeasurementSpace build(std::shared_ptr<const FESpace> space, const std::vector<Vector>& functionals,
                                const std::vector<SensorSpec>& sensors = {});

  /// Appends a functional unless its representer is dependent on the current ones.
  bool try_add(const Vector& functional, const SensorSpec& sensor = {});
  /// Like try_add but throws DependentVectorError.
  void add(const Vector& functional, const SensorSpec& sensor = {});

  const FESpace& space() const { return *space_; }
  std::shared_ptr<const FESpace> space_ptr() const { return space_; }
  int size() const { return static_cast<int>(sensors_.size()); }
  const std::vector<SensorSpec>& sensors() const { return sensors_; }

  /// N x L functionals g_l (the matrix S of the block system).
  Matrix functionals() const { return g_.leftCols(size()); }
  /// N x L Riesz representers tau_l.
  Matrix representers() const;
  /// N x L orthonormal representers tau_hat_l.
  Matrix orthonormal() const { return basis_.basis(); }
  /// N x L matrix S_hat = K tau_hat.
  Matrix orthonormal_loads() const { return basis_.gram_basis(); }
  /// Upper triangular R with tau = tau_hat R.
  const Matrix& triangular() const { return r_; }
  /// T_ij = g_i(tau_j) = (R^T R)_ij.
  Matrix t_matrix() const { return r_.transpose() * r_; }

  /// g_l(y) for all l.
  Vector measure(const Vector& y) const;
  /// Coordinates of Pi y in the orthonormal basis, S_hat^T y.
  Vector project_coords(const Vector& y) const;
  Vector project(const Vector& y) const;
  /// Orthonormal coordinates of the data state y_d with g(y_d) = m, i.e. R^{-T} m.
  Vector data_coords(const Vector& m) const;
  /// FE coefficients of y_d = tau T^{-1} m.
  Vector data_state(const Vector& m) const;
  /// FE coefficients of an element of the span given by orthonormal coordinates.
  Vector lift(const Vector& coords) const;

 private:
  std::shared_ptr<const FESpace> space_;
  GramSchmidt basis_;
  Matrix g_;
  Matrix r_;
  std::vector<SensorSpec> sensors_;
};

/// Name of the noise generator recorded in output metadata.
inline constexpr const char* kNoiseGenerator = "mt19937_64+seed_seq{seed,stream}+normal_distribution";

/// m + eps with eps_l ~ N(0, sigma^2); stream distinguishes independent draws under one seed.
Vector add_noise(const Vector& m, double sigma, std::uint64_t seed, std::uint64_t stream = 0);

/// CSV rows (center_x, center_y, sigma, value) with a schema line first.
std::string measurements_to_csv(const MeasurementSpace& ms, const Vector& values);

}  // namespace tdvar
