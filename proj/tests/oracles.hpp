#pragma once

// Brute-force reference computations shared by unit and acceptance tests. They work on dense
// matrices and sampled Rayleigh quotients, independent of the library's eigenproblem pipeline.

#include "tdvar/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <random>

namespace tdvar::oracle {

/// Minimizes (or maximizes, with sign = -1) a ratio over R^dim by random sampling followed by
/// a shrinking-step hill climb from the best sample.
inline double extremize_ratio(int dim, const std::function<double(const Vector&)>& ratio, int samples,
                              std::uint64_t seed, double sign = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector best(dim);
  double best_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vector c(dim);
    for (auto& v : c) v = normal(rng);
    const double value = sign * ratio(c);
    if (value < best_value) {
      best_value = value;
      best = c;
    }
  }
  double step = 0.5 * best.norm();
  while (step > 1e-9 * best.norm()) {
    bool improved = false;
    for (int trial = 0; trial < 40 * dim; ++trial) {
      Vector c = best;
      for (auto& v : c) v += step * normal(rng);
      const double value = sign * ratio(c);
      if (value < best_value) {
        best_value = value;
        best = c;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return sign * best_value;
}

/// Dense Y-orthogonal projector onto span(tau) in the inner product K.
inline Matrix dense_projector(const Matrix& tau, const Matrix& k) {
  const Matrix gram = tau.transpose() * k * tau;
  return tau * gram.ldlt().solve(tau.transpose() * k);
}

}  // namespace tdvar::oracle
