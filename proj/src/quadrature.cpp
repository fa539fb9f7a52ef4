#include "tdvar/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tdvar {

std::vector<double> legendre_values(int n, double t) {
  std::vector<double> p(static_cast<std::size_t>(n) + 1);
  p[0] = 1.0;
  if (n >= 1) p[1] = t;
  for (int k = 1; k < n; ++k) {
    p[k + 1] = ((2.0 * k + 1.0) * t * p[k] - k * p[k - 1]) / (k + 1.0);
  }
  return p;
}

std::vector<QuadraturePoint1D> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  std::vector<QuadraturePoint1D> rule(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton iteration from the Chebyshev-like initial guess.
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const auto p = legendre_values(n, t);
      dp = n * (t * p[n] - p[n - 1]) / (t * t - 1.0);
      const double step = p[n] / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const auto p = legendre_values(n, t);
    dp = n * (t * p[n] - p[n - 1]) / (t * t - 1.0);
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    rule[static_cast<std::size_t>(n - 1 - i)] = {0.5 * (t + 1.0), 0.5 * w};
  }
  return rule;
}

const std::vector<TriangleQuadraturePoint>& triangle_rule_degree4() {
  static const std::vector<TriangleQuadraturePoint> rule = [] {
    const double a1 = 0.445948490915965;
    const double w1 = 0.223381589678011;
    const double a2 = 0.091576213509771;
    const double w2 = 0.109951743655322;
    return std::vector<TriangleQuadraturePoint>{
        {a1, a1, w1}, {1.0 - 2.0 * a1, a1, w1}, {a1, 1.0 - 2.0 * a1, w1},
        {a2, a2, w2}, {1.0 - 2.0 * a2, a2, w2}, {a2, 1.0 - 2.0 * a2, w2},
    };
  }();
  return rule;
}

std::vector<TriangleQuadraturePoint> composite_triangle_rule(int s) {
  if (s < 1) throw std::invalid_argument("composite_triangle_rule: s must be positive");
  const auto& base = triangle_rule_degree4();
  const double h = 1.0 / s;
  const double wscale = 1.0 / (static_cast<double>(s) * s);
  std::vector<TriangleQuadraturePoint> out;
  out.reserve(base.size() * static_cast<std::size_t>(s * s));
  auto push = [&](double x0, double y0, double x1, double y1, double x2, double y2) {
    for (const auto& q : base) {
      const double l0 = 1.0 - q.xi - q.eta;
      out.push_back({l0 * x0 + q.xi * x1 + q.eta * x2, l0 * y0 + q.xi * y1 + q.eta * y2, q.w * wscale});
    }
  };
  for (int j = 0; j < s; ++j) {
    for (int i = 0; i + j < s; ++i) {
      push(i * h, j * h, (i + 1) * h, j * h, i * h, (j + 1) * h);
      if (i + j + 1 < s) {
        push((i + 1) * h, j * h, (i + 1) * h, (j + 1) * h, i * h, (j + 1) * h);
      }
    }
  }
  return out;
}

}  // namespace tdvar
