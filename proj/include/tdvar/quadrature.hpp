#pragma once

#include <vector>

namespace tdvar {

struct QuadraturePoint1D {
  double x;
  double w;
};

/// Gauss-Legendre rule with n points on [0, 1].
std::vector<QuadraturePoint1D> gauss_legendre(int n);

/// Point in reference-triangle coordinates (xi, eta) with weight relative to the triangle area.
struct TriangleQuadraturePoint {
  double xi;
  double eta;
  double w;
};

/// Symmetric 6-point rule, exact for polynomials of degree 4. Weights sum to 1.
const std::vector<TriangleQuadraturePoint>& triangle_rule_degree4();

/// The degree-4 rule applied on each of the s*s congruent subtriangles of the reference triangle.
std::vector<TriangleQuadraturePoint> composite_triangle_rule(int s);

/// Legendre polynomials P_0..P_n at t in [-1, 1].
std::vector<double> legendre_values(int n, double t);

}  // namespace tdvar
