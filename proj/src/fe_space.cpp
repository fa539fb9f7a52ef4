#include "tdvar/fe_space.hpp"

#include "tdvar/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace tdvar {

Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2) {
  const std::array<Point, 3> p{p0, p1, p2};
  const double area2 = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
  if (area2 <= 0.0) throw std::invalid_argument("local_stiffness: triangle must be counterclockwise");
  Eigen::Matrix<double, 2, 3> grad;
  for (int i = 0; i < 3; ++i) {
    const Point& pj = p[(i + 1) % 3];
    const Point& pk = p[(i + 2) % 3];
    grad(0, i) = (pj.y() - pk.y()) / area2;
    grad(1, i) = (pk.x() - pj.x()) / area2;
  }
  return 0.5 * area2 * grad.transpose() * grad;
}

FESpace::FESpace(Mesh mesh) : mesh_(std::move(mesh)) {
  dof_of_vertex_.assign(mesh_.vertices.size(), -1);
  for (int v = 0; v < static_cast<int>(mesh_.vertices.size()); ++v) {
    if (!mesh_.on_dirichlet(v)) {
      dof_of_vertex_[static_cast<std::size_t>(v)] = static_cast<int>(vertex_of_dof_.size());
      vertex_of_dof_.push_back(v);
    }
  }
  gram_ = assemble_subdomain_stiffness(0) + assemble_subdomain_stiffness(1) + assemble_subdomain_stiffness(2);
  auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(gram_);
  if (factor->info() != Eigen::Success) throw NumericalError("FESpace: Gram matrix factorization failed");
  factor_ = std::move(factor);
}

SparseMatrix FESpace::assemble_subdomain_stiffness(int subdomain) const {
  if (subdomain < 0 || subdomain > 2) throw std::invalid_argument("assemble_subdomain_stiffness: subdomain must be 0, 1 or 2");
  std::vector<Triplet> triplets;
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    if (mesh_.subdomain[t] != subdomain) continue;
    const auto& tri = mesh_.triangles[t];
    const Eigen::Matrix3d ke = local_stiffness(mesh_.vertices[tri[0]], mesh_.vertices[tri[1]], mesh_.vertices[tri[2]]);
    for (int a = 0; a < 3; ++a) {
      const int ra = dof(tri[a]);
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int cb = dof(tri[b]);
        if (cb >= 0) triplets.emplace_back(ra, cb, ke(a, b));
      }
    }
  }
  SparseMatrix k(dim(), dim());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

SparseMatrix FESpace::assemble_mass() const {
  std::vector<Triplet> triplets;
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const double area = mesh_.triangle_area(static_cast<int>(t));
    for (int a = 0; a < 3; ++a) {
      const int ra = dof(tri[a]);
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int cb = dof(tri[b]);
        if (cb >= 0) triplets.emplace_back(ra, cb, area / 12.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  SparseMatrix m(dim(), dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Vector FESpace::riesz(const Vector& functional) const {
  if (functional.size() != dim()) throw std::invalid_argument("riesz: functional has wrong length");
  return factor_->solve(functional);
}

Matrix FESpace::riesz_columns(const Matrix& functionals) const {
  if (functionals.rows() != dim()) throw std::invalid_argument("riesz: functionals have wrong length");
  return factor_->solve(functionals);
}

double FESpace::inner(const Vector& a, const Vector& b) const { return a.dot(gram_ * b); }

double FESpace::norm(const Vector& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

double FESpace::dual_norm(const Vector& functional) const {
  const Vector permuted = factor_->permutationP() * functional;
  return factor_->matrixL().solve(permuted).norm();
}

Vector FESpace::interpolate(const std::function<double(const Point&)>& f) const {
  Vector v(dim());
  for (int n = 0; n < dim(); ++n) v[n] = f(mesh_.vertices[static_cast<std::size_t>(vertex(n))]);
  return v;
}

double FESpace::evaluate(const Vector& coeffs, const Point& x) const {
  const int i = std::clamp(static_cast<int>(std::floor(x.x() * mesh_.nx)), 0, mesh_.nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(x.y() * mesh_.ny)), 0, mesh_.ny - 1);
  const double s = x.x() * mesh_.nx - i;
  const double t = x.y() * mesh_.ny - j;
  const int cell = j * mesh_.nx + i;
  int tri_index = 2 * cell;
  if ((i + j) % 2 == 0) {
    if (t > s) ++tri_index;
  } else if (s + t > 1.0) {
    ++tri_index;
  }
  const auto& tri = mesh_.triangles[static_cast<std::size_t>(tri_index)];
  const Point& p0 = mesh_.vertices[tri[0]];
  Eigen::Matrix2d jac;
  jac.col(0) = mesh_.vertices[tri[1]] - p0;
  jac.col(1) = mesh_.vertices[tri[2]] - p0;
  const Eigen::Vector2d ref = jac.inverse() * (x - p0);
  const std::array<double, 3> lam{1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
  double value = 0.0;
  for (int a = 0; a < 3; ++a) {
    const int d = dof(tri[a]);
    if (d >= 0) value += lam[a] * coeffs[d];
  }
  return value;
}

BoundaryTraceSpace::BoundaryTraceSpace(int degree) : degree_(degree) {
  if (degree < 0 || degree > 7) throw std::invalid_argument("BoundaryTraceSpace: degree must lie in [0, 7]");
  const int n = dim();
  const auto rule = gauss_legendre(n + 1);
  Matrix gram = Matrix::Zero(n, n);
  for (const auto& q : rule) {
    const auto p = legendre_values(degree_, 2.0 * q.x - 1.0);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) gram(a, b) += q.w * p[a] * p[b];
    }
  }
  // phi = P~ C with C^T G C = I, i.e. C = L^{-T} for G = L L^T.
  const Eigen::LLT<Matrix> llt(gram);
  legendre_to_basis_ = llt.matrixU().solve(Matrix::Identity(n, n));
  mass_ = Matrix::Zero(n, n);
  for (const auto& q : rule) {
    const Vector phi = basis_values(q.x);
    mass_ += q.w * phi * phi.transpose();
  }
}

Vector BoundaryTraceSpace::basis_values(double x) const {
  const auto p = legendre_values(degree_, 2.0 * x - 1.0);
  const Eigen::Map<const Vector> pv(p.data(), static_cast<Eigen::Index>(p.size()));
  return legendre_to_basis_.transpose() * pv;
}

double BoundaryTraceSpace::evaluate(const Vector& coeffs, double x) const { return basis_values(x).dot(coeffs); }

namespace {

// Composite Gauss rule on [0, 1] with enough panels for smooth boundary data.
std::vector<QuadraturePoint1D> composite_unit_rule() {
  const int panels = 256;
  const auto base = gauss_legendre(8);
  std::vector<QuadraturePoint1D> rule;
  rule.reserve(base.size() * panels);
  for (int k = 0; k < panels; ++k) {
    for (const auto& q : base) rule.push_back({(k + q.x) / panels, q.w / panels});
  }
  return rule;
}

}  // namespace

Vector BoundaryTraceSpace::project(const std::function<double(double)>& u) const {
  Vector rhs = Vector::Zero(dim());
  for (const auto& q : composite_unit_rule()) rhs += q.w * u(q.x) * basis_values(q.x);
  return mass_.ldlt().solve(rhs);
}

double BoundaryTraceSpace::l2_distance(const std::function<double(double)>& u, const Vector& coeffs) const {
  double sum = 0.0;
  for (const auto& q : composite_unit_rule()) {
    const double e = u(q.x) - evaluate(coeffs, q.x);
    sum += q.w * e * e;
  }
  return std::sqrt(sum);
}

double BoundaryTraceSpace::l2_norm(const std::function<double(double)>& u) const {
  double sum = 0.0;
  for (const auto& q : composite_unit_rule()) sum += q.w * u(q.x) * u(q.x);
  return std::sqrt(sum);
}

namespace {

template <class Integrand>
void integrate_inflow(const FESpace& space, Integrand&& add) {
  const auto rule = gauss_legendre(8);
  const Mesh& mesh = space.mesh();
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.tag != BoundaryTag::Inflow) continue;
    const double x0 = mesh.vertices[edge.v0].x();
    const double x1 = mesh.vertices[edge.v1].x();
    const double len = std::abs(x1 - x0);
    for (const auto& q : rule) {
      const double x = x0 + q.x * (x1 - x0);
      add(space.dof(edge.v0), space.dof(edge.v1), x, 1.0 - q.x, q.x, q.w * len);
    }
  }
}

}  // namespace

Matrix assemble_boundary_coupling(const FESpace& space, const BoundaryTraceSpace& trace) {
  Matrix b0 = Matrix::Zero(space.dim(), trace.dim());
  integrate_inflow(space, [&](int d0, int d1, double x, double psi0, double psi1, double w) {
    const Vector phi = trace.basis_values(x);
    if (d0 >= 0) b0.row(d0) += (w * psi0) * phi.transpose();
    if (d1 >= 0) b0.row(d1) += (w * psi1) * phi.transpose();
  });
  return b0;
}

Vector assemble_boundary_load(const FESpace& space, const std::function<double(double)>& u) {
  Vector load = Vector::Zero(space.dim());
  integrate_inflow(space, [&](int d0, int d1, double x, double psi0, double psi1, double w) {
    const double ux = u(x);
    if (d0 >= 0) load[d0] += w * psi0 * ux;
    if (d1 >= 0) load[d1] += w * psi1 * ux;
  });
  return load;
}

namespace {

constexpr double kGaussianCutoff = 8.0;  // support radius in units of sigma

void gaussian_entries(const FESpace& space, const Point& center, double sigma, std::vector<std::pair<int, double>>& out,
                      std::map<int, std::vector<TriangleQuadraturePoint>>& rules) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_functional: sigma must be positive");
  if (center.x() <= 0.0 || center.x() >= 1.0 || center.y() <= 0.0 || center.y() >= 1.0) {
    throw std::invalid_argument("gaussian_functional: center must lie in the open unit square");
  }
  const Mesh& mesh = space.mesh();
  const double radius = kGaussianCutoff * sigma;
  const double scale = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const int i0 = std::max(0, static_cast<int>(std::floor((center.x() - radius) * mesh.nx)));
  const int i1 = std::min(mesh.nx - 1, static_cast<int>(std::floor((center.x() + radius) * mesh.nx)));
  const int j0 = std::max(0, static_cast<int>(std::floor((center.y() - radius) * mesh.ny)));
  const int j1 = std::min(mesh.ny - 1, static_cast<int>(std::floor((center.y() + radius) * mesh.ny)));
  const double hx = 1.0 / mesh.nx;
  const double hy = 1.0 / mesh.ny;
  const int s = std::max(1, static_cast<int>(std::ceil(2.0 * std::hypot(hx, hy) / sigma)));
  auto it = rules.find(s);
  if (it == rules.end()) it = rules.emplace(s, composite_triangle_rule(s)).first;
  const auto& rule = it->second;

  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double dx = std::max({0.0, i * hx - center.x(), center.x() - (i + 1) * hx});
      const double dy = std::max({0.0, j * hy - center.y(), center.y() - (j + 1) * hy});
      if (dx * dx + dy * dy > radius * radius) continue;
      const int cell = j * mesh.nx + i;
      for (int t = 2 * cell; t < 2 * cell + 2; ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        const Point& p0 = mesh.vertices[tri[0]];
        const Point e1 = mesh.vertices[tri[1]] - p0;
        const Point e2 = mesh.vertices[tri[2]] - p0;
        const double area = mesh.triangle_area(t);
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        for (const auto& q : rule) {
          const Point x = p0 + q.xi * e1 + q.eta * e2;
          const double w = q.w * area * scale * std::exp(-(x - center).squaredNorm() * inv2s2);
          acc[0] += w * (1.0 - q.xi - q.eta);
          acc[1] += w * q.xi;
          acc[2] += w * q.eta;
        }
        for (int a = 0; a < 3; ++a) {
          const int d = space.dof(tri[a]);
          if (d >= 0 && acc[a] != 0.0) out.emplace_back(d, acc[a]);
        }
      }
    }
  }
}

}  // namespace

Vector gaussian_functional(const FESpace& space, const Point& center, double sigma) {
  std::vector<std::pair<int, double>> entries;
  std::map<int, std::vector<TriangleQuadraturePoint>> rules;
  gaussian_entries(space, center, sigma, entries, rules);
  Vector g = Vector::Zero(space.dim());
  for (const auto& [d, v] : entries) g[d] += v;
  return g;
}

SparseMatrix gaussian_functionals(const FESpace& space, const std::vector<Point>& centers, double sigma) {
  std::vector<Triplet> triplets;
  std::vector<std::pair<int, double>> entries;
  std::map<int, std::vector<TriangleQuadraturePoint>> rules;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    entries.clear();
    gaussian_entries(space, centers[c], sigma, entries, rules);
    for (const auto& [d, v] : entries) triplets.emplace_back(d, static_cast<int>(c), v);
  }
  SparseMatrix g(space.dim(), static_cast<Eigen::Index>(centers.size()));
  g.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

}  // namespace tdvar
