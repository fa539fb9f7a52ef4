#include "tdvar/truth.hpp"

#include "json.hpp"

#include <Eigen/Dense>
#include <Eigen/KLUSupport>

namespace tdvar {

TruthSolver::TruthSolver(const Model& model, const MeasurementSpace& ms) : model_(&model), ms_(&ms) {
  if (ms.space().dim() != model.state_dim()) throw std::invalid_argument("TruthSolver: measurement space does not match model");
  s_hat_ = ms.orthonormal_loads().sparseView(1.0, 0.0);
}

SaddleSolution solve_saddle_blocks(const SaddleBlocks& blocks, double lambda, const Vector& data_coords) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve_truth: lambda must be nonnegative");
  const SparseMatrix& a = blocks.a;
  const Matrix& b0 = blocks.b0;
  const Vector& f = blocks.f;
  const Matrix& u_mass = blocks.u_mass;
  const SparseMatrix& s_hat = blocks.s_hat;
  const int m = static_cast<int>(u_mass.rows());
  const int n = static_cast<int>(a.rows());
  const int l = static_cast<int>(s_hat.cols());
  if (data_coords.size() != l) throw std::invalid_argument("solve_truth: data has wrong length");
  if (b0.rows() != n || b0.cols() != m || f.size() != n || s_hat.rows() != n) {
    throw std::invalid_argument("solve_truth: inconsistent block dimensions");
  }

  // Unknown blocks: u [0, m), y [m, m+n), p [m+n, m+2n), z [m+2n, m+2n+l).
  const int oy = m, op = m + n, oz = m + 2 * n, total = m + 2 * n + l;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(2 * a.nonZeros() + 2 * s_hat.nonZeros() + 2 * n * m + m * m + l));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) t.emplace_back(i, j, u_mass(i, j));
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const double v = b0(i, j);
      if (v == 0.0) continue;
      t.emplace_back(j, op + i, -v);  // control row: -B0^T p
      t.emplace_back(op + i, j, -v);  // state row: -B0 u
    }
  }
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      t.emplace_back(oy + it.row(), op + it.col(), it.value());  // adjoint row: A p
      t.emplace_back(op + it.row(), oy + it.col(), it.value());  // state row: A y
    }
  }
  for (int k = 0; k < s_hat.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s_hat, k); it; ++it) {
      if (lambda != 0.0) t.emplace_back(oy + it.row(), oz + it.col(), lambda * it.value());
      t.emplace_back(oz + it.col(), oy + it.row(), it.value());
    }
  }
  for (int j = 0; j < l; ++j) t.emplace_back(oz + j, oz + j, -1.0);
  SparseMatrix kkt(total, total);
  kkt.setFromTriplets(t.begin(), t.end());

  const Vector data_load = l > 0 ? Vector(lambda * (s_hat * data_coords)) : Vector(Vector::Zero(n));
  Vector rhs = Vector::Zero(total);
  rhs.segment(oy, n) = data_load;
  rhs.segment(op, n) = f;

  Eigen::KLU<SparseMatrix> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success) throw NumericalError("solve_truth: sparse LU factorization failed");
  // Iterative refinement with residuals accumulated in extended precision, so the result is
  // accurate to working precision rather than to cond * eps.
  Vector x = lu.solve(rhs);
  std::vector<long double> acc(static_cast<std::size_t>(total));
  for (int refine = 0; refine < 4 && x.allFinite(); ++refine) {
    for (int i = 0; i < total; ++i) acc[static_cast<std::size_t>(i)] = rhs[i];
    for (int k = 0; k < kkt.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(kkt, k); it; ++it) {
        acc[static_cast<std::size_t>(it.row())] -= static_cast<long double>(it.value()) * x[it.col()];
      }
    }
    Vector r(total);
    for (int i = 0; i < total; ++i) r[i] = static_cast<double>(acc[static_cast<std::size_t>(i)]);
    const Vector dx = lu.solve(r);
    x += dx;
    if (dx.cwiseAbs().maxCoeff() <= 1e-16 * x.cwiseAbs().maxCoeff()) break;
  }
  if (!x.allFinite()) throw NumericalError("solve_truth: sparse LU produced non-finite values");

  SaddleSolution sol;
  sol.lambda = lambda;
  sol.u = x.segment(0, m);
  sol.y = x.segment(oy, n);
  sol.p = x.segment(op, n);
  const Vector z = s_hat.transpose() * sol.y;
  sol.d_coords = data_coords - z;
  sol.cost = 0.5 * sol.u.dot(u_mass * sol.u) + 0.5 * lambda * sol.d_coords.squaredNorm();

  // Residual of the original symmetric block system, evaluated matrix-free.
  const Vector r_u = u_mass * sol.u - b0.transpose() * sol.p;
  const Vector r_y = lambda * (s_hat * z) + a * sol.p - data_load;
  const Vector r_p = -b0 * sol.u + a * sol.y - f;
  const double res = std::sqrt(r_u.squaredNorm() + r_y.squaredNorm() + r_p.squaredNorm());
  const double scale = std::sqrt(data_load.squaredNorm() + f.squaredNorm());
  sol.block_residual = scale > 0.0 ? res / scale : res;
  if (!(sol.block_residual <= 1e-9)) {
    throw NumericalError("solve_truth: block residual " + std::to_string(sol.block_residual) + " exceeds 1e-9");
  }
  return sol;
}

SaddleSolution TruthSolver::solve(const Parameter& mu, double lambda, const Vector& data_coords) const {
  const SaddleBlocks blocks{model_->a_matrix(mu), model_->b_matrix(mu), model_->f_vector(mu), model_->u_mass, s_hat_};
  SaddleSolution sol = solve_saddle_blocks(blocks, lambda, data_coords);
  sol.mu = mu;
  return sol;
}

OptimalityResiduals TruthSolver::check(const SaddleSolution& sol) const {
  const SparseMatrix a = model_->a_matrix(sol.mu);
  const Matrix b0 = model_->b_matrix(sol.mu);
  const Vector f = model_->f_vector(sol.mu);
  auto rel = [](double r, double s) { return s > 0.0 ? r / s : r; };
  OptimalityResiduals out;
  const Vector uu = model_->u_mass * sol.u;
  const Vector bp = b0.transpose() * sol.p;
  out.control = rel((uu - bp).norm(), uu.norm() + bp.norm());
  const Vector ap = a * sol.p;
  const Vector kd = sol.lambda * (s_hat_ * sol.d_coords);
  out.adjoint = rel((ap - kd).norm(), ap.norm() + kd.norm());
  const Vector ay = a * sol.y;
  const Vector bu = b0 * sol.u;
  out.state = rel((ay - f - bu).norm(), ay.norm() + f.norm() + bu.norm());
  return out;
}

Matrix kernel_basis(const Matrix& m, double rel_tol) {
  const Eigen::Index cols = m.cols();
  if (m.rows() == 0 || cols == 0) return Matrix::Identity(cols, cols);
  const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += (smax > 0.0 && s[i] > rel_tol * smax) ? 1 : 0;
  return svd.matrixV().rightCols(cols - rank);
}

Matrix nullspace_U0(const Model& model, const MeasurementSpace& ms, const Parameter& mu) {
  const int m = model.control_dim();
  const Eigen::LLT<Matrix> u_llt(model.u_mass);
  const Matrix whiten = u_llt.matrixU().solve(Matrix::Identity(m, m));  // U-orthonormal columns
  if (ms.size() == 0) return whiten;
  const Matrix responses = model.state_solver(mu).solve(Matrix(model.b_matrix(mu) * whiten));
  const Matrix observed = ms.orthonormal_loads().transpose() * responses;
  return whiten * kernel_basis(observed, 1e-10);
}

std::string solution_to_json(const SaddleSolution& sol, const OptimalityResiduals& residuals) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["mu"] = vec(sol.mu);
  j["lambda"] = sol.lambda;
  j["cost"] = sol.cost;
  j["block_residual"] = sol.block_residual;
  j["optimality_residuals"] = {{"control", residuals.control}, {"adjoint", residuals.adjoint}, {"state", residuals.state}};
  j["u"] = vec(sol.u);
  j["d_coords"] = vec(sol.d_coords);
  j["y"] = vec(sol.y);
  j["p"] = vec(sol.p);
  return j.dump(1);
}

}  // namespace tdvar
