#include "tdvar/greedy.hpp"

#include "tdvar/linalg.hpp"
#include "tdvar/parallel.hpp"
#include "tdvar/residual.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace tdvar {

namespace {

/// Galerkin projection of a snapshot problem onto a growing Y-orthonormal basis, with the
/// residual dual norm evaluator kept in sync.
class GalerkinSystem {
 public:
  GalerkinSystem(const FESpace& space, const SnapshotProblem& problem) : space_(space), problem_(problem), eval_(space) {
    for (std::size_t j = 0; j < problem.rhs.size(); ++j) {
      rhs_offset_.push_back(eval_.terms());
      for (const Vector& c : problem.rhs[j].components) eval_.append(c);
      f_r_.emplace_back(0, static_cast<Eigen::Index>(problem.rhs[j].size()));
    }
    a_offset_ = eval_.terms();
    a_r_.assign(problem.a.size(), Matrix(0, 0));
    az_.assign(problem.a.size(), Matrix(space.dim(), 0));
  }

  int size() const { return static_cast<int>(z_.cols()); }
  const Matrix& basis() const { return z_; }

  void add(const Vector& z) {
    const Eigen::Index n = z_.cols();
    z_.conservativeResize(space_.dim(), n + 1);
    z_.col(n) = z;
    for (std::size_t q = 0; q < problem_.a.size(); ++q) {
      const Vector aqz = problem_.a.components[q] * z;
      az_[q].conservativeResize(Eigen::NoChange, n + 1);
      az_[q].col(n) = aqz;
      Matrix& ar = a_r_[q];
      ar.conservativeResize(n + 1, n + 1);
      ar.col(n) = z_.transpose() * aqz;
      ar.row(n).head(n) = z.transpose() * az_[q].leftCols(n);
      eval_.append(aqz);
    }
    for (std::size_t j = 0; j < problem_.rhs.size(); ++j) {
      Matrix& fr = f_r_[j];
      fr.conservativeResize(n + 1, Eigen::NoChange);
      for (std::size_t q = 0; q < problem_.rhs[j].size(); ++q) {
        fr(n, static_cast<Eigen::Index>(q)) = z.dot(problem_.rhs[j].components[q]);
      }
    }
  }

  /// Largest estimator over the right sides at mu, and the index of the right side attaining it.
  std::pair<double, int> estimate(const Parameter& mu) const {
    const Vector theta_a = problem_.a.theta(mu);
    const double alpha = problem_.alpha_lb(mu);
    const Eigen::Index n = z_.cols();
    Eigen::LLT<Matrix> llt;
    if (n > 0) {
      Matrix a = theta_a[0] * a_r_[0];
      for (std::size_t q = 1; q < a_r_.size(); ++q) a += theta_a[static_cast<Eigen::Index>(q)] * a_r_[q];
      llt.compute(a);
      if (llt.info() != Eigen::Success) throw NumericalError("weak_greedy: reduced matrix is not positive definite");
    }
    const Eigen::Index qa = static_cast<Eigen::Index>(a_r_.size());
    double best = -1.0;
    int best_j = 0;
    Vector c = Vector::Zero(eval_.terms());
    for (std::size_t j = 0; j < problem_.rhs.size(); ++j) {
      const Vector theta_f = problem_.rhs[j].theta(mu);
      c.setZero();
      c.segment(rhs_offset_[j], theta_f.size()) = theta_f;
      Vector y;
      if (n > 0) {
        y = llt.solve(f_r_[j] * theta_f);
        for (Eigen::Index k = 0; k < n; ++k) {
          for (Eigen::Index q = 0; q < qa; ++q) c[a_offset_ + k * qa + q] = -theta_a[q] * y[k];
        }
      }
      const double r = eval_.norm(c);
      const double y_norm = n > 0 ? y.norm() : 0.0;
      double est = 0.0;
      if (r > 0.0) est = y_norm > 0.0 ? r / (alpha * y_norm) : std::numeric_limits<double>::infinity();
      if (est > best) {
        best = est;
        best_j = static_cast<int>(j);
      }
    }
    return {best, best_j};
  }

 private:
  const FESpace& space_;
  const SnapshotProblem& problem_;
  DualNormEvaluator eval_;
  std::vector<Eigen::Index> rhs_offset_;
  Eigen::Index a_offset_ = 0;
  Matrix z_;
  std::vector<Matrix> az_;
  std::vector<Matrix> a_r_;
  std::vector<Matrix> f_r_;
};

void check_problem(const FESpace& space, const SnapshotProblem& problem) {
  if (problem.a.size() == 0 || problem.rhs.empty()) throw std::invalid_argument("weak_greedy: empty problem");
  if (!problem.alpha_lb) throw std::invalid_argument("weak_greedy: missing coercivity bound");
  for (const auto& c : problem.a.components) {
    if (c.rows() != space.dim() || c.cols() != space.dim()) throw std::invalid_argument("weak_greedy: operator size mismatch");
  }
  for (const auto& f : problem.rhs) {
    for (const auto& c : f.components) {
      if (c.size() != space.dim()) throw std::invalid_argument("weak_greedy: right side size mismatch");
    }
  }
}

std::string rhs_name(const SnapshotProblem& problem, int j) {
  if (static_cast<std::size_t>(j) < problem.rhs_names.size()) return problem.rhs_names[static_cast<std::size_t>(j)];
  return "rhs" + std::to_string(j);
}

}  // namespace

SnapshotProblem state_snapshot_problem(const Model& model, const Matrix& u_basis) {
  SnapshotProblem p;
  p.a = model.a;
  p.rhs.push_back(model.f);
  p.rhs_names.push_back("f_bk");
  for (Eigen::Index m = 0; m < u_basis.cols(); ++m) {
    AffineForm<Vector> bm;
    bm.coefficients = model.b.coefficients;
    for (const Matrix& bq : model.b.components) bm.components.push_back(bq * u_basis.col(m));
    p.rhs.push_back(std::move(bm));
    p.rhs_names.push_back("b_phi" + std::to_string(m));
  }
  p.alpha_lb = [&model](const Parameter& mu) { return model.coercivity_lower_bound(mu); };
  return p;
}

SnapshotProblem adjoint_snapshot_problem(const Model& model, const MeasurementSpace& ms) {
  SnapshotProblem p;
  p.a.coefficients = model.a.coefficients;
  for (const SparseMatrix& aq : model.a.components) p.a.components.push_back(SparseMatrix(aq.transpose()));
  const Matrix s_hat = ms.orthonormal_loads();
  for (Eigen::Index l = 0; l < s_hat.cols(); ++l) {
    AffineForm<Vector> tl;
    tl.coefficients = {coefficient_by_name("one")};
    tl.components = {s_hat.col(l)};
    p.rhs.push_back(std::move(tl));
    p.rhs_names.push_back("tau" + std::to_string(l));
  }
  p.alpha_lb = [&model](const Parameter& mu) { return model.coercivity_lower_bound(mu); };
  return p;
}

GreedyResult weak_greedy(const FESpace& space, const SnapshotProblem& problem, const std::vector<Parameter>& training,
                         const GreedyOptions& options) {
  check_problem(space, problem);
  if (training.empty()) throw std::invalid_argument("weak_greedy: empty training set");
  if (!(options.tol_rel > 0.0)) throw std::invalid_argument("weak_greedy: tolerance must be positive");
  GalerkinSystem system(space, problem);
  GramSchmidt orth(space.gram(), options.drop_tol);
  GreedyResult out;
  const int count = static_cast<int>(training.size());
  std::vector<double> est(training.size());
  std::vector<int> rhs(training.size());
  while (true) {
    parallel_for(count, [&](int i) {
      const auto [e, j] = system.estimate(training[static_cast<std::size_t>(i)]);
      est[static_cast<std::size_t>(i)] = e;
      rhs[static_cast<std::size_t>(i)] = j;
    });
    std::size_t worst = 0;
    for (std::size_t i = 1; i < est.size(); ++i) {
      if (est[i] > est[worst]) worst = i;
    }
    out.max_estimator = est[worst];
    if (est[worst] <= options.tol_rel) {
      out.converged = true;
      break;
    }
    if (system.size() >= options.n_max) break;
    const Parameter& mu = training[worst];
    const int j = rhs[worst];
    const StateSolver solver(problem.a.evaluate(mu));
    const Vector snapshot = solver.solve(problem.rhs[static_cast<std::size_t>(j)].evaluate(mu));
    if (!orth.add(snapshot)) break;
    system.add(orth.column(orth.size() - 1));
    out.steps.push_back({mu, j, est[worst]});
    out.tags.push_back({rhs_name(problem, j), mu});
  }
  out.basis = system.basis();
  return out;
}

std::vector<double> greedy_estimators(const FESpace& space, const SnapshotProblem& problem, const Matrix& basis,
                                      const std::vector<Parameter>& params) {
  check_problem(space, problem);
  GalerkinSystem system(space, problem);
  for (Eigen::Index k = 0; k < basis.cols(); ++k) system.add(basis.col(k));
  std::vector<double> est(params.size());
  parallel_for(static_cast<int>(params.size()),
               [&](int i) { est[static_cast<std::size_t>(i)] = system.estimate(params[static_cast<std::size_t>(i)]).first; });
  return est;
}

GreedyResult weak_greedy_state(const Model& model, const Matrix& u_basis, const std::vector<Parameter>& training,
                               const GreedyOptions& options) {
  return weak_greedy(*model.space, state_snapshot_problem(model, u_basis), training, options);
}

GreedyResult build_adjoint_space(const Model& model, const MeasurementSpace& ms, const std::vector<Parameter>& training,
                                 const GreedyOptions& options) {
  if (ms.size() == 0) throw std::invalid_argument("build_adjoint_space: empty measurement space");
  return weak_greedy(*model.space, adjoint_snapshot_problem(model, ms), training, options);
}

GreedyResult merge_spaces(const FESpace& space, const std::vector<const GreedyResult*>& parts, double drop_tol) {
  GramSchmidt orth(space.gram(), drop_tol);
  GreedyResult out;
  out.converged = true;
  for (const GreedyResult* part : parts) {
    out.converged = out.converged && part->converged;
    out.max_estimator = std::max(out.max_estimator, part->max_estimator);
    for (Eigen::Index k = 0; k < part->basis.cols(); ++k) {
      if (!orth.add(part->basis.col(k))) continue;
      if (static_cast<std::size_t>(k) < part->tags.size()) out.tags.push_back(part->tags[static_cast<std::size_t>(k)]);
      else out.tags.push_back({"merged", Parameter()});
    }
    out.steps.insert(out.steps.end(), part->steps.begin(), part->steps.end());
  }
  out.basis = orth.basis();
  return out;
}

}  // namespace tdvar
