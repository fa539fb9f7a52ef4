#include "tdvar/greedy.hpp"
#include "tdvar/linalg.hpp"
#include "tdvar/rb.hpp"
#include "tdvar/stability.hpp"
#include "tdvar/truth.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <filesystem>
#include <random>

using namespace tdvar;

namespace {

Parameter mu(double a, double b) { return (Parameter(2) << a, b).finished(); }

MeasurementSpace grid_sensors(const Model& model, int n, double lo, double hi, double sigma) {
  std::vector<Vector> g;
  std::vector<SensorSpec> s;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point c(lo + (hi - lo) * i / (n - 1), lo + (hi - lo) * j / (n - 1));
      g.push_back(gaussian_functional(*model.space, c, sigma));
      s.push_back({c.x(), c.y(), sigma});
    }
  }
  return MeasurementSpace::build(model.space, g, s);
}

Matrix identity_u(const Model& model) { return Matrix::Identity(model.control_dim(), model.control_dim()); }

/// Y-orthonormal basis of the whole FE space.
Matrix full_basis(const Model& model) {
  const Matrix k = Matrix(model.space->gram());
  const Eigen::LLT<Matrix> llt(k);
  return llt.matrixU().solve(Matrix::Identity(k.rows(), k.cols()));
}

struct Fixture {
  Model model = make_thermal_block({.nx = 16, .ny = 16});
  MeasurementSpace ms = grid_sensors(model, 3, 0.2, 0.8, 0.05);
  GreedyResult state = weak_greedy_state(model, identity_u(model), model.domain.log_grid(9), {1e-6, 200, 1e-10});
  GreedyResult adjoint = build_adjoint_space(model, ms, model.domain.log_boundary(16), {1e-6, 200, 1e-10});
  GreedyResult merged = merge_spaces(*model.space, {&state, &adjoint});
  RBSpaces rb = build_rb_spaces(model, ms, identity_u(model), merged.basis, merged.tags);
  TruthSolver truth{model, ms};
  Vector m_clean = ms.measure(model.manufacture_truth(model.mu_true, model.u_true));

  Vector data(std::uint64_t stream) const { return ms.data_coords(add_noise(m_clean, 0.01, 11, stream)); }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

struct TrueErrors {
  double u, y, d, p;
};

TrueErrors true_errors(const Model& model, const RBSpaces& rb, const SaddleSolution& s, const RBSolution& r) {
  const Vector eu = s.u - lift_u(rb, r);
  return {std::sqrt(eu.dot(model.u_mass * eu)), model.space->norm(s.y - lift_y(rb, r)), (s.d_coords - r.d_coords).norm(),
          model.space->norm(s.p - lift_p(rb, r))};
}

/// Full-order residual functionals of a reduced solution.
struct FullResiduals {
  Vector u;
  Vector y;
  Vector p;
};

FullResiduals full_residuals(const Model& model, const MeasurementSpace& ms, const RBSpaces& rb, const RBSolution& r) {
  const SparseMatrix a = model.a_matrix(r.mu);
  const Matrix b0 = model.b_matrix(r.mu);
  const Vector u = lift_u(rb, r), y = lift_y(rb, r), p = lift_p(rb, r);
  FullResiduals out;
  out.u = b0.transpose() * p - model.u_mass * u;
  out.y = model.f_vector(r.mu) + b0 * u - a * y;
  out.p = r.lambda * (ms.orthonormal_loads() * r.d_coords) - a * p;
  return out;
}

double u_dual_norm(const Model& model, const Vector& v) { return std::sqrt(v.dot(model.u_mass.ldlt().solve(v))); }

}  // namespace

TEST(RBSpaces, BasesAreOrthonormal) {
  const Fixture& f = fx();
  const Matrix z = f.rb.y_basis;
  const Matrix gram = z.transpose() * (f.model.space->gram() * z);
  EXPECT_LT((gram - Matrix::Identity(z.cols(), z.cols())).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix e = f.rb.u_basis;
  EXPECT_LT((e.transpose() * f.model.u_mass * e - Matrix::Identity(e.cols(), e.cols())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(static_cast<int>(f.rb.y_tags.size()), f.rb.y_dim());
}

TEST(RBSpaces, OnlineFormsEqualProjectedTruthForms) {
  const Fixture& f = fx();
  const Matrix& z = f.rb.y_basis;
  const Matrix& e = f.rb.u_basis;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    const Parameter p = f.model.domain.sample(rng);
    const Matrix a_full = z.transpose() * (f.model.a_matrix(p) * z);
    Matrix a_online = Matrix::Zero(z.cols(), z.cols());
    const Vector ta = f.rb.theta_a_at(p);
    for (std::size_t q = 0; q < f.rb.a_r.size(); ++q) a_online += ta[static_cast<Eigen::Index>(q)] * f.rb.a_r[q];
    EXPECT_LT((a_online - a_full).norm(), 1e-10 * a_full.norm());

    const Matrix b_full = z.transpose() * f.model.b_matrix(p) * e;
    Matrix b_online = Matrix::Zero(z.cols(), e.cols());
    const Vector tb = f.rb.theta_b_at(p);
    for (std::size_t q = 0; q < f.rb.b_r.size(); ++q) b_online += tb[static_cast<Eigen::Index>(q)] * f.rb.b_r[q];
    EXPECT_LT((b_online - b_full).norm(), 1e-10 * b_full.norm());

    const Vector f_full = z.transpose() * f.model.f_vector(p);
    Vector f_online = Vector::Zero(z.cols());
    const Vector tf = f.rb.theta_f_at(p);
    for (std::size_t q = 0; q < f.rb.f_r.size(); ++q) f_online += tf[static_cast<Eigen::Index>(q)] * f.rb.f_r[q];
    EXPECT_LT((f_online - f_full).norm(), 1e-10 * f_full.norm());
  }
  EXPECT_LT((f.rb.s_r - z.transpose() * f.ms.orthonormal_loads()).norm(), 1e-12 * f.rb.s_r.norm());
  EXPECT_LT((f.rb.g_r - f.ms.functionals().transpose() * z).norm(), 1e-12 * f.rb.g_r.norm());
  EXPECT_LT((f.rb.u_mass_r - Matrix::Identity(e.cols(), e.cols())).norm(), 1e-12);
}

TEST(SolveRB, FullSpaceReproducesTruth) {
  const Fixture& f = fx();
  const RBSpaces full = build_rb_spaces(f.model, f.ms, identity_u(f.model), full_basis(f.model));
  for (double lambda : {1.0, 100.0, 1e4}) {
    for (const Parameter& p : {mu(0.2, 5.0), mu(7.0, 0.3)}) {
      const Vector cd = f.data(1);
      const SaddleSolution s = f.truth.solve(p, lambda, cd);
      const RBSolution r = solve_rb(full, p, lambda, cd);
      EXPECT_LT((lift_u(full, r) - s.u).norm(), 1e-9 * s.u.norm());
      EXPECT_LT(f.model.space->norm(lift_y(full, r) - s.y), 1e-9 * f.model.space->norm(s.y));
      EXPECT_LT(f.model.space->norm(lift_p(full, r) - s.p), 1e-9 * f.model.space->norm(s.p));
      EXPECT_LT((r.d_coords - s.d_coords).norm(), 1e-9 * std::max(1.0, s.d_coords.norm()));
      EXPECT_NEAR(r.cost, s.cost, 1e-9 * s.cost);
      const ResidualNorms n = residual_norms(full, r);
      EXPECT_LE(n.u, 1e-9);
      EXPECT_LE(n.y, 1e-9);
      EXPECT_LE(n.p, 1e-9 * lambda);
    }
  }
}

TEST(SolveRB, ZeroLambdaGivesBestKnowledgeSolution) {
  const Fixture& f = fx();
  const Parameter p = mu(2.0, 0.5);
  const RBSolution r = solve_rb(f.rb, p, 0.0, f.data(0));
  EXPECT_EQ(r.u.norm(), 0.0);
  Matrix a = Matrix::Zero(f.rb.y_dim(), f.rb.y_dim());
  Vector rhs = Vector::Zero(f.rb.y_dim());
  const Vector ta = f.rb.theta_a_at(p), tf = f.rb.theta_f_at(p);
  for (std::size_t q = 0; q < f.rb.a_r.size(); ++q) a += ta[static_cast<Eigen::Index>(q)] * f.rb.a_r[q];
  for (std::size_t q = 0; q < f.rb.f_r.size(); ++q) rhs += tf[static_cast<Eigen::Index>(q)] * f.rb.f_r[q];
  const Vector y = a.ldlt().solve(rhs);
  EXPECT_LT((r.y - y).norm(), 1e-10 * y.norm());
  EXPECT_EQ(r.p.norm(), 0.0);
}

TEST(SolveRB, RejectsInvalidInput) {
  const Fixture& f = fx();
  EXPECT_THROW(solve_rb(f.rb, mu(20.0, 1.0), 1.0, f.data(0)), std::invalid_argument);
  EXPECT_THROW(solve_rb(f.rb, mu(1.0, 1.0), -1.0, f.data(0)), std::invalid_argument);
  EXPECT_THROW(solve_rb(f.rb, mu(1.0, 1.0), 1.0, Vector::Zero(2)), std::invalid_argument);
}

TEST(ResidualNorms, MatchFullOrderRieszComputation) {
  const Fixture& f = fx();
  std::mt19937_64 rng(8);
  const double lambdas[] = {0.5, 3.0, 50.0, 800.0, 1e4};
  for (int k = 0; k < 10; ++k) {
    const Parameter p = f.model.domain.sample(rng);
    const double lambda = lambdas[k % 5];
    const RBSolution r = solve_rb(f.rb, p, lambda, f.data(static_cast<std::uint64_t>(k)));
    const FullResiduals full = full_residuals(f.model, f.ms, f.rb, r);
    const ResidualNorms n = residual_norms(f.rb, r);
    const double ry = f.model.space->dual_norm(full.y);
    const double rp = f.model.space->dual_norm(full.p);
    const double ru = u_dual_norm(f.model, full.u);
    // The reduced space is rich enough that residuals are tiny; compare against the scale of
    // the terms that cancel in them.
    const double scale_y = f.model.space->dual_norm(f.model.f_vector(p));
    const double scale_p = lambda * r.d_coords.norm();
    EXPECT_NEAR(n.y, ry, 1e-8 * std::max(ry, 1e-4 * scale_y));
    EXPECT_NEAR(n.p, rp, 1e-8 * std::max(rp, 1e-4 * scale_p));
    const double scale_u = r.u.norm();
    EXPECT_NEAR(n.u, ru, 1e-8 * std::max(ru, 1e-4 * scale_u));
  }
}

TEST(ResidualNorms, StateResidualIsGalerkinOrthogonal) {
  const Fixture& f = fx();
  const Parameter p = mu(0.4, 3.0);
  const RBSolution r = solve_rb(f.rb, p, 100.0, f.data(2));
  const FullResiduals full = full_residuals(f.model, f.ms, f.rb, r);
  const Vector tested = f.rb.y_basis.transpose() * full.y;
  const double scale = f.model.space->dual_norm(f.model.f_vector(p));
  EXPECT_LT(tested.cwiseAbs().maxCoeff(), 1e-11 * scale);
  const Vector tested_p = f.rb.y_basis.transpose() * full.p;
  EXPECT_LT(tested_p.cwiseAbs().maxCoeff(), 1e-11 * 100.0 * std::max(1.0, r.d_coords.norm()));
}

TEST(ErrorBounds, FormulaExample) {
  const ErrorBounds b = error_bounds({0.0, 0.0, 1.0}, 1.0, 1.0, 4.0);
  EXPECT_DOUBLE_EQ(b.p_u, 0.0);
  EXPECT_DOUBLE_EQ(b.q_u, 1.0);
  EXPECT_DOUBLE_EQ(b.delta_u, 1.0);
  EXPECT_DOUBLE_EQ(b.delta_y, 2.0);
  EXPECT_DOUBLE_EQ(b.p_d, 1.0);
  EXPECT_DOUBLE_EQ(b.q_d, 0.0);
  EXPECT_DOUBLE_EQ(b.delta_d, 1.0);
  EXPECT_DOUBLE_EQ(b.delta_p, 4.0);
}

TEST(ErrorBounds, ZeroResidualsGiveZeroBounds) {
  const ErrorBounds b = error_bounds({0.0, 0.0, 0.0}, 0.3, 2.0, 10.0);
  EXPECT_EQ(b.delta_u, 0.0);
  EXPECT_EQ(b.delta_y, 0.0);
  EXPECT_EQ(b.delta_d, 0.0);
  EXPECT_EQ(b.delta_p, 0.0);
}

TEST(ErrorBounds, RejectsInvalidConstants) {
  EXPECT_THROW(error_bounds({1.0, 1.0, 1.0}, 1.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(error_bounds({1.0, 1.0, 1.0}, 1.0, 1.0, -2.0), std::invalid_argument);
  EXPECT_THROW(error_bounds({1.0, 1.0, 1.0}, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(ErrorBounds, BoundTrueErrorsAndResidualRelations) {
  const Fixture& f = fx();
  std::mt19937_64 rng(21);
  int cases = 0;
  for (double lambda : {1.0, 100.0, 1e4}) {
    for (int k = 0; k < 15; ++k) {
      const Parameter p = f.model.domain.sample(rng);
      const Vector cd = f.data(static_cast<std::uint64_t>(100 + k));
      const SaddleSolution s = f.truth.solve(p, lambda, cd);
      const RBSolution r = solve_rb(f.rb, p, lambda, cd);
      const ErrorBounds b = certify(f.rb, r);
      const TrueErrors e = true_errors(f.model, f.rb, s, r);
      EXPECT_GE(b.delta_u, e.u) << "mu " << p.transpose() << " lambda " << lambda;
      EXPECT_GE(b.delta_y, e.y) << "mu " << p.transpose() << " lambda " << lambda;
      EXPECT_GE(b.delta_d, e.d) << "mu " << p.transpose() << " lambda " << lambda;
      EXPECT_GE(b.delta_p, e.p) << "mu " << p.transpose() << " lambda " << lambda;
      EXPECT_GE(b.delta_y, b.residuals.y / b.alpha_lb);
      EXPECT_GE(b.delta_p, b.residuals.p / b.alpha_lb);
      // r_u = <e_u, .>_U - b(., e_p).
      const double slack = 1e-12 * (1.0 + s.u.norm());
      EXPECT_LE(b.residuals.u, e.u + b.gamma_b_ub * e.p + slack);
      ++cases;
    }
  }
  EXPECT_EQ(cases, 45);
}

TEST(ErrorBounds, MisfitErrorIsMinusProjectedStateError) {
  const Fixture& f = fx();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const Parameter p = f.model.domain.sample(rng);
    const Vector cd = f.data(static_cast<std::uint64_t>(k));
    const SaddleSolution s = f.truth.solve(p, 100.0, cd);
    const RBSolution r = solve_rb(f.rb, p, 100.0, cd);
    const Vector e_d = s.d_coords - r.d_coords;
    const Vector proj_e_y = f.ms.project_coords(s.y - lift_y(f.rb, r));
    EXPECT_LT((e_d + proj_e_y).norm(), 1e-9 * std::max(1.0, s.d_coords.norm()));
  }
}

TEST(ErrorBounds, LargerControlSpaceImprovesErrors) {
  const Fixture& f = fx();
  std::mt19937_64 rng(12);
  std::vector<Parameter> params;
  for (int k = 0; k < 10; ++k) params.push_back(f.model.domain.sample(rng));
  std::vector<SaddleSolution> truth;
  for (std::size_t k = 0; k < params.size(); ++k) truth.push_back(f.truth.solve(params[k], 100.0, f.data(k)));
  double prev_error = std::numeric_limits<double>::infinity(), prev_bound = prev_error;
  for (int m = 1; m <= f.model.control_dim(); ++m) {
    const RBSpaces rb = build_rb_spaces(f.model, f.ms, identity_u(f.model).leftCols(m), f.merged.basis);
    double error = 0.0, bound = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const RBSolution r = solve_rb(rb, params[k], 100.0, f.data(k));
      error += true_errors(f.model, rb, truth[k], r).u;
      bound += certify(rb, r).delta_u;
    }
    EXPECT_LE(error, prev_error * (1.0 + 1e-12)) << "dim U_R = " << m;
    EXPECT_LE(bound, prev_bound * (1.0 + 1e-12)) << "dim U_R = " << m;
    prev_error = error;
    prev_bound = bound;
  }
}

TEST(ErrorBounds, ReducedInfSupTransfersToTruth) {
  const Fixture& f = fx();
  const Matrix& z = f.state.basis;
  const Matrix k = Matrix(f.model.space->gram());
  const Matrix s_hat = f.ms.orthonormal_loads();
  for (const Parameter& p : {mu(0.1, 0.1), mu(10.0, 10.0), mu(7.0, 0.3), mu(0.5, 2.0), mu(3.0, 0.2)}) {
    const ResponseBasis truth = build_response_basis(f.model, f.ms, p);
    // Galerkin responses in the state space.
    const Matrix a_r = z.transpose() * (f.model.a_matrix(p) * z);
    const Matrix reduced = z * a_r.ldlt().solve(z.transpose() * f.model.b_matrix(p));
    ResponseBasis r;
    r.mu = p;
    r.responses = reduced;
    r.g_u = truth.g_u;
    r.g_y = reduced.transpose() * k * reduced;
    const Matrix proj = s_hat.transpose() * reduced;
    r.g_proj = proj.transpose() * proj;
    const Matrix diff = truth.responses - reduced;
    const double eps = std::sqrt(std::max(0.0, generalized_eigen(diff.transpose() * k * diff, truth.g_y).values.maxCoeff()));
    EXPECT_LT(eps, 0.1);
    EXPECT_GE(kappa_T(truth), (1.0 - eps) * kappa_T(r) - eps - 1e-12) << "mu " << p.transpose();
  }
}

TEST(RBSpaces, SaveLoadRoundTrip) {
  const Fixture& f = fx();
  const auto dir = std::filesystem::temp_directory_path() / "tdvar_rb_roundtrip";
  std::filesystem::remove_all(dir);
  save_rb_spaces(f.rb, dir);
  const RBSpaces loaded = load_rb_spaces(dir);
  EXPECT_EQ(loaded.y_dim(), f.rb.y_dim());
  EXPECT_EQ(loaded.u_dim(), f.rb.u_dim());
  EXPECT_EQ(loaded.theta_a, f.rb.theta_a);
  ASSERT_EQ(loaded.y_tags.size(), f.rb.y_tags.size());
  EXPECT_EQ(loaded.y_tags.front().source, f.rb.y_tags.front().source);
  const Parameter p = mu(1.5, 0.7);
  const Vector cd = f.data(3);
  const RBSolution a = solve_rb(f.rb, p, 10.0, cd), b = solve_rb(loaded, p, 10.0, cd);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.p, b.p);
  const ErrorBounds ba = certify(f.rb, a), bb = certify(loaded, b);
  EXPECT_EQ(ba.delta_u, bb.delta_u);
  EXPECT_EQ(ba.delta_p, bb.delta_p);
  std::filesystem::remove_all(dir);
}

TEST(RBSpaces, BoundsCsvHasSchemaLine) {
  const Fixture& f = fx();
  const RBSolution r = solve_rb(f.rb, mu(1.0, 1.0), 10.0, f.data(0));
  const std::string csv = bounds_to_csv({certify(f.rb, r)}, {r.mu});
  EXPECT_EQ(csv.rfind("# tdvar-bounds/1\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
