#include "oracles.hpp"
#include "tdvar/stability.hpp"
#include "tdvar/truth.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

using namespace tdvar;

namespace {

Parameter mu(double a, double b) { return (Parameter(2) << a, b).finished(); }

MeasurementSpace gaussians(const Model& model, const std::vector<Point>& centers, double sigma) {
  std::vector<Vector> g;
  for (const auto& c : centers) g.push_back(gaussian_functional(*model.space, c, sigma));
  return MeasurementSpace::build(model.space, g);
}

const Model& small() {
  static const Model m = make_thermal_block({.nx = 4, .ny = 4});
  return m;
}

const Model& medium() {
  static const Model m = make_thermal_block({.nx = 16, .ny = 16});
  return m;
}

const MeasurementSpace& medium_ms() {
  static const MeasurementSpace ms =
      gaussians(medium(), {Point(0.2, 0.2), Point(0.5, 0.25), Point(0.8, 0.2), Point(0.3, 0.6), Point(0.7, 0.7)}, 0.05);
  return ms;
}

/// Functionals g = K v with v from the given FE vectors.
MeasurementSpace from_states(const Model& model, const Matrix& states) {
  std::vector<Vector> g;
  for (Eigen::Index k = 0; k < states.cols(); ++k) g.emplace_back(model.space->gram() * states.col(k));
  return MeasurementSpace::build(model.space, g);
}

ResponseBasis hand_built(const Matrix& g_u, const Matrix& g_y, const Matrix& g_proj) {
  ResponseBasis rb;
  rb.g_u = g_u;
  rb.g_y = g_y;
  rb.g_proj = g_proj;
  return rb;
}

}  // namespace

TEST(ResponseBasis, ZeroCouplingGivesZeroGram) {
  Model m = small();
  m.b.components[0].setZero();
  const MeasurementSpace ms = gaussians(m, {Point(0.5, 0.5)}, 0.1);
  const ResponseBasis rb = build_response_basis(m, ms, mu(1, 1));
  EXPECT_EQ(rb.g_y.norm(), 0.0);
  EXPECT_THROW(kappa_T(rb), std::invalid_argument);
}

TEST(ResponseBasis, GramMatchesDenseOracle) {
  // a equals the Y inner product at mu = (1,1), so responses are Riesz representers of b(phi_m, .).
  const Model& m = small();
  const MeasurementSpace ms = gaussians(m, {Point(0.3, 0.3), Point(0.6, 0.5)}, 0.1);
  const ResponseBasis rb = build_response_basis(m, ms, mu(1, 1));
  const Matrix k = m.space->gram();
  const Matrix b0 = m.b_matrix(mu(1, 1));
  const Matrix oracle = b0.transpose() * k.inverse() * b0;
  EXPECT_LT((rb.g_y - oracle).norm(), 1e-12 * oracle.norm());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(rb.g_y - rb.g_proj);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * rb.g_y.norm());
}

TEST(Kappa, ContainsOrOrthogonalToResponses) {
  const Model& m = medium();
  const Parameter p = mu(2, 0.5);
  const Matrix y = build_response_basis(m, medium_ms(), p).responses;
  EXPECT_NEAR(kappa_T(build_response_basis(m, from_states(m, y), p)), 1.0, 1e-9);

  // v orthogonal to Y_mu in the Y inner product.
  GramSchmidt q(m.space->gram());
  for (Eigen::Index k = 0; k < y.cols(); ++k) q.add(y.col(k));
  Matrix v(m.state_dim(), 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (auto& e : v.reshaped()) e = normal(rng);
  for (Eigen::Index k = 0; k < v.cols(); ++k) v.col(k) -= q.basis() * q.coefficients(v.col(k));
  EXPECT_LT(kappa_T(build_response_basis(m, from_states(m, v), p)), 1e-6);
}

TEST(Kappa, MatchesMonteCarloOracle) {
  // Y_mu of dimension 3 (quadratic corrections) and 5 random functionals on the 4x4 mesh.
  Model m = make_thermal_block({.nx = 4, .ny = 4, .poly_degree = 2});
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::vector<Vector> g;
  for (int l = 0; l < 5; ++l) {
    Vector v(m.state_dim());
    for (auto& e : v) e = normal(rng);
    g.push_back(v);
  }
  const MeasurementSpace ms = MeasurementSpace::build(m.space, g);
  const Parameter p = mu(0.5, 3.0);
  const double kappa = kappa_T(build_response_basis(m, ms, p));

  const Matrix k = m.space->gram();
  const Matrix a = m.a_matrix(p);
  const Matrix y = a.inverse() * m.b_matrix(p);
  Matrix tau(m.state_dim(), 5);
  for (int l = 0; l < 5; ++l) tau.col(l) = k.inverse() * g[static_cast<std::size_t>(l)];
  const Matrix proj = oracle::dense_projector(tau, k);
  auto ratio = [&](const Vector& c) {
    const Vector v = y * c;
    const Vector pv = proj * v;
    return std::sqrt(pv.dot(k * pv) / v.dot(k * v));
  };
  const double brute = oracle::extremize_ratio(3, ratio, 100000, 5);
  EXPECT_NEAR(kappa, brute, 1e-3 * std::max(brute, 1e-3));
  EXPECT_LE(kappa, brute * (1 + 1e-9));
}

TEST(Eta, IdentityAndScaling) {
  const EtaRatios e = eta_ratios(hand_built(Matrix::Identity(3, 3), Matrix::Identity(3, 3), Matrix::Zero(3, 3)));
  EXPECT_NEAR(e.low, 1.0, 1e-14);
  EXPECT_NEAR(e.high, 1.0, 1e-14);

  const Model& m = medium();
  Model scaled = m;
  scaled.b.components[0] *= 2.0;
  const EtaRatios e1 = eta_ratios(build_response_basis(m, medium_ms(), mu(3, 3)));
  const EtaRatios e2 = eta_ratios(build_response_basis(scaled, medium_ms(), mu(3, 3)));
  EXPECT_NEAR(e2.low, 2.0 * e1.low, 1e-10 * e1.low);
  EXPECT_NEAR(e2.high, 2.0 * e1.high, 1e-10 * e1.high);
  EXPECT_GT(e1.high, 0.0);
}

TEST(Eta, SandwichedByBetaB) {
  const Model& m = medium();
  for (const Parameter& p : {mu(7, 0.3), mu(0.2, 4), mu(1, 1)}) {
    const ResponseBasis rb = build_response_basis(m, medium_ms(), p);
    GramSchmidt w(m.space->gram());
    for (Eigen::Index k = 0; k < rb.responses.cols(); ++k) w.add(rb.responses.col(k));
    const double beta = beta_b(m, p, Matrix::Identity(4, 4), w.basis());
    const double alpha = m.coercivity_lower_bound(p);
    const double gamma = m.a.theta(p).maxCoeff();
    const EtaRatios e = eta_ratios(rb);
    EXPECT_LE(beta / gamma, e.low * (1 + 1e-9));
    EXPECT_LE(e.low, beta / alpha * (1 + 1e-9));
  }
}

TEST(AlphaA, Examples) {
  EXPECT_NEAR(alpha_A_lower_bound(4.0, 0.3, 0.9, 0.5), 1.0, 1e-15);  // lambda kappa^2 = 1
  EXPECT_NEAR(alpha_A_lower_bound(1.0 / 0.25 + 1e-13, 0.3, 0.9, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(alpha_A_lower_bound(123.0, 0.3, 2.0, 0.0), 1.0 / 5.0, 1e-15);
  EXPECT_NEAR(alpha_A_lower_bound(4.0, 1.0, 1.0, 1.0), 2.5, 1e-15);
  EXPECT_THROW(alpha_A_lower_bound(1.0, 2.0, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(alpha_A_lower_bound(-1.0, 0.0, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(alpha_A_lower_bound(1.0, 0.0, 1.0, 1.5), std::invalid_argument);
}

TEST(Delta, IsotropicCase) {
  const double eta = 1.7;
  const Matrix gu = Matrix::Identity(3, 3);
  Matrix gp(3, 3);
  gp << 0.3, 0.1, 0, 0.1, 0.2, 0, 0, 0, 0.1;
  EXPECT_NEAR(delta_true(hand_built(gu, eta * eta * gu, gp), 0.0), 1.0 / (1.0 + eta * eta), 1e-14);
}

TEST(Delta, CoercivityChainAndMonotonicity) {
  const Model& m = medium();
  for (const Parameter& p : {mu(7, 0.3), mu(0.1, 0.1), mu(10, 10)}) {
    const ResponseBasis rb = build_response_basis(m, medium_ms(), p);
    const EtaRatios e = eta_ratios(rb);
    const double kappa = kappa_T(rb);
    double previous = 0.0;
    for (double lambda : {0.0, 0.1, 1.0, 10.0, 1e3}) {
      const double alpha = alpha_A_lower_bound(lambda, e.low, e.high, kappa);
      const double delta = delta_true(rb, lambda);
      EXPECT_LE(1.0 / (1.0 + e.high * e.high), alpha * (1 + 1e-12));
      EXPECT_LE(alpha, delta * (1 + 1e-10));
      EXPECT_LE(delta, std::max(1.0, lambda) * (1 + 1e-12));
      EXPECT_GE(delta, previous * (1 - 1e-12));
      previous = delta;
    }
  }
}

TEST(Delta, MatchesBruteForceRayleigh) {
  const Model& m = small();
  const MeasurementSpace ms = gaussians(m, {Point(0.3, 0.3), Point(0.6, 0.5), Point(0.4, 0.8)}, 0.1);
  const Parameter p = mu(0.3, 2.0);
  const ResponseBasis rb = build_response_basis(m, ms, p);
  const Matrix k = m.space->gram();
  const Matrix y = Matrix(m.a_matrix(p)).inverse() * m.b_matrix(p);
  const Matrix proj = oracle::dense_projector(k.inverse() * ms.functionals(), k);
  for (double lambda : {0.5, 50.0}) {
    auto ratio = [&](const Vector& c) {
      const Vector v = y * c;
      const Vector pv = proj * v;
      return (c.dot(m.u_mass * c) + lambda * pv.dot(k * pv)) / (c.dot(m.u_mass * c) + v.dot(k * v));
    };
    const double brute = oracle::extremize_ratio(4, ratio, 20000, 9);
    EXPECT_NEAR(delta_true(rb, lambda), brute, 1e-3 * brute);
  }
}

TEST(Delta, DichotomyOnMeasurementQuality) {
  // Sensors that see Y_mu entirely (kappa = 1) put lambda = 1e3 well inside the linear regime.
  const Model& m = medium();
  const Parameter p = mu(7, 0.3);
  const Matrix responses = build_response_basis(m, medium_ms(), p).responses;
  const ResponseBasis good = build_response_basis(m, from_states(m, responses), p);
  ASSERT_GT(kappa_T(good), 0.99);
  const double r3 = delta_true(good, 1e3) / 1e3;
  const double r4 = delta_true(good, 1e4) / 1e4;
  EXPECT_NEAR(r3 / r4, 1.0, 0.1);

  GramSchmidt q(m.space->gram());
  for (Eigen::Index k = 0; k < good.responses.cols(); ++k) q.add(good.responses.col(k));
  Matrix v(m.state_dim(), 5);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (auto& e : v.reshaped()) e = normal(rng);
  for (Eigen::Index k = 0; k < v.cols(); ++k) v.col(k) -= q.basis() * q.coefficients(v.col(k));
  EXPECT_LE(delta_true(build_response_basis(m, from_states(m, v), p), 1e4), 1.0 + 1e-9);
}

TEST(BetaB, TrivialCases) {
  const Model& m = medium();
  const Parameter p = mu(1, 1);
  // W spanned by a vector with no inflow trace: b(u, w) = 0.
  Vector w = m.space->interpolate([](const Point& x) { return x.y() * (1.0 - x.y()) * (1.0 + x.x()); });
  w /= m.space->norm(w);
  EXPECT_NEAR(beta_b(m, p, Matrix::Identity(4, 1), w), 0.0, 1e-14);
  // Rank one: W = span of the Riesz representer of b(phi_1, .).
  const Vector r = m.space->riesz(Vector(m.b_matrix(p).col(0)));
  EXPECT_NEAR(beta_b(m, p, Matrix::Identity(4, 1), r / m.space->norm(r)), m.space->norm(r), 1e-12 * m.space->norm(r));
  EXPECT_EQ(beta_b(m, p, Matrix::Identity(4, 4), r / m.space->norm(r)), 0.0);
}

TEST(BetaB, MatchesSampledOracle) {
  const Model& m = small();
  const Parameter p = mu(2, 0.4);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Matrix wraw(m.state_dim(), 6);
  for (auto& e : wraw.reshaped()) e = normal(rng);
  GramSchmidt q(m.space->gram());
  for (Eigen::Index k = 0; k < 6; ++k) q.add(wraw.col(k));
  const double beta = beta_b(m, p, Matrix::Identity(4, 4), q.basis());
  // sup over W equals |Pi_W Riesz(b(u, .))|_Y.
  const Matrix k = m.space->gram();
  const Matrix proj = oracle::dense_projector(wraw, k);
  const Matrix riesz_b = k.inverse() * m.b_matrix(p);
  auto ratio = [&](const Vector& c) {
    const Vector v = proj * (riesz_b * c);
    return std::sqrt(v.dot(k * v) / c.dot(m.u_mass * c));
  };
  const double brute = oracle::extremize_ratio(4, ratio, 20000, 13);
  EXPECT_NEAR(beta, brute, 1e-3 * brute);
}

TEST(BetaTPair, ReducesToKappaOnEnlargedSpace) {
  const Model& m = medium();
  const ResponseBasis rb = build_response_basis(m, medium_ms(), mu(2, 2));
  ResponseBasis enlarged = rb;
  enlarged.responses.conservativeResize(Eigen::NoChange, rb.responses.cols() + 1);
  enlarged.responses.col(rb.responses.cols()) = rb.y_bk;
  const Matrix k = m.space->gram();
  const Matrix proj = medium_ms().orthonormal_loads().transpose() * enlarged.responses;
  enlarged.g_y = enlarged.responses.transpose() * k * enlarged.responses;
  enlarged.g_proj = proj.transpose() * proj;
  EXPECT_NEAR(beta_T_pair(medium_ms(), rb, rb), kappa_T(enlarged), 1e-8);
}

TEST(BetaTPair, MatchesMonteCarloOracle) {
  const Model& m = small();
  const MeasurementSpace ms =
      gaussians(m, {Point(0.2, 0.2), Point(0.5, 0.3), Point(0.8, 0.2), Point(0.3, 0.6), Point(0.7, 0.7),
                    Point(0.5, 0.5), Point(0.2, 0.8), Point(0.8, 0.8), Point(0.5, 0.1), Point(0.1, 0.5)},
                0.1);
  const Parameter p1 = mu(0.3, 2.0), p2 = mu(5.0, 0.2);
  const ResponseBasis r1 = build_response_basis(m, ms, p1);
  const ResponseBasis r2 = build_response_basis(m, ms, p2);
  const double beta = beta_T_pair(ms, r1, r2);
  Matrix span(m.state_dim(), 10);
  span << r1.y_bk, r2.y_bk, r1.responses, r2.responses;
  const Matrix k = m.space->gram();
  const Matrix proj = oracle::dense_projector(k.inverse() * ms.functionals(), k);
  auto ratio = [&](const Vector& c) {
    const Vector v = span * c;
    const Vector pv = proj * v;
    return std::sqrt(pv.dot(k * pv) / v.dot(k * v));
  };
  // span has dimension 9 at most (y_bk = response to phi_0 scaled), sample in the full coefficient space.
  const double brute = oracle::extremize_ratio(10, ratio, 50000, 17);
  EXPECT_NEAR(beta, brute, 1e-3 * std::max(brute, 1e-2));
}

TEST(BetaTPair, ZeroWhenSensorsSeeNothing) {
  const Model& m = medium();
  const ResponseBasis r1 = build_response_basis(m, medium_ms(), mu(2, 2));
  const ResponseBasis r2 = build_response_basis(m, medium_ms(), mu(0.5, 0.5));
  GramSchmidt q(m.space->gram());
  for (const auto* r : {&r1, &r2}) {
    q.add(r->y_bk);
    for (Eigen::Index k = 0; k < r->responses.cols(); ++k) q.add(r->responses.col(k));
  }
  Matrix v(m.state_dim(), 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (auto& e : v.reshaped()) e = normal(rng);
  for (Eigen::Index k = 0; k < v.cols(); ++k) v.col(k) -= q.basis() * q.coefficients(v.col(k));
  const MeasurementSpace ortho = from_states(m, v);
  EXPECT_LT(beta_T_pair(ortho, build_response_basis(m, ortho, mu(2, 2)), build_response_basis(m, ortho, mu(0.5, 0.5))),
            1e-6);
}

TEST(Brezzi, Examples) {
  const BrezziBounds zero = brezzi_stability_coefficients(0.5, 1.0, 0.7, 0.0, 0.0, 1.0);
  EXPECT_EQ(zero.primal, 0.0);
  EXPECT_EQ(zero.adjoint, 0.0);
  const BrezziBounds b = brezzi_stability_coefficients(1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(b.primal, 1.0);
  EXPECT_DOUBLE_EQ(b.adjoint, 2.0);
  EXPECT_THROW(brezzi_stability_coefficients(1.0, 1.0, 0.0, 1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(Brezzi, TruthSolutionsRespectBounds) {
  const Model& m = medium();
  const MeasurementSpace& ms = medium_ms();
  const TruthSolver solver(m, ms);
  std::mt19937_64 rng(99);
  const Vector clean = ms.measure(m.manufacture_truth(m.mu_true, m.u_true));
  for (int trial = 0; trial < 50; ++trial) {
    const Parameter p = m.domain.sample(rng);
    const double lambda = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 4.0)(rng));
    const Vector data = ms.data_coords(add_noise(clean, 0.01, 5, static_cast<std::uint64_t>(trial)));
    const SaddleSolution s = solver.solve(p, lambda, data);
    const ResponseBasis rb = build_response_basis(m, ms, p);
    const BrezziBounds bounds =
        brezzi_stability_coefficients(m.coercivity_lower_bound(p), std::max(1.0, lambda), delta_true(rb, lambda),
                                      data.norm(), m.space->dual_norm(m.f_vector(p)), lambda);
    const double h_norm = std::sqrt(s.u.dot(m.u_mass * s.u) + m.space->inner(s.y, s.y));
    EXPECT_LE(h_norm, bounds.primal);
    EXPECT_LE(m.space->norm(s.p), bounds.adjoint);
  }
}

TEST(Stability, CsvSchema) {
  const ResponseBasis rb = build_response_basis(medium(), medium_ms(), mu(7, 0.3));
  const std::string csv = stability_to_csv({stability_row(rb, 10.0)});
  EXPECT_EQ(csv.rfind("# tdvar-stability/1\nmu1,mu2,lambda,kappa_T,eta_low,eta_high,alpha_A_LB,delta,delta_over_alpha\n", 0),
            0u);
}
