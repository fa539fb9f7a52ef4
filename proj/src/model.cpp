#include "tdvar/model.hpp"

#include "tdvar/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace tdvar {

ParameterDomain::ParameterDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw std::invalid_argument("ParameterDomain: bounds must be nonempty and of equal length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] > 0.0) || !(lower_[i] < upper_[i]) || !std::isfinite(upper_[i])) {
      throw std::invalid_argument("ParameterDomain: need 0 < lower < upper < inf per component");
    }
  }
}

ParameterDomain ParameterDomain::thermal_block() {
  return ParameterDomain(Vector::Constant(2, 0.1), Vector::Constant(2, 10.0));
}

bool ParameterDomain::contains(const Parameter& mu) const {
  if (mu.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double slack = 1e-12 * upper_[i];
    if (!(mu[i] >= lower_[i] - slack && mu[i] <= upper_[i] + slack)) return false;
  }
  return true;
}

void ParameterDomain::require(const Parameter& mu) const {
  if (mu.size() != lower_.size()) {
    throw std::invalid_argument("parameter has " + std::to_string(mu.size()) + " components, expected " +
                                std::to_string(lower_.size()));
  }
  if (!contains(mu)) {
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      if (!(mu[i] >= lower_[i] && mu[i] <= upper_[i])) {
        throw std::invalid_argument("parameter component " + std::to_string(i + 1) + " = " + std::to_string(mu[i]) +
                                    " outside [" + std::to_string(lower_[i]) + ", " + std::to_string(upper_[i]) + "]");
      }
    }
  }
}

Vector ParameterDomain::to_log(const Parameter& mu) const { return mu.array().log10(); }

Parameter ParameterDomain::from_log(const Vector& log_mu) const {
  Parameter mu(log_mu.size());
  for (Eigen::Index i = 0; i < log_mu.size(); ++i) mu[i] = std::clamp(std::pow(10.0, log_mu[i]), lower_[i], upper_[i]);
  return mu;
}

Vector ParameterDomain::clamp_log(const Vector& log_mu) const {
  return log_mu.cwiseMax(log_lower()).cwiseMin(log_upper());
}

std::vector<Parameter> ParameterDomain::log_grid(int n) const {
  if (n < 1) throw std::invalid_argument("log_grid: need at least one point per axis");
  const Vector lo = log_lower();
  const Vector hi = log_upper();
  const int d = dim();
  long total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  std::vector<Parameter> grid;
  grid.reserve(static_cast<std::size_t>(total));
  for (long k = 0; k < total; ++k) {
    Vector log_mu(d);
    long rest = k;
    for (int i = 0; i < d; ++i) {
      const long idx = rest % n;
      rest /= n;
      log_mu[i] = n == 1 ? 0.5 * (lo[i] + hi[i]) : lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx) / (n - 1);
    }
    grid.push_back(from_log(log_mu));
  }
  return grid;
}

std::vector<Parameter> ParameterDomain::log_boundary(int count) const {
  if (dim() != 2) throw std::invalid_argument("log_boundary: only defined for two parameters");
  if (count < 4) throw std::invalid_argument("log_boundary: need at least 4 points");
  const Vector lo = log_lower();
  const Vector hi = log_upper();
  const double wx = hi[0] - lo[0];
  const double wy = hi[1] - lo[1];
  const double perimeter = 2.0 * (wx + wy);
  std::vector<Parameter> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    double s = perimeter * k / count;
    Vector p(2);
    if (s < wx) {
      p << lo[0] + s, lo[1];
    } else if ((s -= wx) < wy) {
      p << hi[0], lo[1] + s;
    } else if ((s -= wy) < wx) {
      p << hi[0] - s, hi[1];
    } else {
      s -= wx;
      p << lo[0], hi[1] - s;
    }
    out.push_back(from_log(p));
  }
  return out;
}

Parameter ParameterDomain::sample(std::mt19937_64& rng) const {
  const Vector lo = log_lower();
  const Vector hi = log_upper();
  Vector p(dim());
  for (int i = 0; i < dim(); ++i) p[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
  return from_log(p);
}

double log_distance(const Parameter& a, const Parameter& b) {
  if (a.size() != b.size()) throw std::invalid_argument("log_distance: size mismatch");
  return (a.array().log10() - b.array().log10()).matrix().norm();
}

Coefficient coefficient_by_name(const std::string& name) {
  if (name == "one") return {name, [](const Parameter&) { return 1.0; }};
  if (name.size() > 2 && name.rfind("mu", 0) == 0) {
    const int k = std::stoi(name.substr(2));
    if (k >= 1) {
      return {name, [k](const Parameter& mu) {
                if (mu.size() < k) throw std::invalid_argument("coefficient: parameter too short");
                return mu[k - 1];
              }};
    }
  }
  throw std::invalid_argument("unknown coefficient function '" + name + "'");
}

StateSolver::StateSolver(const SparseMatrix& a) : llt_(std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(a)) {
  if (llt_->info() != Eigen::Success) throw NumericalError("StateSolver: Cholesky factorization failed");
}

Vector StateSolver::solve(const Vector& rhs) const { return llt_->solve(rhs); }

Matrix StateSolver::solve(const Matrix& rhs) const { return llt_->solve(rhs); }

SparseMatrix Model::a_matrix(const Parameter& mu) const {
  domain.require(mu);
  return a.evaluate(mu);
}

Matrix Model::b_matrix(const Parameter& mu) const {
  domain.require(mu);
  return b.evaluate(mu);
}

Vector Model::f_vector(const Parameter& mu) const {
  domain.require(mu);
  return f.evaluate(mu);
}

double Model::coercivity_lower_bound(const Parameter& mu) const {
  domain.require(mu);
  return a.theta(mu).minCoeff();
}

double Model::continuity_upper_bound_b(const Parameter& mu) const {
  domain.require(mu);
  if (b_component_norms.size() != b.size()) throw std::logic_error("continuity_upper_bound_b: norms not computed");
  const Vector theta = b.theta(mu);
  double sum = 0.0;
  for (std::size_t q = 0; q < b.size(); ++q) sum += std::abs(theta[static_cast<Eigen::Index>(q)]) * b_component_norms[q];
  return sum;
}

StateSolver Model::state_solver(const Parameter& mu) const { return StateSolver(a_matrix(mu)); }

Vector Model::best_knowledge_state(const Parameter& mu) const { return state_solver(mu).solve(f_vector(mu)); }

Vector Model::manufacture_truth(const Parameter& mu, const Vector& u_coeffs) const {
  return state_solver(mu).solve(Vector(b_matrix(mu) * u_coeffs));
}

Vector Model::manufacture_truth(const Parameter& mu, const std::function<double(double)>& u) const {
  return state_solver(mu).solve(assemble_boundary_load(*space, u));
}

void Model::update_b_norms() {
  // sup b(u, y) / (|u|_U |y|_Y) = sigma_max(L^{-1} P B L_U^{-T}) with K = P^T L L^T P and U = L_U L_U^T.
  const auto& factor = space->gram_factor();
  const Eigen::LLT<Matrix> u_llt(u_mass);
  b_component_norms.clear();
  for (const Matrix& bq : b.components) {
    Matrix scaled = factor.permutationP() * bq;
    scaled = factor.matrixL().solve(scaled);
    scaled = u_llt.matrixU().transpose().solve(scaled.transpose()).transpose();
    b_component_norms.push_back(largest_singular_value(scaled));
  }
}

Model make_thermal_block(const ThermalBlockOptions& options) {
  Model model;
  auto space = std::make_shared<FESpace>(build_mesh(options.nx, options.ny));
  auto trace = std::make_shared<BoundaryTraceSpace>(options.poly_degree);
  model.domain = ParameterDomain::thermal_block();
  model.domain.require(options.mu_true);

  model.a.coefficients = {coefficient_by_name("one"), coefficient_by_name("mu1"), coefficient_by_name("mu2")};
  for (int s = 0; s < 3; ++s) model.a.components.push_back(space->assemble_subdomain_stiffness(s));

  model.b.coefficients = {coefficient_by_name("one")};
  model.b.components = {assemble_boundary_coupling(*space, *trace)};

  model.u_start = trace->project([](double) { return 1.0; });
  model.f.coefficients = {coefficient_by_name("one")};
  model.f.components = {model.b.components[0] * model.u_start};

  model.u_mass = trace->mass();
  model.mu_true = options.mu_true;
  const double mean = options.u_true_mean;
  const double amp = options.u_true_amplitude;
  model.u_true = [mean, amp](double x) { return mean + amp * std::sin(2.0 * std::numbers::pi * x); };
  model.space = std::move(space);
  model.trace = std::move(trace);
  model.update_b_norms();
  return model;
}

}  // namespace tdvar
