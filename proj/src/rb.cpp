#include "tdvar/rb.hpp"

#include "tdvar/io.hpp"

#include "json.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>
#include <sstream>

namespace tdvar {

namespace {

Vector thetas(const std::vector<std::string>& names, const Parameter& mu) {
  Vector t(static_cast<Eigen::Index>(names.size()));
  for (std::size_t q = 0; q < names.size(); ++q) t[static_cast<Eigen::Index>(q)] = coefficient_by_name(names[q]).fn(mu);
  return t;
}

std::vector<std::string> names_of(const std::vector<Coefficient>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.name);
  return out;
}

template <class M>
M combine(const std::vector<M>& parts, const Vector& theta) {
  M sum = theta[0] * parts[0];
  for (std::size_t q = 1; q < parts.size(); ++q) sum += theta[static_cast<Eigen::Index>(q)] * parts[q];
  return sum;
}

}  // namespace

Vector RBSpaces::theta_a_at(const Parameter& mu) const { return thetas(theta_a, mu); }
Vector RBSpaces::theta_b_at(const Parameter& mu) const { return thetas(theta_b, mu); }
Vector RBSpaces::theta_f_at(const Parameter& mu) const { return thetas(theta_f, mu); }

double RBSpaces::alpha_lb(const Parameter& mu) const {
  domain.require(mu);
  return theta_a_at(mu).minCoeff();
}

double RBSpaces::gamma_b_ub(const Parameter& mu) const {
  const Vector t = theta_b_at(mu);
  double sum = 0.0;
  for (Eigen::Index q = 0; q < t.size(); ++q) sum += std::abs(t[q]) * b_component_norms[static_cast<std::size_t>(q)];
  return sum;
}

RBSpaces build_rb_spaces(const Model& model, const MeasurementSpace& ms, const Matrix& u_basis, const Matrix& y_basis,
                         std::vector<BasisTag> y_tags) {
  const FESpace& space = *model.space;
  if (y_basis.rows() != space.dim() || u_basis.rows() != model.control_dim()) {
    throw std::invalid_argument("build_rb_spaces: basis dimensions do not match the model");
  }
  if (y_basis.cols() == 0 || u_basis.cols() == 0) throw std::invalid_argument("build_rb_spaces: empty basis");
  for (const SparseMatrix& aq : model.a.components) {
    if ((aq - SparseMatrix(aq.transpose())).norm() > 1e-12 * aq.norm()) {
      throw std::invalid_argument("build_rb_spaces: a components must be symmetric");
    }
  }
  const Matrix& z = y_basis;
  const Matrix& e = u_basis;
  RBSpaces rb;
  rb.domain = model.domain;
  rb.theta_a = names_of(model.a.coefficients);
  rb.theta_b = names_of(model.b.coefficients);
  rb.theta_f = names_of(model.f.coefficients);
  rb.b_component_norms = model.b_component_norms;
  rb.u_basis = e;
  rb.y_basis = z;
  rb.y_tags = std::move(y_tags);

  std::vector<Matrix> az;
  for (const SparseMatrix& aq : model.a.components) {
    az.push_back(aq * z);
    rb.a_r.push_back(z.transpose() * az.back());
  }
  std::vector<Matrix> be;
  for (const Matrix& bq : model.b.components) {
    be.push_back(bq * e);
    rb.b_r.push_back(z.transpose() * be.back());
    rb.bt_z.push_back(bq.transpose() * z);
  }
  for (const Vector& fq : model.f.components) rb.f_r.push_back(z.transpose() * fq);
  rb.u_mass_r = e.transpose() * model.u_mass * e;
  rb.u_mass_e = model.u_mass * e;
  const Eigen::LLT<Matrix> u_llt(model.u_mass);
  if (u_llt.info() != Eigen::Success) throw NumericalError("build_rb_spaces: U Gram matrix is not positive definite");
  rb.u_chol = u_llt.matrixL();
  const Matrix s_hat = ms.orthonormal_loads();
  rb.s_r = z.transpose() * s_hat;
  rb.g_r = ms.functionals().transpose() * z;

  DualNormEvaluator eval(space);
  for (const Vector& fq : model.f.components) eval.append(fq);
  for (const Matrix& m : be) eval.append(m);
  for (const Matrix& m : az) eval.append(m);
  eval.append(s_hat);
  rb.residual_w = eval.coordinates();
  return rb;
}

RBSolution solve_rb(const RBSpaces& rb, const Parameter& mu, double lambda, const Vector& data_coords) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve_rb: lambda must be nonnegative");
  rb.domain.require(mu);
  const Eigen::Index l = rb.s_r.cols();
  if (data_coords.size() != l) throw std::invalid_argument("solve_rb: data has wrong length");
  const Eigen::Index n = rb.y_dim(), m = rb.u_dim();

  const Matrix a = combine(rb.a_r, rb.theta_a_at(mu));
  Matrix rhs(n, 1 + m);
  rhs.col(0) = combine(rb.f_r, rb.theta_f_at(mu));
  rhs.rightCols(m) = combine(rb.b_r, rb.theta_b_at(mu));
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("solve_rb: reduced operator is not positive definite");
  const Matrix x = llt.solve(rhs);
  const auto y0 = x.col(0);
  const auto response = x.rightCols(m);

  const Matrix o = rb.s_r.transpose() * response;
  const Vector misfit0 = data_coords - rb.s_r.transpose() * y0;
  RBSolution sol;
  sol.mu = mu;
  sol.lambda = lambda;
  if (lambda > 0.0) {
    const Matrix h = rb.u_mass_r + lambda * (o.transpose() * o);
    const Eigen::LLT<Matrix> h_llt(h);
    if (h_llt.info() != Eigen::Success) throw NumericalError("solve_rb: reduced control system is not positive definite");
    sol.u = h_llt.solve(lambda * (o.transpose() * misfit0));
  } else {
    sol.u = Vector::Zero(m);
  }
  sol.y = y0 + response * sol.u;
  sol.d_coords = misfit0 - o * sol.u;
  sol.p = lambda > 0.0 ? Vector(lambda * llt.solve(rb.s_r * sol.d_coords)) : Vector(Vector::Zero(n));
  sol.cost = 0.5 * sol.u.dot(rb.u_mass_r * sol.u) + 0.5 * lambda * sol.d_coords.squaredNorm();
  return sol;
}

Vector lift_u(const RBSpaces& rb, const RBSolution& sol) { return rb.u_basis * sol.u; }
Vector lift_y(const RBSpaces& rb, const RBSolution& sol) { return rb.y_basis * sol.y; }
Vector lift_p(const RBSpaces& rb, const RBSolution& sol) { return rb.y_basis * sol.p; }
Vector measure_rb(const RBSpaces& rb, const RBSolution& sol) { return rb.g_r * sol.y; }

ResidualNorms residual_norms(const RBSpaces& rb, const RBSolution& sol) {
  const Vector ta = rb.theta_a_at(sol.mu), tb = rb.theta_b_at(sol.mu), tf = rb.theta_f_at(sol.mu);
  const Eigen::Index n = rb.y_dim(), m = rb.u_dim(), l = rb.measurement_count();
  const Eigen::Index qf = tf.size(), qb = tb.size(), qa = ta.size();
  const Eigen::Index off_b = qf, off_a = qf + qb * m, off_t = off_a + qa * n, terms = off_t + l;
  if (rb.residual_w.cols() != terms) throw std::logic_error("residual_norms: inconsistent residual data");

  ResidualNorms out;
  // r_u(phi) = b(phi, p_R) - <u_R, phi>_U, measured in the U' norm through the U Cholesky factor.
  Vector ru = -rb.u_mass_e * sol.u;
  for (Eigen::Index q = 0; q < qb; ++q) ru += tb[q] * (rb.bt_z[static_cast<std::size_t>(q)] * sol.p);
  out.u = rb.u_chol.triangularView<Eigen::Lower>().solve(ru).norm();

  const auto w = rb.residual_w.triangularView<Eigen::Upper>();
  // r_y = f + b(u_R, .) - a(y_R, .)
  Vector c = Vector::Zero(terms);
  c.head(qf) = tf;
  for (Eigen::Index q = 0; q < qb; ++q) c.segment(off_b + q * m, m) = tb[q] * sol.u;
  for (Eigen::Index q = 0; q < qa; ++q) c.segment(off_a + q * n, n) = -ta[q] * sol.y;
  out.y = Vector(w * c).norm();
  // r_p = lambda <., d_R>_Y - a(., p_R)
  c.setZero();
  for (Eigen::Index q = 0; q < qa; ++q) c.segment(off_a + q * n, n) = -ta[q] * sol.p;
  c.tail(l) = sol.lambda * sol.d_coords;
  out.p = Vector(w * c).norm();
  return out;
}

ErrorBounds error_bounds(const ResidualNorms& norms, double alpha_lb, double gamma_b_ub, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("error_bounds: lambda must be positive");
  if (!(alpha_lb > 0.0)) throw std::invalid_argument("error_bounds: alpha_LB must be positive");
  if (!(gamma_b_ub >= 0.0)) throw std::invalid_argument("error_bounds: gamma_b must be nonnegative");
  if (!(norms.u >= 0.0) || !(norms.p >= 0.0) || !(norms.y >= 0.0)) {
    throw std::invalid_argument("error_bounds: residual norms must be nonnegative");
  }
  ErrorBounds b;
  b.residuals = norms;
  b.alpha_lb = alpha_lb;
  b.gamma_b_ub = gamma_b_ub;
  b.lambda = lambda;
  const double a = alpha_lb, g = gamma_b_ub;
  const double ru = norms.u, rp = norms.p, ry = norms.y;
  auto root = [](double p, double q) { return 0.5 * p + std::sqrt(std::max(0.0, 0.25 * p * p + q)); };
  b.p_u = ru + g / a * rp;
  b.q_u = 2.0 / a * rp * ry + lambda / (4.0 * a * a) * ry * ry;
  b.delta_u = root(b.p_u, b.q_u);
  b.delta_y = ry / a + g / a * b.delta_u;
  b.p_d = ry / a;
  b.q_d = 2.0 / (lambda * a) * rp * ry + b.p_u * b.p_u / (4.0 * lambda);
  b.delta_d = root(b.p_d, b.q_d);
  b.delta_p = rp / a + lambda / a * b.delta_d;
  return b;
}

ErrorBounds certify(const RBSpaces& rb, const RBSolution& sol) {
  return error_bounds(residual_norms(rb, sol), rb.alpha_lb(sol.mu), rb.gamma_b_ub(sol.mu), sol.lambda);
}

void save_rb_spaces(const RBSpaces& rb, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = "tdvar-rb/1";
  j["domain"] = {{"lower", std::vector<double>(rb.domain.lower().data(), rb.domain.lower().data() + rb.domain.dim())},
                 {"upper", std::vector<double>(rb.domain.upper().data(), rb.domain.upper().data() + rb.domain.dim())}};
  j["theta_a"] = rb.theta_a;
  j["theta_b"] = rb.theta_b;
  j["theta_f"] = rb.theta_f;
  j["b_component_norms"] = rb.b_component_norms;
  j["dims"] = {{"U", rb.u_basis.rows()},
               {"Y", rb.y_basis.rows()},
               {"U_R", rb.u_dim()},
               {"Y_R", rb.y_dim()},
               {"T", rb.measurement_count()},
               {"residual_rank", rb.residual_w.rows()}};
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& t : rb.y_tags) {
    tags.push_back({{"source", t.source}, {"mu", std::vector<double>(t.mu.data(), t.mu.data() + t.mu.size())}});
  }
  j["y_tags"] = tags;

  std::map<std::string, const Matrix*> files = {{"u_basis", &rb.u_basis}, {"y_basis", &rb.y_basis},
                                                {"u_mass_r", &rb.u_mass_r}, {"s_r", &rb.s_r},
                                                {"g_r", &rb.g_r},           {"u_mass_e", &rb.u_mass_e},
                                                {"u_chol", &rb.u_chol},     {"residual_w", &rb.residual_w}};
  std::vector<Matrix> vectors;
  auto add_list = [&](const std::string& stem, const std::vector<Matrix>& list) {
    for (std::size_t q = 0; q < list.size(); ++q) files[stem + "_" + std::to_string(q)] = &list[q];
  };
  add_list("a_r", rb.a_r);
  add_list("b_r", rb.b_r);
  add_list("bt_z", rb.bt_z);
  vectors.reserve(rb.f_r.size());
  for (const Vector& f : rb.f_r) vectors.emplace_back(f);
  add_list("f_r", vectors);
  nlohmann::json file_list = nlohmann::json::object();
  for (const auto& [name, m] : files) {
    const std::string fname = name + ".mtx";
    write_matrix_market(dir / fname, *m);
    file_list[name] = fname;
  }
  j["files"] = file_list;
  atomic_write(dir / "manifest.json", j.dump(2) + "\n");
}

RBSpaces load_rb_spaces(const std::filesystem::path& dir) {
  const nlohmann::json j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  if (j.value("format", "") != "tdvar-rb/1") throw std::runtime_error(dir.string() + ": not a reduced basis directory");
  auto vec = [](const std::vector<double>& v) { return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))); };
  RBSpaces rb;
  rb.domain = ParameterDomain(vec(j["domain"]["lower"].get<std::vector<double>>()),
                              vec(j["domain"]["upper"].get<std::vector<double>>()));
  rb.theta_a = j["theta_a"].get<std::vector<std::string>>();
  rb.theta_b = j["theta_b"].get<std::vector<std::string>>();
  rb.theta_f = j["theta_f"].get<std::vector<std::string>>();
  rb.b_component_norms = j["b_component_norms"].get<std::vector<double>>();
  for (const auto& t : j["y_tags"]) rb.y_tags.push_back({t["source"].get<std::string>(), vec(t["mu"].get<std::vector<double>>())});
  auto read = [&](const std::string& name) { return read_matrix_market(dir / j["files"].at(name).get<std::string>()); };
  rb.u_basis = read("u_basis");
  rb.y_basis = read("y_basis");
  rb.u_mass_r = read("u_mass_r");
  rb.s_r = read("s_r");
  rb.g_r = read("g_r");
  rb.u_mass_e = read("u_mass_e");
  rb.u_chol = read("u_chol");
  rb.residual_w = read("residual_w");
  for (std::size_t q = 0; q < rb.theta_a.size(); ++q) rb.a_r.push_back(read("a_r_" + std::to_string(q)));
  for (std::size_t q = 0; q < rb.theta_b.size(); ++q) {
    rb.b_r.push_back(read("b_r_" + std::to_string(q)));
    rb.bt_z.push_back(read("bt_z_" + std::to_string(q)));
  }
  for (std::size_t q = 0; q < rb.theta_f.size(); ++q) rb.f_r.push_back(read("f_r_" + std::to_string(q)).col(0));
  return rb;
}

std::string bounds_to_csv(const std::vector<ErrorBounds>& bounds, const std::vector<Parameter>& mus) {
  if (bounds.size() != mus.size()) throw std::invalid_argument("bounds_to_csv: size mismatch");
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-bounds/1\n";
  os << "mu1,mu2,lambda,res_u,res_p,res_y,alpha_lb,gamma_b_ub,p_u,q_u,p_d,q_d,delta_u,delta_y,delta_d,delta_p\n";
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto& b = bounds[i];
    os << mus[i][0] << ',' << (mus[i].size() > 1 ? mus[i][1] : 0.0) << ',' << b.lambda << ',' << b.residuals.u << ','
       << b.residuals.p << ',' << b.residuals.y << ',' << b.alpha_lb << ',' << b.gamma_b_ub << ',' << b.p_u << ','
       << b.q_u << ',' << b.p_d << ',' << b.q_d << ',' << b.delta_u << ',' << b.delta_y << ',' << b.delta_d << ','
       << b.delta_p << '\n';
  }
  return os.str();
}

}  // namespace tdvar
