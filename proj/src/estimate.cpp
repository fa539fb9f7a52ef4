#include "tdvar/estimate.hpp"

#include "tdvar/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tdvar {

CostKind parse_cost_kind(const std::string& s) {
  if (s == "j1" || s == "J1" || s == "1") return CostKind::J1;
  if (s == "j2" || s == "J2" || s == "2") return CostKind::J2;
  if (s == "j3" || s == "J3" || s == "3") return CostKind::J3;
  throw std::invalid_argument("unknown cost functional '" + s + "' (expected j1, j2 or j3)");
}

std::string to_string(CostKind kind) { return "j" + std::to_string(static_cast<int>(kind)); }

InnerSolver truth_inner_solver(const Model& model, const MeasurementSpace& ms, const TruthSolver& solver, double lambda,
                               const Vector& data_coords) {
  return [&model, &ms, &solver, lambda, data_coords](const Parameter& mu, bool with_state) {
    const SaddleSolution s = solver.solve(mu, lambda, data_coords);
    InnerSolution out;
    out.u = s.u;
    out.u_norm_sq = s.u.dot(model.u_mass * s.u);
    out.d_coords = s.d_coords;
    out.measured = ms.measure(s.y);
    if (with_state) out.y = s.y;
    return out;
  };
}

InnerSolver rb_inner_solver(const RBSpaces& rb, double lambda, const Vector& data_coords) {
  return [&rb, lambda, data_coords](const Parameter& mu, bool with_state) {
    const RBSolution s = solve_rb(rb, mu, lambda, data_coords);
    InnerSolution out;
    out.u = lift_u(rb, s);
    out.u_norm_sq = s.u.dot(rb.u_mass_r * s.u);
    out.d_coords = s.d_coords;
    out.measured = measure_rb(rb, s);
    if (with_state) out.y = lift_y(rb, s);
    return out;
  };
}

double cost_value(CostKind kind, double lambda, const InnerSolution& s, const Vector& measurements) {
  switch (kind) {
    case CostKind::J1:
      return 0.5 * s.u_norm_sq + 0.5 * lambda * s.d_coords.squaredNorm();
    case CostKind::J2:
      if (measurements.size() != s.measured.size()) throw std::invalid_argument("cost J2: measurement count mismatch");
      return 0.5 * (measurements - s.measured).squaredNorm();
    case CostKind::J3:
      return 0.5 * s.d_coords.squaredNorm();
  }
  throw std::invalid_argument("cost_value: unknown cost kind");
}

double CostFunctional::operator()(const Parameter& mu) const {
  return cost_value(kind, lambda, solver(mu, false), measurements);
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start, const Vector& lower,
                             const Vector& upper, const NelderMeadOptions& options) {
  const Eigen::Index n = start.size();
  if (n == 0 || lower.size() != n || upper.size() != n) throw std::invalid_argument("nelder_mead: dimension mismatch");
  if ((start.array() < lower.array()).any() || (start.array() > upper.array()).any()) {
    throw std::invalid_argument("nelder_mead: start outside the box");
  }
  if (options.max_eval < n + 1) throw std::invalid_argument("nelder_mead: max_eval too small for the initial simplex");
  auto clamp = [&](const Vector& x) { return Vector(x.cwiseMax(lower).cwiseMin(upper)); };
  NelderMeadResult out;
  struct Exhausted {};
  auto eval = [&](const Vector& x) {
    if (out.evaluations >= options.max_eval) throw Exhausted{};
    ++out.evaluations;
    return f(x);
  };

  const std::size_t worst = static_cast<std::size_t>(n);
  std::vector<Vector> x(worst + 1, start);
  std::vector<double> fx(worst + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector v = start;
    v[i] += options.step;
    if (v[i] > upper[i]) v[i] = start[i] - options.step;
    x[static_cast<std::size_t>(i + 1)] = clamp(v);
  }
  for (std::size_t i = 0; i <= worst; ++i) fx[i] = eval(x[i]);

  // Vertices with fx set are always consistent, so an exhausted budget leaves a valid simplex.
  auto sort = [&] {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<Vector> xs;
    std::vector<double> fs;
    for (std::size_t i : order) {
      xs.push_back(x[i]);
      fs.push_back(fx[i]);
    }
    x = std::move(xs);
    fx = std::move(fs);
  };
  auto replace_worst = [&](const Vector& v, double fv) {
    x[worst] = v;
    fx[worst] = fv;
  };

  try {
    while (true) {
      sort();
      out.trace.push_back(fx[0]);
      double size = 0.0, spread = 0.0;
      for (std::size_t i = 1; i <= worst; ++i) {
        size = std::max(size, (x[i] - x[0]).cwiseAbs().maxCoeff());
        spread = std::max(spread, std::abs(fx[i] - fx[0]));
      }
      if (size <= options.tol && spread <= options.tol) {
        out.converged = true;
        break;
      }

      Vector centroid = Vector::Zero(n);
      for (std::size_t i = 0; i < worst; ++i) centroid += x[i];
      centroid /= static_cast<double>(n);

      const Vector xr = clamp(centroid + (centroid - x[worst]));
      const double fr = eval(xr);
      if (fr < fx[0]) {
        const Vector xe = clamp(centroid + 2.0 * (centroid - x[worst]));
        const double fe = eval(xe);
        if (fe < fr) {
          replace_worst(xe, fe);
        } else {
          replace_worst(xr, fr);
        }
        continue;
      }
      if (fr < fx[worst - 1]) {
        replace_worst(xr, fr);
        continue;
      }
      if (fr < fx[worst]) {
        const Vector xc = clamp(centroid + 0.5 * (xr - centroid));
        const double fc = eval(xc);
        if (fc <= fr) {
          replace_worst(xc, fc);
          continue;
        }
      } else {
        const Vector xcc = clamp(centroid + 0.5 * (x[worst] - centroid));
        const double fcc = eval(xcc);
        if (fcc < fx[worst]) {
          replace_worst(xcc, fcc);
          continue;
        }
      }
      for (std::size_t i = 1; i <= worst; ++i) {
        const Vector v = clamp(x[0] + 0.5 * (x[i] - x[0]));
        const double fv = eval(v);
        x[i] = v;
        fx[i] = fv;
      }
    }
  } catch (const Exhausted&) {
    sort();
    out.trace.push_back(fx[0]);
  }
  out.x = x[0];
  out.value = fx[0];
  return out;
}

EstimateResult estimate_parameters(const ParameterDomain& domain, const CostFunctional& cost, const Parameter& start,
                                   const NelderMeadOptions& options) {
  domain.require(start);
  const auto t0 = std::chrono::steady_clock::now();
  const NelderMeadResult nm = nelder_mead([&](const Vector& x) { return cost(domain.from_log(x)); }, domain.to_log(start),
                                          domain.log_lower(), domain.log_upper(), options);
  EstimateResult out;
  out.mu_hat = domain.from_log(nm.x);
  out.value = nm.value;
  out.evaluations = nm.evaluations;
  out.converged = nm.converged;
  out.trace = nm.trace;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ReconstructionErrors reconstruction_errors(const Model& model, const Vector& y_true, const Vector& u, const Vector& y) {
  ReconstructionErrors e;
  e.u = model.trace->l2_distance(model.u_true, model.u_start + u);
  e.y = model.space->norm(y_true - y);
  return e;
}

EnsembleSummary noise_ensemble(const ParameterDomain& domain,
                               const std::function<CostFunctional(const Vector& noisy)>& make_cost,
                               const Vector& measurements, double sigma, int n_seeds, std::uint64_t seed,
                               const Parameter& reference, const Parameter& start, const NelderMeadOptions& options) {
  if (n_seeds < 2) throw std::invalid_argument("noise_ensemble: need at least two seeds");
  std::vector<Parameter> est(static_cast<std::size_t>(n_seeds));
  std::vector<char> ok(static_cast<std::size_t>(n_seeds), 0);
  parallel_for(n_seeds, [&](int k) {
    try {
      const Vector noisy = add_noise(measurements, sigma, seed, static_cast<std::uint64_t>(k));
      est[static_cast<std::size_t>(k)] = estimate_parameters(domain, make_cost(noisy), start, options).mu_hat;
      ok[static_cast<std::size_t>(k)] = 1;
    } catch (const std::exception&) {
      ok[static_cast<std::size_t>(k)] = 0;
    }
  });
  EnsembleSummary s;
  Vector log_sum = Vector::Zero(reference.size());
  for (int k = 0; k < n_seeds; ++k) {
    if (!ok[static_cast<std::size_t>(k)]) {
      s.failures.push_back(k);
      continue;
    }
    const Parameter& p = est[static_cast<std::size_t>(k)];
    s.estimates.push_back(p);
    s.distances.push_back(log_distance(p, reference));
    log_sum += domain.to_log(p);
  }
  if (s.distances.empty()) throw NumericalError("noise_ensemble: every estimate failed");
  const double count = static_cast<double>(s.distances.size());
  s.min = *std::min_element(s.distances.begin(), s.distances.end());
  s.max = *std::max_element(s.distances.begin(), s.distances.end());
  s.mean = std::accumulate(s.distances.begin(), s.distances.end(), 0.0) / count;
  double var = 0.0;
  for (double d : s.distances) var += (d - s.mean) * (d - s.mean);
  s.std_error = s.distances.size() > 1 ? std::sqrt(var / (count - 1.0) / count) : 0.0;
  s.mean_parameter_distance = log_distance(domain.from_log(log_sum / count), reference);
  return s;
}

std::string estimates_to_csv(const std::vector<EstimateRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-estimates/1\n";
  os << "i,lambda,mu1,mu2,log_dist,evals,u_error,y_error,value,seconds\n";
  for (const auto& r : rows) {
    os << static_cast<int>(r.kind) << ',' << r.lambda << ',' << r.result.mu_hat[0] << ','
       << (r.result.mu_hat.size() > 1 ? r.result.mu_hat[1] : 0.0) << ',' << r.log_distance << ','
       << r.result.evaluations << ',' << r.errors.u << ',' << r.errors.y << ',' << r.result.value << ','
       << r.result.seconds << '\n';
  }
  return os.str();
}

std::string ensembles_to_csv(const std::vector<EnsembleRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-ensembles/1\n";
  os << "i,lambda,sigma,seeds,base_seed,min,mean,max,std_error,failures\n";
  for (const auto& r : rows) {
    os << static_cast<int>(r.kind) << ',' << r.lambda << ',' << r.sigma << ',' << r.seeds << ',' << r.base_seed << ','
       << r.summary.min << ',' << r.summary.mean << ',' << r.summary.max << ',' << r.summary.std_error << ','
       << r.summary.failures.size() << '\n';
  }
  return os.str();
}

}  // namespace tdvar
