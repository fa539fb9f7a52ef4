#include "tdvar/omp.hpp"

#include "tdvar/linalg.hpp"
#include "tdvar/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace tdvar {

namespace {

/// Orthonormal columns spanning the columns of v (Euclidean), dropping dependent ones.
Matrix orthonormal_columns(const Matrix& v, double drop_tol = 1e-10) {
  GramSchmidt gs(v.rows(), drop_tol);
  for (Eigen::Index k = 0; k < v.cols(); ++k) gs.add(v.col(k));
  return gs.basis();
}

/// Unit vector x of minimal |p x| and the minimum itself; p has full column count as unknowns.
std::pair<double, Vector> smallest_right_singular(const Matrix& p) {
  const Eigen::Index r = p.cols();
  if (p.rows() == 0) return {0.0, Vector::Unit(r, 0)};
  const Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullV);
  const double s = p.rows() >= r ? svd.singularValues()[r - 1] : 0.0;
  return {s, svd.matrixV().col(r - 1)};
}

/// Reduced per-parameter spaces in coordinates of the Y-orthonormal state basis.
struct TrainingSpaces {
  /// Orthonormal basis of the reduced response space Y_mu,R.
  std::vector<Matrix> responses;
  /// Orthonormal basis of span{y_bk,R(mu), Y_mu,R}.
  std::vector<Matrix> extended;
};

TrainingSpaces reduced_spaces(const Model& model, const Matrix& z, const Matrix& u_basis,
                              const std::vector<Parameter>& training) {
  const std::size_t qa = model.a.size();
  std::vector<Matrix> a_r(qa);
  for (std::size_t q = 0; q < qa; ++q) a_r[q] = z.transpose() * (model.a.components[q] * z);
  std::vector<Matrix> b_r;
  for (const Matrix& bq : model.b.components) b_r.push_back(z.transpose() * (bq * u_basis));
  std::vector<Vector> f_r;
  for (const Vector& fq : model.f.components) f_r.push_back(z.transpose() * fq);

  TrainingSpaces out;
  out.responses.resize(training.size());
  out.extended.resize(training.size());
  parallel_for(static_cast<int>(training.size()), [&](int i) {
    const Parameter& mu = training[static_cast<std::size_t>(i)];
    const Vector ta = model.a.theta(mu), tb = model.b.theta(mu), tf = model.f.theta(mu);
    Matrix a = ta[0] * a_r[0];
    for (std::size_t q = 1; q < qa; ++q) a += ta[static_cast<Eigen::Index>(q)] * a_r[q];
    Matrix b = tb[0] * b_r[0];
    for (std::size_t q = 1; q < b_r.size(); ++q) b += tb[static_cast<Eigen::Index>(q)] * b_r[q];
    Vector f = tf[0] * f_r[0];
    for (std::size_t q = 1; q < f_r.size(); ++q) f += tf[static_cast<Eigen::Index>(q)] * f_r[q];
    const Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("greedy_omp: reduced operator is not positive definite");
    const Matrix v = llt.solve(b);
    const Vector y_bk = llt.solve(f);
    out.responses[static_cast<std::size_t>(i)] = orthonormal_columns(v);
    Matrix ext(v.rows(), v.cols() + 1);
    ext << y_bk, v;
    out.extended[static_cast<std::size_t>(i)] = orthonormal_columns(ext);
  });
  return out;
}

struct PairResult {
  double beta = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  std::size_t j = 0;
  /// Unit vector (state basis coordinates) attaining the pair constant.
  Vector worst;
};

}  // namespace

FunctionalLibrary gaussian_library(const FESpace& space, int n, double lo, double hi, double sigma) {
  if (n < 1) throw std::invalid_argument("gaussian_library: need at least one center per axis");
  std::vector<Point> centers;
  FunctionalLibrary lib;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
      const double y = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (n - 1);
      centers.emplace_back(x, y);
      lib.sensors.push_back({x, y, sigma});
    }
  }
  lib.functionals = gaussian_functionals(space, centers, sigma);
  return lib;
}

OmpResult greedy_omp(const Model& model, const Matrix& y_basis, const Matrix& u_basis, const FunctionalLibrary& library,
                     const std::vector<Parameter>& training, const OmpOptions& options) {
  const FESpace& space = *model.space;
  if (library.size() == 0) throw std::invalid_argument("greedy_omp: empty library");
  if (training.empty()) throw std::invalid_argument("greedy_omp: empty training set");
  if (!(options.beta0 > 0.0)) throw std::invalid_argument("greedy_omp: beta0 must be positive");
  if (y_basis.rows() != space.dim() || y_basis.cols() == 0) throw std::invalid_argument("greedy_omp: invalid state basis");
  const std::size_t n_train = training.size();
  const std::size_t start = options.start < 0 ? n_train / 2 : static_cast<std::size_t>(options.start);
  if (start >= n_train) throw std::invalid_argument("greedy_omp: start index outside the training set");

  const Matrix& z = y_basis;
  const Eigen::Index n = z.cols();
  const TrainingSpaces spaces = reduced_spaces(model, z, u_basis, training);

  // Library values on the state basis, and dual norms of the library functionals.
  const Matrix gz = library.functionals.transpose() * z;
  Vector g_dual(library.size());
  {
    const auto& llt = space.gram_factor();
    parallel_for(library.size(), [&](int i) {
      const Vector g = library.functionals.col(i);
      g_dual[i] = llt.matrixL().solve(llt.permutationP() * g).norm();
    });
  }
  Matrix g_tau(library.size(), 0);

  // Cross Gram matrices of the extended spaces, fixed for the whole run.
  std::vector<Eigen::Index> ext_offset(n_train + 1, 0);
  for (std::size_t i = 0; i < n_train; ++i) ext_offset[i + 1] = ext_offset[i] + spaces.extended[i].cols();
  Matrix ext_all;
  Matrix ext_gram;
  if (options.pair_mode) {
    ext_all.resize(n, ext_offset[n_train]);
    for (std::size_t i = 0; i < n_train; ++i) ext_all.middleCols(ext_offset[i], spaces.extended[i].cols()) = spaces.extended[i];
    ext_gram = ext_all.transpose() * ext_all;
  }

  OmpResult out{MeasurementSpace(model.space), {}, {}, {}, 0.0, false};
  MeasurementSpace& ms = out.ms;
  Matrix c(0, n);  // S_hat^T Z: orthonormal measurement coordinates of the state basis
  std::vector<char> excluded(static_cast<std::size_t>(library.size()), 0);

  auto kappa_all = [&]() {
    std::vector<double> k(n_train);
    parallel_for(static_cast<int>(n_train), [&](int i) {
      const Matrix& q = spaces.responses[static_cast<std::size_t>(i)];
      k[static_cast<std::size_t>(i)] = q.cols() == 0 ? 1.0 : smallest_right_singular(c * q).first;
    });
    return k;
  };

  auto pair_minimum = [&]() {
    PairResult best;
    const Matrix p_all = c * ext_all;
    const Matrix proj_gram = p_all.transpose() * p_all;
    std::vector<PairResult> per_row(n_train);
    parallel_for(static_cast<int>(n_train), [&](int ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      PairResult row;
      for (std::size_t j = i; j < n_train; ++j) {
        const Eigen::Index oi = ext_offset[i], ri = ext_offset[i + 1] - oi;
        const Eigen::Index oj = ext_offset[j], rj = ext_offset[j + 1] - oj;
        const Eigen::Index r = ri + rj;
        Matrix gy(r, r), gp(r, r);
        gy.topLeftCorner(ri, ri) = ext_gram.block(oi, oi, ri, ri);
        gy.topRightCorner(ri, rj) = ext_gram.block(oi, oj, ri, rj);
        gy.bottomLeftCorner(rj, ri) = ext_gram.block(oj, oi, rj, ri);
        gy.bottomRightCorner(rj, rj) = ext_gram.block(oj, oj, rj, rj);
        gp.topLeftCorner(ri, ri) = proj_gram.block(oi, oi, ri, ri);
        gp.topRightCorner(ri, rj) = proj_gram.block(oi, oj, ri, rj);
        gp.bottomLeftCorner(rj, ri) = proj_gram.block(oj, oi, rj, ri);
        gp.bottomRightCorner(rj, rj) = proj_gram.block(oj, oj, rj, rj);
        const GeneralizedEigen ge = generalized_eigen(gp, gy, 1e-12);
        const double beta = std::sqrt(std::clamp(ge.values[0], 0.0, 1.0));
        if (beta < row.beta) {
          row.beta = beta;
          row.i = i;
          row.j = j;
          Vector coeffs = ge.vectors.col(0);
          Vector y = ext_all.middleCols(oi, ri) * coeffs.head(ri) + ext_all.middleCols(oj, rj) * coeffs.tail(rj);
          row.worst = y / y.norm();
        }
      }
      per_row[i] = std::move(row);
    });
    for (auto& row : per_row) {
      if (row.beta < best.beta) best = std::move(row);
    }
    return best;
  };

  bool pair_phase = false;
  std::size_t worst_mu = start;
  PairResult worst_pair;
  while (ms.size() < options.l_max) {
    // Direction of the worst-case space that is least visible to the current measurement space.
    Vector y_l;
    if (pair_phase) {
      y_l = worst_pair.worst;
    } else {
      const Matrix& q = spaces.responses[worst_mu];
      y_l = q * smallest_right_singular(c * q).second;
    }
    const Vector cy = c * y_l;
    Vector score = (gz * y_l - g_tau * cy).cwiseAbs().cwiseQuotient(g_dual);

    // Take the best candidate whose representer adds a new direction.
    int chosen = -1;
    while (true) {
      int best = -1;
      for (int i = 0; i < library.size(); ++i) {
        if (excluded[static_cast<std::size_t>(i)] || !(g_dual[i] > 0.0)) continue;
        if (best < 0 || score[i] > score[best]) best = i;
      }
      if (best < 0) break;
      excluded[static_cast<std::size_t>(best)] = 1;
      if (ms.try_add(Vector(library.functionals.col(best)), library.sensors[static_cast<std::size_t>(best)])) {
        chosen = best;
        break;
      }
      out.skipped.push_back(best);
    }
    if (chosen < 0) break;
    out.selected.push_back(chosen);

    const Vector s_new = ms.orthonormal_loads().col(ms.size() - 1);
    const Vector tau_new = ms.orthonormal().col(ms.size() - 1);
    c.conservativeResize(c.rows() + 1, Eigen::NoChange);
    c.row(c.rows() - 1) = s_new.transpose() * z;
    g_tau.conservativeResize(Eigen::NoChange, g_tau.cols() + 1);
    g_tau.col(g_tau.cols() - 1) = library.functionals.transpose() * tau_new;

    OmpIteration it;
    it.size = ms.size();
    it.library_index = chosen;
    it.sensor = library.sensors[static_cast<std::size_t>(chosen)];
    it.criterion = pair_phase ? "pair" : "kappa";
    it.mu = pair_phase ? training[worst_pair.i] : training[worst_mu];
    if (pair_phase) it.nu = training[worst_pair.j];

    const std::vector<double> kappa = kappa_all();
    worst_mu = 0;
    for (std::size_t i = 1; i < n_train; ++i) {
      if (kappa[i] < kappa[worst_mu]) worst_mu = i;
    }
    it.kappa_min = kappa[worst_mu];
    it.beta_pair_min = std::numeric_limits<double>::quiet_NaN();
    if (options.pair_mode) {
      worst_pair = pair_minimum();
      it.beta_pair_min = worst_pair.beta;
    }
    out.trace.push_back(it);

    if (!pair_phase) {
      out.beta = it.kappa_min;
      if (it.kappa_min > options.beta0) {
        if (!options.pair_mode) {
          out.reached_target = true;
          break;
        }
        pair_phase = true;
      }
    }
    if (pair_phase) {
      out.beta = it.beta_pair_min;
      if (it.beta_pair_min > options.beta0) {
        out.reached_target = true;
        break;
      }
    }
  }
  return out;
}

std::string omp_trace_to_csv(const OmpResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-omp-trace/1\n";
  os << "iteration,library_index,center_x,center_y,criterion,mu1,mu2,nu1,nu2,kappa_min,beta_pair_min\n";
  auto comp = [](const Parameter& p, int k) { return p.size() > k ? p[k] : std::numeric_limits<double>::quiet_NaN(); };
  for (const auto& it : result.trace) {
    os << it.size << ',' << it.library_index << ',' << it.sensor.x << ',' << it.sensor.y << ',' << it.criterion << ','
       << comp(it.mu, 0) << ',' << comp(it.mu, 1) << ',' << comp(it.nu, 0) << ',' << comp(it.nu, 1) << ','
       << it.kappa_min << ',' << it.beta_pair_min << '\n';
  }
  return os.str();
}

}  // namespace tdvar
