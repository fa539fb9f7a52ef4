#include "tdvar/measurement.hpp"

#include <Eigen/Dense>

#include <random>
#include <sstream>

namespace tdvar {

MeasurementSpace::MeasurementSpace(std::shared_ptr<const FESpace> space)
    : space_(std::move(space)), basis_(space_->gram(), 1e-10, false), g_(space_->dim(), 0), r_(0, 0) {}

MeasurementSpace MeasurementSpace::build(std::shared_ptr<const FESpace> space, const std::vector<Vector>& functionals,
                                         const std::vector<SensorSpec>& sensors) {
  if (!sensors.empty() && sensors.size() != functionals.size()) {
    throw std::invalid_argument("MeasurementSpace::build: sensor metadata count differs from functional count");
  }
  MeasurementSpace ms(std::move(space));
  for (std::size_t l = 0; l < functionals.size(); ++l) {
    if (!ms.try_add(functionals[l], sensors.empty() ? SensorSpec{} : sensors[l])) {
      throw DependentVectorError("measurement functional " + std::to_string(l) + " is linearly dependent on the previous ones",
                                 static_cast<int>(l));
    }
  }
  return ms;
}

bool MeasurementSpace::try_add(const Vector& functional, const SensorSpec& sensor) {
  if (functional.size() != space_->dim()) throw std::invalid_argument("MeasurementSpace: functional has wrong length");
  const Vector tau = space_->riesz(functional);
  const auto coeffs = basis_.add(tau, functional);
  if (!coeffs) return false;
  const int l = size();
  g_.conservativeResize(Eigen::NoChange, l + 1);
  g_.col(l) = functional;
  Matrix r = Matrix::Zero(l + 1, l + 1);
  r.topLeftCorner(l, l) = r_;
  r.col(l) = *coeffs;
  r_ = std::move(r);
  sensors_.push_back(sensor);
  return true;
}

void MeasurementSpace::add(const Vector& functional, const SensorSpec& sensor) {
  if (!try_add(functional, sensor)) {
    throw DependentVectorError("measurement functional " + std::to_string(size()) + " is linearly dependent", size());
  }
}

Matrix MeasurementSpace::representers() const { return basis_.basis() * r_; }

Vector MeasurementSpace::measure(const Vector& y) const { return g_.leftCols(size()).transpose() * y; }

Vector MeasurementSpace::project_coords(const Vector& y) const { return basis_.coefficients(y); }

Vector MeasurementSpace::project(const Vector& y) const { return lift(project_coords(y)); }

Vector MeasurementSpace::data_coords(const Vector& m) const {
  if (m.size() != size()) throw std::invalid_argument("data_coords: measurement vector has wrong length");
  if (size() == 0) return Vector(0);
  return r_.transpose().triangularView<Eigen::Lower>().solve(m);
}

Vector MeasurementSpace::data_state(const Vector& m) const { return lift(data_coords(m)); }

Vector MeasurementSpace::lift(const Vector& coords) const {
  if (coords.size() != size()) throw std::invalid_argument("lift: coordinate vector has wrong length");
  if (size() == 0) return Vector::Zero(space_->dim());
  return basis_.basis() * coords;
}

Vector add_noise(const Vector& m, double sigma, std::uint64_t seed, std::uint64_t stream) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be nonnegative");
  if (sigma == 0.0) return m;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, sigma);
  Vector out = m;
  for (auto& v : out) v += normal(rng);
  return out;
}

std::string measurements_to_csv(const MeasurementSpace& ms, const Vector& values) {
  if (values.size() != ms.size()) throw std::invalid_argument("measurements_to_csv: value count differs from L");
  std::ostringstream os;
  os.precision(17);
  os << "# tdvar-measurements/1\n";
  os << "center_x,center_y,sigma,value\n";
  for (int l = 0; l < ms.size(); ++l) {
    const auto& s = ms.sensors()[static_cast<std::size_t>(l)];
    os << s.x << ',' << s.y << ',' << s.sigma << ',' << values[l] << '\n';
  }
  return os.str();
}

}  // namespace tdvar
