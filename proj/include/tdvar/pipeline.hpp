#pragma once

#include "tdvar/config.hpp"
#include "tdvar/greedy.hpp"
#include "tdvar/measurement.hpp"
#include "tdvar/model.hpp"
#include "tdvar/omp.hpp"
#include "tdvar/rb.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tdvar {

Model build_model(const ExperimentConfig& config);

/// Wall-clock seconds per offline stage, in execution order.
using StageTimings = std::vector<std::pair<std::string, double>>;

struct OfflineResult {
  GreedyResult state;
  OmpResult omp;
  GreedyResult adjoint;
  GreedyResult merged;
  RBSpaces rb;
  StageTimings timings;
};

/// State greedy, sensor selection, adjoint greedy, merge and online assembly. Progress lines go
/// to log when it is non-null.
OfflineResult run_offline(const Model& model, const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes manifest.json (deterministic), timing.json, omp_trace.csv, the measurement functionals
/// and the reduced spaces below dir.
void save_offline(const OfflineResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

struct OfflineArtifacts {
  MeasurementSpace ms;
  RBSpaces rb;
};

/// Reads what save_offline wrote; the measurement functionals must match the model's FE space.
OfflineArtifacts load_offline(const Model& model, const std::filesystem::path& dir);

void save_measurement_space(const MeasurementSpace& ms, const std::filesystem::path& dir);
MeasurementSpace load_measurement_space(std::shared_ptr<const FESpace> space, const std::filesystem::path& dir);

/// Noise-free synthetic truth: y_true solves the best-knowledge problem at mu_true with the
/// inflow condition u_true, and m_clean are its measurements.
struct SyntheticData {
  Vector y_true;
  Vector m_clean;
};

SyntheticData synthetic_data(const Model& model, const MeasurementSpace& ms);

}  // namespace tdvar
