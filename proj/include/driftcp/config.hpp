#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftcp/nonconformity.hpp"

namespace driftcp {

// Every tunable of the detector.
struct DetectorConfig {
  double epsilon = 0.1;            // significance level; rejection threshold is 1 - epsilon
  double tau = 500.0;              // distance-weight temperature
  double subset_fraction = 0.5;    // share of nearest calibration samples kept
  int small_threshold = 200;       // below this store size every sample is kept
  double gaussian_c = 3.0;         // width of the set-size confidence Gaussian
  double raps_lambda = 0.01;
  int raps_k_reg = 1;
  int knn_k = 3;                   // neighbours for regression target approximation
  int k_min = 2;                   // K-means cluster-count search range
  int k_max = 20;
  int gap_B = 10;                  // reference datasets for the Gap statistic
  std::vector<FunctionId> functions = {FunctionId::Lac, FunctionId::TopK, FunctionId::Aps,
                                       FunctionId::Raps};
  std::uint64_t seed = 0;
  bool normalize = true;
  int coverage_repeats = 3;        // R internal 80/20 splits in the coverage check
  FunctionId coverage_function = FunctionId::Aps;

  NonconformityParams nonconformity_params() const { return {raps_lambda, raps_k_reg}; }

  // Throws ConfigError on any out-of-range field.
  void validate() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// The config file is a flat JSON object; unknown keys are rejected.
nlohmann::json to_json(const DetectorConfig& config);
DetectorConfig config_from_json(const nlohmann::json& doc);

DetectorConfig load_config(const std::filesystem::path& path);
void save_config(const DetectorConfig& config, const std::filesystem::path& path);

}  // namespace driftcp
