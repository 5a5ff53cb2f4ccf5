#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "driftcp/calibration.hpp"
#include "driftcp/config.hpp"
#include "driftcp/core.hpp"

namespace driftcp {

inline constexpr double kCoverageAlertBound = 0.1;
inline constexpr double kInternalValidationShare = 0.2;

struct CoverageReport {
  double epsilon = 0.1;
  FunctionId function = FunctionId::Aps;
  std::vector<double> rates;  // one per repeat
  double mean = 0.0;
  double deviation = 0.0;     // |mean - (1 - epsilon)|
  bool alert = false;         // deviation > kCoverageAlertBound
};

// Coverage of the prediction sets on R random 80/20 internal splits of the
// calibration data. Classification sets use config.coverage_function;
// regression sets are over cluster labels with the true residual as score.
CoverageReport coverage_check(std::span<const LabeledSample> calibration,
                              std::span<const ModelOutput> outputs, const DetectorConfig& config,
                              int repeats = 3, std::uint64_t seed = 0);

// Same check over the samples and outputs held by a store.
CoverageReport coverage_check(const CalibrationStore& store, const DetectorConfig& config,
                              int repeats = 3, std::uint64_t seed = 0);

struct DriftMetrics {
  std::size_t tp = 0;  // mispredicted and rejected
  std::size_t fp = 0;  // correct and rejected
  std::size_t fn = 0;  // mispredicted and accepted
  std::size_t tn = 0;  // correct and accepted
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing was rejected
  double recall = 0.0;     // 0 when nothing was mispredicted
  double f1 = 0.0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

DriftMetrics drift_metrics(const std::vector<bool>& drifting, const std::vector<bool>& mispredicted);

inline constexpr double kMispredictionThreshold = 0.2;

enum class MispredictionRule {
  Performance,  // achieved below (1 - threshold) of the oracle
  CostModel,    // |estimate - profiled| / profiled >= threshold
};

std::vector<bool> label_mispredictions(MispredictionRule rule, std::span<const double> achieved,
                                       std::span<const double> reference,
                                       double threshold = kMispredictionThreshold);
// Classification and detection tasks: any label mismatch.
std::vector<bool> label_mispredictions(std::span<const int> predicted, std::span<const int> truth);

// Candidate values per tunable. An empty axis keeps the base config value.
struct ParameterGrid {
  std::vector<double> epsilon;
  std::vector<double> tau;
  std::vector<double> subset_fraction;
  std::vector<double> gaussian_c;

  bool empty() const {
    return epsilon.empty() && tau.empty() && subset_fraction.empty() && gaussian_c.empty();
  }
  // Cartesian product, epsilon varying slowest.
  std::vector<DetectorConfig> expand(const DetectorConfig& base) const;
};

struct GridSearchResult {
  DetectorConfig best;
  std::vector<double> f1;  // per candidate, in expand() order
  std::size_t best_index = 0;
};

// Scores every candidate by the F1 of flagging the model's own mispredictions
// on internal 80/20 splits (confusion pooled over repeats). First best wins.
GridSearchResult grid_search(std::span<const LabeledSample> calibration,
                             std::span<const ModelOutput> outputs, const ParameterGrid& grid,
                             const DetectorConfig& base, int repeats = 3, std::uint64_t seed = 0);

nlohmann::json to_json(const CoverageReport& report);
nlohmann::json to_json(const DriftMetrics& metrics);
ParameterGrid grid_from_json(const nlohmann::json& doc);

}  // namespace driftcp
