#pragma once

#include <span>
#include <string>
#include <vector>

#include "driftcp/calibration.hpp"
#include "driftcp/conformal.hpp"
#include "driftcp/kmeans.hpp"

namespace driftcp {

// Cluster label of the single nearest calibration sample (not the nearest
// centroid). Ties go to the lower calibration index.
int assign_cluster_label(std::span<const double> test_features, const CalibrationStore& store);

// Mean target of the k nearest calibration samples. Uses all of them, with a
// warning, when the store holds fewer than k.
double approximate_target(std::span<const double> test_features, const CalibrationStore& store,
                          int k = 3);

// The k nearest calibration indices by normalized distance, ties by index.
std::vector<std::size_t> nearest_calibration(std::span<const double> test_features,
                                             const CalibrationStore& store, std::size_t k);

// Regression counterpart of assess_sample. The test nonconformity is the
// residual between the model prediction and the kNN-approximated target; it
// is compared against each cluster's weighted calibration residuals.
DriftAssessment regression_assess(const CalibrationStore& store, std::span<const double> test_features,
                                  double model_pred, const DetectorConfig& config,
                                  std::string id = {});

// Cluster-label p-values for a known test residual.
std::map<int, double> regression_p_values(const CalibrationStore& store, const WeightedSubset& subset,
                                          double test_residual);

}  // namespace driftcp
