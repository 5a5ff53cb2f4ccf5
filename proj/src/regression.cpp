#include "driftcp/regression.hpp"

#include <algorithm>
#include <numeric>

#include "driftcp/errors.hpp"

namespace driftcp {

namespace {

void require_regression(const CalibrationStore& store) {
  if (store.task() != TaskKind::Regression || !store.clusters()) {
    throw ConfigError("operation needs a regression store with a cluster model");
  }
}

}  // namespace

std::vector<std::size_t> nearest_calibration(std::span<const double> test_features,
                                             const CalibrationStore& store, std::size_t k) {
  if (test_features.size() != store.dim()) {
    throw InputError("test features have dimension " + std::to_string(test_features.size()) +
                     ", store expects " + std::to_string(store.dim()));
  }
  const FeatureVector query = store.normalize(test_features);
  std::vector<std::pair<double, std::size_t>> ranked(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    ranked[i] = {squared_distance(store.features()[i], query), i};
  }
  k = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = ranked[i].second;
  return out;
}

int assign_cluster_label(std::span<const double> test_features, const CalibrationStore& store) {
  require_regression(store);
  return store.labels()[nearest_calibration(test_features, store, 1).front()];
}

double approximate_target(std::span<const double> test_features, const CalibrationStore& store,
                          int k) {
  if (store.task() != TaskKind::Regression) throw ConfigError("target approximation needs a regression store");
  if (k < 1) throw ConfigError("kNN k must be >= 1");
  if (store.size() < static_cast<std::size_t>(k)) {
    warn("kNN k = " + std::to_string(k) + " exceeds the " + std::to_string(store.size()) +
         " calibration samples; averaging all of them");
  }
  const auto neighbours = nearest_calibration(test_features, store, static_cast<std::size_t>(k));
  double sum = 0.0;
  for (auto i : neighbours) sum += store.targets()[i];
  return sum / static_cast<double>(neighbours.size());
}

std::map<int, double> regression_p_values(const CalibrationStore& store, const WeightedSubset& subset,
                                          double test_residual) {
  require_regression(store);
  const auto adjusted = adjusted_scores(store, subset, FunctionId::Residual);
  std::map<int, double> out;
  for (int label = 0; label < store.num_labels(); ++label) {
    out[label] = p_value(adjusted, label, test_residual);
  }
  return out;
}

DriftAssessment regression_assess(const CalibrationStore& store, std::span<const double> test_features,
                                  double model_pred, const DetectorConfig& config, std::string id) {
  require_regression(store);
  config.validate();
  const double estimate = approximate_target(test_features, store, config.knn_k);
  const double test_residual = residual_score(model_pred, estimate);
  const int label = assign_cluster_label(test_features, store);

  const auto subset = weighted_subset(store, test_features, config);
  const auto pv = regression_p_values(store, subset, test_residual);
  const auto set = prediction_set(pv, config.epsilon);
  const int size = static_cast<int>(set.size());

  DriftAssessment result;
  result.id = std::move(id);
  result.verdicts.push_back(expert_verdict(FunctionId::Residual, credibility(pv, label),
                                           confidence(size, config.gaussian_c), size,
                                           config.epsilon));
  result.drifting = ensemble_decision(result.verdicts);
  return result;
}

}  // namespace driftcp
