#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftcp/calibration.hpp"
#include "driftcp/conformal.hpp"
#include "driftcp/core.hpp"

namespace driftcp {

// Nearest-centroid classifier with softmax(-d^2 / temperature) probabilities
// over z-scored features. Stands in for the deployed model in the demo.
class ReferenceClassifier {
 public:
  ReferenceClassifier(NormalizerStats normalizer, std::vector<FeatureVector> centroids,
                      double temperature);

  ModelOutput predict(std::span<const double> features) const;
  std::vector<ModelOutput> predict_all(std::span<const LabeledSample> samples) const;
  double accuracy(std::span<const LabeledSample> samples) const;

  const NormalizerStats& normalizer() const { return normalizer_; }
  // One centroid per class, in normalized coordinates.
  const std::vector<FeatureVector>& centroids() const { return centroids_; }
  double temperature() const { return temperature_; }
  int num_classes() const { return static_cast<int>(centroids_.size()); }

  friend bool operator==(const ReferenceClassifier&, const ReferenceClassifier&) = default;

 private:
  NormalizerStats normalizer_;
  std::vector<FeatureVector> centroids_;
  double temperature_;
};

// `seed` is accepted for interface symmetry; training is deterministic.
ReferenceClassifier train_reference_classifier(std::span<const LabeledSample> training,
                                               std::uint64_t seed = 0);

// Mean target of the k nearest training samples (raw Euclidean distance).
double reference_regressor_predict(std::span<const LabeledSample> training,
                                   std::span<const double> test_features, int k = 3);

struct BenchmarkParams {
  int n_per_class = 2500;
  int classes = 4;
  int dim = 2;
  double drift_shift = 5.0;       // in units of the within-class stddev
  std::uint64_t seed = 0;
  double relabel_fraction = 0.2;  // share of drifted samples given a permuted label
  double cluster_std = 1.0;
  double center_spacing = 4.0;    // distance between neighbouring class centres, in stddevs
  int test_per_class = 250;
  double calibration_fraction = 0.1;
  std::size_t calibration_cap = 1000;
};

struct SyntheticBenchmark {
  BenchmarkParams params;
  std::vector<LabeledSample> training;
  std::vector<LabeledSample> calibration;
  std::vector<LabeledSample> in_distribution;
  std::vector<LabeledSample> drifted;
  std::vector<FeatureVector> class_centers;
  FeatureVector drift_direction;  // unit vector
};

SyntheticBenchmark generate_benchmark(const BenchmarkParams& params);

struct TriageBatch {
  std::vector<std::string> selected;  // most nonconforming first
  double budget = 0.05;
  std::string ordering = "lowest_credibility";
};

// Lowest credibility of an assessment: the minimum over its experts.
double min_credibility(const DriftAssessment& assessment);

// Picks up to ceil(budget * #flagged) flagged assessments for relabeling,
// lowest credibility first, ties by id. Accepted assessments are ignored.
TriageBatch triage(std::span<const DriftAssessment> assessments, double budget = 0.05);

struct IncrementalResult {
  ReferenceClassifier model;
  CalibrationStore store;
  std::vector<LabeledSample> training;  // the retraining set actually used
};

// Retrains from scratch on original + relabeled, re-splits a fresh
// calibration set from that union and rebuilds the store.
IncrementalResult incremental_update(std::span<const LabeledSample> original,
                                     std::span<const LabeledSample> relabeled,
                                     const DetectorConfig& config, std::uint64_t seed);

nlohmann::json to_json(const LabeledSample& sample);
nlohmann::json to_json(const TriageBatch& batch);

}  // namespace driftcp
