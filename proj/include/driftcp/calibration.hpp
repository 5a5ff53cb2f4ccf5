#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftcp/config.hpp"
#include "driftcp/core.hpp"
#include "driftcp/kmeans.hpp"
#include "driftcp/nonconformity.hpp"

namespace driftcp {

inline constexpr int kStoreSchemaVersion = 1;

// Everything the detector needs at deployment time, computed once offline.
// Immutable after construction; safe to share between threads.
class CalibrationStore {
 public:
  struct Data {
    TaskKind task = TaskKind::Classification;
    std::vector<std::string> ids;
    std::vector<FeatureVector> raw_features;
    std::vector<FeatureVector> features;  // normalized
    // Class index (classification) or cluster label (regression).
    std::vector<int> labels;
    std::vector<double> targets;  // regression only
    std::vector<ModelOutput> outputs;
    std::map<FunctionId, std::vector<double>> scores;
    NormalizerStats normalizer;
    DetectorConfig config;
    // Number of classes, or K for regression.
    int num_labels = 0;
    std::optional<ClusterModel> clusters;
    std::optional<GapResult> gap;
  };

  // Checks every structural invariant; throws ConfigError if one fails.
  explicit CalibrationStore(Data data);

  TaskKind task() const { return data_.task; }
  std::size_t size() const { return data_.labels.size(); }
  std::size_t dim() const { return data_.normalizer.dim(); }
  int num_labels() const { return data_.num_labels; }

  const std::vector<std::string>& ids() const { return data_.ids; }
  const std::vector<FeatureVector>& raw_features() const { return data_.raw_features; }
  const std::vector<FeatureVector>& features() const { return data_.features; }
  const std::vector<int>& labels() const { return data_.labels; }
  const std::vector<double>& targets() const { return data_.targets; }
  const std::vector<ModelOutput>& outputs() const { return data_.outputs; }
  const NormalizerStats& normalizer() const { return data_.normalizer; }
  const DetectorConfig& config() const { return data_.config; }
  const std::optional<ClusterModel>& clusters() const { return data_.clusters; }
  const std::optional<GapResult>& gap() const { return data_.gap; }
  const Data& data() const { return data_; }

  std::vector<FunctionId> functions() const;
  bool has_function(FunctionId id) const { return data_.scores.contains(id); }
  // Throws ConfigError for a function the store was not built with.
  const std::vector<double>& scores(FunctionId id) const;

  FeatureVector normalize(std::span<const double> raw) const { return data_.normalizer.apply(raw); }

  // The original calibration samples, in store order.
  std::vector<LabeledSample> samples() const;

 private:
  Data data_;
};

// Scores every calibration sample under every function using its own true
// label (or target) and freezes the result. Regression stores additionally
// get K-means cluster labels with K picked by the Gap statistic.
CalibrationStore build_store(std::span<const LabeledSample> calibration,
                             std::span<const ModelOutput> outputs,
                             std::span<const FunctionId> functions, const DetectorConfig& config);

// Nearest calibration samples to one test input.
struct WeightedSubset {
  std::vector<std::size_t> indices;  // ascending distance, ties by lower index
  std::vector<double> distances;
  std::vector<double> weights;       // empty until compute_weights
};

// Keeps every sample when the store is smaller than small_threshold,
// otherwise the ceil(fraction * n) nearest. `test_features` are raw; the
// store normalizes them.
WeightedSubset select_subset(const CalibrationStore& store, std::span<const double> test_features,
                             double fraction = 0.5, int small_threshold = 200);

// w_i = exp(-d_i^2 / tau).
WeightedSubset compute_weights(WeightedSubset subset, double tau = 500.0);

struct LabeledScore {
  int label = 0;
  double score = 0.0;

  friend bool operator==(const LabeledScore&, const LabeledScore&) = default;
};

// Stored calibration scores of the subset, each multiplied by its weight.
std::vector<LabeledScore> adjusted_scores(const CalibrationStore& store,
                                          const WeightedSubset& subset, FunctionId function);

// Functions from `config` suited to `task`: a regression dataset paired with
// the stock classification list gets the residual function instead.
std::vector<FunctionId> functions_for(const DetectorConfig& config, TaskKind task);

nlohmann::json to_json(const CalibrationStore& store);
CalibrationStore store_from_json(const nlohmann::json& doc);

void save_store(const CalibrationStore& store, const std::filesystem::path& path);
CalibrationStore load_store(const std::filesystem::path& path);

}  // namespace driftcp
