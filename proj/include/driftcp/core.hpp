#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace driftcp {

using FeatureVector = std::vector<double>;

enum class TaskKind { Classification, Regression };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);

// One row of a dataset. Exactly one of label/target is set.
struct LabeledSample {
  std::string id;
  FeatureVector features;
  std::optional<int> label;
  std::optional<double> target;

  TaskKind kind() const { return label ? TaskKind::Classification : TaskKind::Regression; }

  static LabeledSample classification(std::string id, FeatureVector features, int label);
  static LabeledSample regression(std::string id, FeatureVector features, double target);
};

// What the deployed model said about one input: a probability vector for
// classification, a scalar for regression.
class ModelOutput {
 public:
  static ModelOutput classification(std::vector<double> proba);
  static ModelOutput regression(double pred);

  TaskKind kind() const { return kind_; }
  const std::vector<double>& proba() const { return proba_; }
  double pred() const { return pred_; }
  std::size_t num_classes() const { return proba_.size(); }
  // Argmax of proba; the lowest index wins ties.
  int predicted_label() const { return predicted_label_; }

  friend bool operator==(const ModelOutput&, const ModelOutput&) = default;

 private:
  ModelOutput() = default;

  TaskKind kind_ = TaskKind::Classification;
  std::vector<double> proba_;
  double pred_ = 0.0;
  int predicted_label_ = -1;
};

inline constexpr double kStddevFloor = 1e-12;

struct NormalizerStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }
  FeatureVector apply(std::span<const double> raw) const;

  // mean 0 / stddev 1 in every dimension: apply() becomes the identity.
  static NormalizerStats identity(std::size_t dim);

  friend bool operator==(const NormalizerStats&, const NormalizerStats&) = default;
};

NormalizerStats fit_normalizer(std::span<const FeatureVector> features);

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

struct DataSplit {
  std::vector<LabeledSample> training;
  std::vector<LabeledSample> calibration;
};

inline constexpr std::size_t kMinSplitSamples = 10;

// Random hold-out of min(round(fraction * n), cap) samples for calibration.
// Both halves keep the input's relative order.
DataSplit split_training_data(std::span<const LabeledSample> samples, double fraction,
                              std::size_t cap, std::uint64_t seed);

// Throws InputError unless every sample has finite features of one common
// dimension and one task kind; returns that (dimension, kind).
std::pair<std::size_t, TaskKind> validate_dataset(std::span<const LabeledSample> samples);

std::vector<FeatureVector> features_of(std::span<const LabeledSample> samples);

// Non-fatal diagnostics (clamped ranges and the like). The default sink
// writes "warning: ..." lines to stderr; pass an empty function to silence.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace driftcp
