#include "driftcp/core.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>

#include "driftcp/errors.hpp"

namespace driftcp {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::Classification ? "classification" : "regression";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "classification") return TaskKind::Classification;
  if (name == "regression") return TaskKind::Regression;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

namespace {

void require_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError(what + " contains a non-finite value");
  }
}

}  // namespace

LabeledSample LabeledSample::classification(std::string id, FeatureVector features, int label) {
  if (label < 0) throw InputError("sample '" + id + "': negative class label");
  LabeledSample s;
  s.id = std::move(id);
  s.features = std::move(features);
  s.label = label;
  return s;
}

LabeledSample LabeledSample::regression(std::string id, FeatureVector features, double target) {
  if (!std::isfinite(target)) throw InputError("sample '" + id + "': non-finite target");
  LabeledSample s;
  s.id = std::move(id);
  s.features = std::move(features);
  s.target = target;
  return s;
}

ModelOutput ModelOutput::classification(std::vector<double> proba) {
  if (proba.empty()) throw InputError("probability vector is empty");
  double sum = 0.0;
  for (double p : proba) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InputError("probability entries must lie in [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InputError("probability vector does not sum to 1");

  ModelOutput out;
  out.kind_ = TaskKind::Classification;
  // max_element returns the first maximum, which is the lowest-index tie-break.
  out.predicted_label_ =
      static_cast<int>(std::max_element(proba.begin(), proba.end()) - proba.begin());
  out.proba_ = std::move(proba);
  return out;
}

ModelOutput ModelOutput::regression(double pred) {
  if (!std::isfinite(pred)) throw InputError("regression prediction is not finite");
  ModelOutput out;
  out.kind_ = TaskKind::Regression;
  out.pred_ = pred;
  return out;
}

FeatureVector NormalizerStats::apply(std::span<const double> raw) const {
  if (raw.size() != mean.size()) {
    throw InputError("feature dimension " + std::to_string(raw.size()) +
                     " does not match normalizer dimension " + std::to_string(mean.size()));
  }
  FeatureVector out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out[j] = (raw[j] - mean[j]) / stddev[j];
  }
  return out;
}

NormalizerStats NormalizerStats::identity(std::size_t dim) {
  return NormalizerStats{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

NormalizerStats fit_normalizer(std::span<const FeatureVector> features) {
  if (features.empty()) throw ConfigError("cannot fit a normalizer on zero vectors");
  const std::size_t dim = features.front().size();
  if (dim == 0) throw ConfigError("feature vectors must have dimension >= 1");

  NormalizerStats stats{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& v : features) {
    if (v.size() != dim) throw ConfigError("feature vectors have inconsistent dimensions");
    for (std::size_t j = 0; j < dim; ++j) stats.mean[j] += v[j];
  }
  const auto n = static_cast<double>(features.size());
  for (auto& m : stats.mean) m /= n;

  for (const auto& v : features) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = v[j] - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  }
  // Population standard deviation.
  for (auto& s : stats.stddev) s = std::max(std::sqrt(s / n), kStddevFloor);
  return stats;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("distance between vectors of dimension " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

DataSplit split_training_data(std::span<const LabeledSample> samples, double fraction,
                              std::size_t cap, std::uint64_t seed) {
  if (samples.size() < kMinSplitSamples) {
    throw ConfigError("need at least " + std::to_string(kMinSplitSamples) +
                      " samples to split, got " + std::to_string(samples.size()));
  }
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
  if (cap < 1) throw ConfigError("calibration cap must be >= 1");

  const auto wanted = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(samples.size())));
  const std::size_t n_cal = std::min(wanted, cap);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> is_cal(samples.size(), false);
  for (std::size_t i = 0; i < n_cal; ++i) is_cal[order[i]] = true;

  DataSplit split;
  split.calibration.reserve(n_cal);
  split.training.reserve(samples.size() - n_cal);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (is_cal[i] ? split.calibration : split.training).push_back(samples[i]);
  }
  return split;
}

std::pair<std::size_t, TaskKind> validate_dataset(std::span<const LabeledSample> samples) {
  if (samples.empty()) throw InputError("dataset is empty");
  const std::size_t dim = samples.front().features.size();
  if (dim == 0) throw InputError("sample '" + samples.front().id + "' has no features");
  const TaskKind kind = samples.front().kind();
  for (const auto& s : samples) {
    if (s.label.has_value() == s.target.has_value()) {
      throw InputError("sample '" + s.id + "' must carry exactly one of label/target");
    }
    if (s.kind() != kind) throw ConfigError("dataset mixes classification and regression samples");
    if (s.features.size() != dim) {
      throw InputError("sample '" + s.id + "' has dimension " + std::to_string(s.features.size()) +
                       ", expected " + std::to_string(dim));
    }
    require_finite(s.features, "sample '" + s.id + "' features");
    if (s.label && *s.label < 0) throw InputError("sample '" + s.id + "' has a negative label");
  }
  return {dim, kind};
}

std::vector<FeatureVector> features_of(std::span<const LabeledSample> samples) {
  std::vector<FeatureVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.features);
  return out;
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace driftcp
