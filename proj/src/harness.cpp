#include "driftcp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "driftcp/errors.hpp"

namespace driftcp {

ReferenceClassifier::ReferenceClassifier(NormalizerStats normalizer,
                                         std::vector<FeatureVector> centroids, double temperature)
    : normalizer_(std::move(normalizer)), centroids_(std::move(centroids)), temperature_(temperature) {
  if (centroids_.size() < 2) throw ConfigError("reference classifier needs >= 2 classes");
  if (!(temperature_ > 0.0)) throw ConfigError("temperature must be > 0");
  for (const auto& c : centroids_) {
    if (c.size() != normalizer_.dim()) throw ConfigError("centroid dimension mismatch");
  }
}

ModelOutput ReferenceClassifier::predict(std::span<const double> features) const {
  const FeatureVector x = normalizer_.apply(features);
  std::vector<double> logits(centroids_.size());
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    logits[c] = -squared_distance(x, centroids_[c]) / temperature_;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return ModelOutput::classification(std::move(logits));
}

std::vector<ModelOutput> ReferenceClassifier::predict_all(std::span<const LabeledSample> samples) const {
  std::vector<ModelOutput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict(s.features));
  return out;
}

double ReferenceClassifier::accuracy(std::span<const LabeledSample> samples) const {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (s.label && predict(s.features).predicted_label() == *s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

ReferenceClassifier train_reference_classifier(std::span<const LabeledSample> training,
                                               std::uint64_t /*seed*/) {
  const auto [dim, task] = validate_dataset(training);
  if (task != TaskKind::Classification) throw ConfigError("reference classifier needs class labels");
  int num_classes = 0;
  for (const auto& s : training) num_classes = std::max(num_classes, *s.label + 1);
  if (num_classes < 2) throw ConfigError("reference classifier needs at least two classes");

  const auto raw = features_of(training);
  auto normalizer = fit_normalizer(raw);
  std::vector<FeatureVector> centroids(static_cast<std::size_t>(num_classes), FeatureVector(dim, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto c = static_cast<std::size_t>(*training[i].label);
    const auto x = normalizer.apply(raw[i]);
    for (std::size_t j = 0; j < dim; ++j) centroids[c][j] += x[j];
    ++counts[c];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) throw ConfigError("class " + std::to_string(c) + " has no training samples");
    for (auto& v : centroids[c]) v /= static_cast<double>(counts[c]);
  }
  return ReferenceClassifier(std::move(normalizer), std::move(centroids), 1.0);
}

double reference_regressor_predict(std::span<const LabeledSample> training,
                                   std::span<const double> test_features, int k) {
  if (k < 1) throw ConfigError("kNN k must be >= 1");
  if (training.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("kNN regressor needs at least k = " + std::to_string(k) + " samples");
  }
  std::vector<std::pair<double, std::size_t>> ranked(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (!training[i].target) throw ConfigError("kNN regressor needs regression targets");
    ranked[i] = {squared_distance(training[i].features, test_features), i};
  }
  std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += *training[ranked[static_cast<std::size_t>(i)].second].target;
  return sum / k;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

namespace {

FeatureVector random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVector u(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : u) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;
  return u;
}

std::string make_id(const char* prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  return std::string(prefix) + "-" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

}  // namespace

SyntheticBenchmark generate_benchmark(const BenchmarkParams& p) {
  if (p.classes < 2) throw ConfigError("benchmark needs >= 2 classes");
  if (p.dim < 2) throw ConfigError("benchmark needs dim >= 2");
  if (p.drift_shift < 0.0) throw ConfigError("drift_shift must be >= 0");
  if (p.n_per_class < 1 || p.test_per_class < 0) throw ConfigError("bad benchmark sample counts");
  if (!(p.relabel_fraction >= 0.0 && p.relabel_fraction <= 1.0)) {
    throw ConfigError("relabel_fraction must be in [0, 1]");
  }

  const auto dim = static_cast<std::size_t>(p.dim);
  const auto classes = static_cast<std::size_t>(p.classes);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticBenchmark bench;
  bench.params = p;

  // Centres on a random walk with fixed step, so neighbouring classes sit
  // exactly center_spacing apart.
  FeatureVector pos(dim, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (c > 0) {
      const auto step = random_unit(dim, rng);
      for (std::size_t j = 0; j < dim; ++j) pos[j] += p.center_spacing * p.cluster_std * step[j];
    }
    bench.class_centers.push_back(pos);
  }
  bench.drift_direction = random_unit(dim, rng);

  auto draw = [&](std::size_t c) {
    FeatureVector x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = bench.class_centers[c][j] + p.cluster_std * normal(rng);
    return x;
  };

  std::vector<LabeledSample> pool;
  for (int i = 0; i < p.n_per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      pool.push_back(LabeledSample::classification(make_id("train", pool.size()), draw(c),
                                                   static_cast<int>(c)));
    }
  }
  for (int i = 0; i < p.test_per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      bench.in_distribution.push_back(LabeledSample::classification(
          make_id("test", bench.in_distribution.size()), draw(c), static_cast<int>(c)));
    }
  }

  // The drifted set is the in-distribution set moved along one direction,
  // with a share of samples relabeled through a fixed cyclic class shift.
  std::vector<std::size_t> order(bench.in_distribution.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_relabel = static_cast<std::size_t>(
      std::llround(p.relabel_fraction * static_cast<double>(order.size())));
  std::vector<bool> relabel(order.size(), false);
  for (std::size_t i = 0; i < n_relabel; ++i) relabel[order[i]] = true;

  const double shift = p.drift_shift * p.cluster_std;
  for (std::size_t i = 0; i < bench.in_distribution.size(); ++i) {
    const auto& src = bench.in_distribution[i];
    FeatureVector x = src.features;
    for (std::size_t j = 0; j < dim; ++j) x[j] += shift * bench.drift_direction[j];
    int label = *src.label;
    if (relabel[i]) label = (label + 1) % p.classes;
    bench.drifted.push_back(LabeledSample::classification(make_id("drift", i), std::move(x), label));
  }

  auto split = split_training_data(pool, p.calibration_fraction, p.calibration_cap, p.seed + 1);
  bench.training = std::move(split.training);
  bench.calibration = std::move(split.calibration);
  return bench;
}

// ---------------------------------------------------------------------------
// Triage and incremental learning

double min_credibility(const DriftAssessment& assessment) {
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& v : assessment.verdicts) lowest = std::min(lowest, v.credibility);
  return lowest;
}

TriageBatch triage(std::span<const DriftAssessment> assessments, double budget) {
  if (!(budget > 0.0 && budget <= 1.0)) throw ConfigError("triage budget must be in (0, 1]");
  std::vector<const DriftAssessment*> flagged;
  for (const auto& a : assessments) {
    if (a.drifting) flagged.push_back(&a);
  }
  std::sort(flagged.begin(), flagged.end(), [](const DriftAssessment* a, const DriftAssessment* b) {
    const double ca = min_credibility(*a);
    const double cb = min_credibility(*b);
    if (ca != cb) return ca < cb;
    return a->id < b->id;
  });
  const auto limit = static_cast<std::size_t>(std::ceil(budget * static_cast<double>(flagged.size())));
  TriageBatch batch;
  batch.budget = budget;
  for (std::size_t i = 0; i < std::min(limit, flagged.size()); ++i) batch.selected.push_back(flagged[i]->id);
  return batch;
}

IncrementalResult incremental_update(std::span<const LabeledSample> original,
                                     std::span<const LabeledSample> relabeled,
                                     const DetectorConfig& config, std::uint64_t seed) {
  for (const auto& s : relabeled) {
    if (!s.label) throw ConfigError("relabeled sample '" + s.id + "' has no ground-truth label");
  }
  // Relabeled samples always go to the training side; only the original pool
  // is re-split into training and calibration.
  auto split = split_training_data(original, 0.1, 1000, seed);
  std::vector<LabeledSample> training = std::move(split.training);
  training.insert(training.end(), relabeled.begin(), relabeled.end());

  auto model = train_reference_classifier(training, seed);
  const auto outputs = model.predict_all(split.calibration);
  auto store = build_store(split.calibration, outputs,
                           functions_for(config, TaskKind::Classification), config);
  return IncrementalResult{std::move(model), std::move(store), std::move(training)};
}

nlohmann::json to_json(const LabeledSample& s) {
  nlohmann::json j = {{"id", s.id}, {"features", s.features}};
  if (s.label) j["label"] = *s.label;
  if (s.target) j["target"] = *s.target;
  return j;
}

nlohmann::json to_json(const TriageBatch& batch) { return batch.selected; }

}  // namespace driftcp
