#include "driftcp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "driftcp/errors.hpp"

namespace driftcp {

namespace {

constexpr const char* kStoreFormat = "driftcp-calibration-store";

}  // namespace

CalibrationStore::CalibrationStore(Data data) : data_(std::move(data)) {
  const std::size_t n = data_.labels.size();
  if (n == 0) throw ConfigError("calibration store is empty");
  if (data_.ids.size() != n || data_.raw_features.size() != n || data_.features.size() != n ||
      data_.outputs.size() != n) {
    throw ConfigError("calibration store columns have different lengths");
  }
  if (data_.task == TaskKind::Regression && data_.targets.size() != n) {
    throw ConfigError("regression store needs one target per sample");
  }
  if (data_.scores.empty()) throw ConfigError("calibration store has no nonconformity scores");
  for (const auto& [id, values] : data_.scores) {
    if (task_of(id) != data_.task) {
      throw ConfigError("function '" + std::string(to_string(id)) + "' does not fit a " +
                        std::string(to_string(data_.task)) + " store");
    }
    if (values.size() != n) throw ConfigError("score column length differs from store size");
  }
  for (int y : data_.labels) {
    if (y < 0 || y >= data_.num_labels) throw ConfigError("store label outside 0..num_labels-1");
  }
  if (data_.task == TaskKind::Regression &&
      (!data_.clusters || data_.clusters->k != data_.num_labels)) {
    throw ConfigError("regression store is missing its cluster model");
  }
}

std::vector<FunctionId> CalibrationStore::functions() const {
  std::vector<FunctionId> out;
  for (const auto& entry : data_.scores) out.push_back(entry.first);
  return out;
}

const std::vector<double>& CalibrationStore::scores(FunctionId id) const {
  auto it = data_.scores.find(id);
  if (it == data_.scores.end()) {
    throw ConfigError("store has no scores for function '" + std::string(to_string(id)) + "'");
  }
  return it->second;
}

std::vector<LabeledSample> CalibrationStore::samples() const {
  std::vector<LabeledSample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (data_.task == TaskKind::Classification) {
      out.push_back(LabeledSample::classification(data_.ids[i], data_.raw_features[i], data_.labels[i]));
    } else {
      out.push_back(LabeledSample::regression(data_.ids[i], data_.raw_features[i], data_.targets[i]));
    }
  }
  return out;
}

CalibrationStore build_store(std::span<const LabeledSample> calibration,
                             std::span<const ModelOutput> outputs,
                             std::span<const FunctionId> functions, const DetectorConfig& config) {
  config.validate();
  if (calibration.empty()) throw ConfigError("calibration set is empty");
  if (calibration.size() != outputs.size()) {
    throw ConfigError("got " + std::to_string(calibration.size()) + " calibration samples but " +
                      std::to_string(outputs.size()) + " model outputs");
  }
  if (functions.empty()) throw ConfigError("no nonconformity functions configured");

  const auto [dim, task] = validate_dataset(calibration);
  for (const auto& out : outputs) {
    if (out.kind() != task) throw ConfigError("model outputs do not match the dataset task kind");
  }
  for (auto f : functions) {
    if (task_of(f) != task) {
      throw ConfigError("function '" + std::string(to_string(f)) + "' cannot score a " +
                        std::string(to_string(task)) + " task");
    }
  }

  CalibrationStore::Data data;
  data.task = task;
  data.config = config;
  data.config.functions.assign(functions.begin(), functions.end());
  data.raw_features = features_of(calibration);
  data.normalizer = config.normalize ? fit_normalizer(data.raw_features)
                                     : NormalizerStats::identity(dim);
  data.features.reserve(calibration.size());
  for (const auto& v : data.raw_features) data.features.push_back(data.normalizer.apply(v));
  data.outputs.assign(outputs.begin(), outputs.end());
  for (const auto& s : calibration) data.ids.push_back(s.id);

  if (task == TaskKind::Classification) {
    const std::size_t num_classes = outputs.front().num_classes();
    for (const auto& out : outputs) {
      if (out.num_classes() != num_classes) {
        throw ConfigError("model outputs disagree on the number of classes");
      }
    }
    data.num_labels = static_cast<int>(num_classes);
    for (const auto& s : calibration) {
      if (*s.label >= data.num_labels) {
        throw ConfigError("sample '" + s.id + "' has label " + std::to_string(*s.label) +
                          " but the model reports " + std::to_string(num_classes) + " classes");
      }
      data.labels.push_back(*s.label);
    }
    const auto params = config.nonconformity_params();
    for (auto f : functions) {
      auto& column = data.scores[f];
      column.reserve(calibration.size());
      for (std::size_t i = 0; i < calibration.size(); ++i) {
        column.push_back(classification_score(f, outputs[i], data.labels[i], params));
      }
    }
  } else {
    for (const auto& s : calibration) data.targets.push_back(*s.target);
    auto gap = gap_select_k(data.features, config.k_min, config.k_max, config.gap_B, config.seed);
    auto clusters = kmeans(data.features, gap.chosen_k, config.seed);
    data.num_labels = clusters.k;
    data.labels = clusters.assignments;
    data.clusters = std::move(clusters);
    data.gap = std::move(gap);
    auto& column = data.scores[FunctionId::Residual];
    for (std::size_t i = 0; i < calibration.size(); ++i) {
      column.push_back(residual_score(outputs[i].pred(), data.targets[i]));
    }
  }
  return CalibrationStore(std::move(data));
}

WeightedSubset select_subset(const CalibrationStore& store, std::span<const double> test_features,
                             double fraction, int small_threshold) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subset fraction must be in (0, 1]");
  if (test_features.size() != store.dim()) {
    throw InputError("test features have dimension " + std::to_string(test_features.size()) +
                     ", store expects " + std::to_string(store.dim()));
  }
  const FeatureVector query = store.normalize(test_features);
  const std::size_t n = store.size();

  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    ranked[i] = {euclidean_distance(store.features()[i], query), i};
  }
  std::size_t keep = n;
  if (static_cast<long long>(n) >= small_threshold) {
    keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    keep = std::clamp<std::size_t>(keep, 1, n);
  }
  // Pairs compare by distance, then index.
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());

  WeightedSubset subset;
  subset.indices.reserve(keep);
  subset.distances.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    subset.distances.push_back(ranked[i].first);
    subset.indices.push_back(ranked[i].second);
  }
  return subset;
}

WeightedSubset compute_weights(WeightedSubset subset, double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature tau must be > 0");
  subset.weights.resize(subset.distances.size());
  for (std::size_t i = 0; i < subset.distances.size(); ++i) {
    const double d = subset.distances[i];
    subset.weights[i] = std::exp(-(d * d) / tau);
  }
  return subset;
}

std::vector<LabeledScore> adjusted_scores(const CalibrationStore& store,
                                          const WeightedSubset& subset, FunctionId function) {
  if (subset.weights.size() != subset.indices.size()) {
    throw InternalError("adjusted_scores called before compute_weights");
  }
  const auto& column = store.scores(function);
  std::vector<LabeledScore> out;
  out.reserve(subset.indices.size());
  for (std::size_t k = 0; k < subset.indices.size(); ++k) {
    const std::size_t i = subset.indices[k];
    out.push_back({store.labels()[i], subset.weights[k] * column[i]});
  }
  return out;
}

std::vector<FunctionId> functions_for(const DetectorConfig& config, TaskKind task) {
  if (task == TaskKind::Regression && config.functions == default_function_set(TaskKind::Classification)) {
    return default_function_set(TaskKind::Regression);
  }
  return config.functions;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json output_json(const ModelOutput& out) {
  if (out.kind() == TaskKind::Classification) return {{"proba", out.proba()}};
  return {{"pred", out.pred()}};
}

ModelOutput output_from_json(const nlohmann::json& j, TaskKind task) {
  if (task == TaskKind::Classification) {
    return ModelOutput::classification(j.at("proba").get<std::vector<double>>());
  }
  return ModelOutput::regression(j.at("pred").get<double>());
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const CalibrationStore& store) {
  const auto& d = store.data();
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    nlohmann::json s = {{"id", d.ids[i]}, {"features", d.raw_features[i]},
                        {"output", output_json(d.outputs[i])}, {"label", d.labels[i]}};
    if (d.task == TaskKind::Regression) s["target"] = d.targets[i];
    samples.push_back(std::move(s));
  }
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [id, values] : d.scores) scores[std::string(to_string(id))] = values;

  nlohmann::json doc = {
      {"format", kStoreFormat},
      {"schema_version", kStoreSchemaVersion},
      {"task", std::string(to_string(d.task))},
      {"config", to_json(d.config)},
      {"normalizer", {{"mean", d.normalizer.mean}, {"stddev", d.normalizer.stddev}}},
      {"num_labels", d.num_labels},
      {"samples", std::move(samples)},
      {"scores", std::move(scores)},
  };
  if (d.clusters) {
    doc["clusters"] = {{"k", d.clusters->k},
                       {"centroids", d.clusters->centroids},
                       {"assignments", d.clusters->assignments},
                       {"dispersion_history", d.clusters->dispersion_history},
                       {"iterations", d.clusters->iterations}};
  }
  if (d.gap) {
    nlohmann::json gaps = nlohmann::json::array();
    for (double g : d.gap->gaps) gaps.push_back(finite_or_null(g));
    doc["gap"] = {{"ks", d.gap->ks}, {"gaps", gaps}, {"chosen_k", d.gap->chosen_k}};
  }
  return doc;
}

CalibrationStore store_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kStoreFormat) {
      throw ConfigError("not a calibration store file");
    }
    const int version = doc.at("schema_version").get<int>();
    if (version != kStoreSchemaVersion) {
      throw ConfigError("unsupported store schema version " + std::to_string(version));
    }
    CalibrationStore::Data d;
    d.task = task_kind_from_string(doc.at("task").get<std::string>());
    d.config = config_from_json(doc.at("config"));
    d.normalizer.mean = doc.at("normalizer").at("mean").get<std::vector<double>>();
    d.normalizer.stddev = doc.at("normalizer").at("stddev").get<std::vector<double>>();
    if (d.normalizer.mean.size() != d.normalizer.stddev.size() || d.normalizer.mean.empty()) {
      throw ConfigError("malformed normalizer");
    }
    for (double s : d.normalizer.stddev) {
      if (!(s >= kStddevFloor)) throw ConfigError("normalizer stddev below floor");
    }
    d.num_labels = doc.at("num_labels").get<int>();
    for (const auto& s : doc.at("samples")) {
      d.ids.push_back(s.at("id").get<std::string>());
      d.raw_features.push_back(s.at("features").get<FeatureVector>());
      d.features.push_back(d.normalizer.apply(d.raw_features.back()));
      d.outputs.push_back(output_from_json(s.at("output"), d.task));
      d.labels.push_back(s.at("label").get<int>());
      if (d.task == TaskKind::Regression) d.targets.push_back(s.at("target").get<double>());
    }
    for (const auto& [name, values] : doc.at("scores").items()) {
      d.scores[function_from_string(name)] = values.get<std::vector<double>>();
    }
    if (doc.contains("clusters")) {
      const auto& c = doc.at("clusters");
      ClusterModel m;
      m.k = c.at("k").get<int>();
      m.centroids = c.at("centroids").get<std::vector<FeatureVector>>();
      m.assignments = c.at("assignments").get<std::vector<int>>();
      m.dispersion_history = c.at("dispersion_history").get<std::vector<double>>();
      m.iterations = c.at("iterations").get<int>();
      d.clusters = std::move(m);
    }
    if (doc.contains("gap")) {
      const auto& g = doc.at("gap");
      GapResult r;
      r.ks = g.at("ks").get<std::vector<int>>();
      for (const auto& v : g.at("gaps")) {
        r.gaps.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
      }
      r.chosen_k = g.at("chosen_k").get<int>();
      d.gap = std::move(r);
    }
    return CalibrationStore(std::move(d));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed calibration store: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("malformed calibration store: ") + e.what());
  }
}

void save_store(const CalibrationStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write store file " + path.string());
  out << to_json(store).dump() << '\n';
  if (!out) throw ConfigError("failed writing store file " + path.string());
}

CalibrationStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open store file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("store file " + path.string() + " is corrupt: " + e.what());
  }
  return store_from_json(doc);
}

}  // namespace driftcp
