#include "driftcp/conformal.hpp"

#include <cmath>

#include "driftcp/errors.hpp"
#include "driftcp/regression.hpp"

namespace driftcp {

double p_value(std::span<const LabeledScore> adjusted, int hypothesized_label, double test_score) {
  if (adjusted.empty()) throw ConfigError("p-value over an empty calibration subset");
  std::size_t same = 0;
  std::size_t at_least = 0;
  for (const auto& entry : adjusted) {
    if (entry.label != hypothesized_label) continue;
    ++same;
    if (entry.score >= test_score - kScoreTieTolerance) ++at_least;
  }
  if (same == 0) return 1.0 / static_cast<double>(adjusted.size() + 1);
  return static_cast<double>(at_least + 1) / static_cast<double>(same + 1);
}

std::map<int, double> label_p_values(const CalibrationStore& store, const WeightedSubset& subset,
                                     FunctionId function, const ModelOutput& output,
                                     const NonconformityParams& params) {
  if (store.task() != TaskKind::Classification || output.kind() != TaskKind::Classification) {
    throw ConfigError("label_p_values needs a classification store and output");
  }
  if (static_cast<int>(output.num_classes()) != store.num_labels()) {
    throw InputError("model output has " + std::to_string(output.num_classes()) +
                     " classes, store has " + std::to_string(store.num_labels()));
  }
  const auto adjusted = adjusted_scores(store, subset, function);
  std::map<int, double> out;
  for (int label = 0; label < store.num_labels(); ++label) {
    out[label] = p_value(adjusted, label, classification_score(function, output, label, params));
  }
  return out;
}

std::set<int> prediction_set(const std::map<int, double>& p_values, double epsilon) {
  std::set<int> out;
  for (const auto& [label, p] : p_values) {
    if (p > epsilon) out.insert(label);
  }
  return out;
}

double credibility(const std::map<int, double>& p_values, int predicted_label) {
  auto it = p_values.find(predicted_label);
  if (it == p_values.end()) {
    throw InternalError("no p-value for predicted label " + std::to_string(predicted_label));
  }
  return it->second;
}

double confidence(int set_size, double c) {
  if (!(c > 0.0)) throw ConfigError("Gaussian width c must be > 0");
  if (set_size < 0) throw InputError("negative prediction set size");
  const double x = static_cast<double>(set_size) - 1.0;
  return std::exp(-(x * x) / (2.0 * c * c));
}

ExpertVerdict expert_verdict(FunctionId function, double cred, double conf, int set_size,
                             double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0, 1)");
  const double threshold = 1.0 - epsilon;
  ExpertVerdict v;
  v.function = function;
  v.credibility = cred;
  v.confidence = conf;
  v.set_size = set_size;
  v.accept = !(cred < threshold && conf < threshold);
  return v;
}

bool ensemble_decision(std::span<const ExpertVerdict> verdicts) {
  if (verdicts.empty()) throw ConfigError("ensemble vote needs at least one verdict");
  std::size_t rejections = 0;
  for (const auto& v : verdicts) {
    if (!v.accept) ++rejections;
  }
  return 2 * rejections >= verdicts.size();
}

WeightedSubset weighted_subset(const CalibrationStore& store, std::span<const double> test_features,
                               const DetectorConfig& config) {
  return compute_weights(
      select_subset(store, test_features, config.subset_fraction, config.small_threshold),
      config.tau);
}

DriftAssessment assess_sample(const CalibrationStore& store, std::span<const double> test_features,
                              const ModelOutput& output, const DetectorConfig& config,
                              std::string id) {
  if (output.kind() != store.task()) {
    throw InputError("model output kind does not match the calibration store");
  }
  if (store.task() == TaskKind::Regression) {
    return regression_assess(store, test_features, output.pred(), config, std::move(id));
  }
  config.validate();

  const auto subset = weighted_subset(store, test_features, config);
  const auto params = config.nonconformity_params();
  DriftAssessment result;
  result.id = std::move(id);
  for (auto function : store.functions()) {
    const auto pv = label_p_values(store, subset, function, output, params);
    const auto set = prediction_set(pv, config.epsilon);
    const int size = static_cast<int>(set.size());
    result.verdicts.push_back(expert_verdict(function, credibility(pv, output.predicted_label()),
                                             confidence(size, config.gaussian_c), size,
                                             config.epsilon));
  }
  result.drifting = ensemble_decision(result.verdicts);
  return result;
}

nlohmann::json to_json(const DriftAssessment& a) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : a.verdicts) {
    verdicts.push_back({{"function", std::string(to_string(v.function))},
                        {"credibility", v.credibility},
                        {"confidence", v.confidence},
                        {"set_size", v.set_size},
                        {"accept", v.accept}});
  }
  return {{"id", a.id}, {"drifting", a.drifting}, {"verdicts", std::move(verdicts)}};
}

DriftAssessment assessment_from_json(const nlohmann::json& doc) {
  try {
    DriftAssessment a;
    a.id = doc.at("id").get<std::string>();
    a.drifting = doc.at("drifting").get<bool>();
    for (const auto& v : doc.at("verdicts")) {
      ExpertVerdict e;
      e.function = function_from_string(v.at("function").get<std::string>());
      e.credibility = v.at("credibility").get<double>();
      e.confidence = v.at("confidence").get<double>();
      e.set_size = v.at("set_size").get<int>();
      e.accept = v.at("accept").get<bool>();
      a.verdicts.push_back(e);
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed assessment record: ") + e.what());
  }
}

}  // namespace driftcp
