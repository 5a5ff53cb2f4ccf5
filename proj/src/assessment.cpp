#include "driftcp/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "driftcp/conformal.hpp"
#include "driftcp/errors.hpp"
#include "driftcp/regression.hpp"

namespace driftcp {

namespace {

constexpr std::size_t kMinCoverageSamples = 10;

struct InternalSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};

// Repeat r of the internal 80/20 split. Each side keeps ascending order.
InternalSplit internal_split(std::size_t n, std::uint64_t seed, int repeat) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(repeat));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(kInternalValidationShare * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  InternalSplit s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.fit.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.fit.begin(), s.fit.end());
  return s;
}

template <typename T>
std::vector<T> pick(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

void check_inputs(std::span<const LabeledSample> calibration, std::span<const ModelOutput> outputs) {
  if (calibration.size() != outputs.size()) {
    throw ConfigError("got " + std::to_string(calibration.size()) + " samples but " +
                      std::to_string(outputs.size()) + " model outputs");
  }
  if (calibration.size() < kMinCoverageSamples) {
    throw ConfigError("internal validation needs at least " + std::to_string(kMinCoverageSamples) +
                      " samples, got " + std::to_string(calibration.size()));
  }
}

bool covered(const CalibrationStore& store, const LabeledSample& sample, const ModelOutput& output,
             const DetectorConfig& config) {
  const auto subset = weighted_subset(store, sample.features, config);
  if (store.task() == TaskKind::Classification) {
    const auto pv = label_p_values(store, subset, config.coverage_function, output,
                                   config.nonconformity_params());
    return prediction_set(pv, config.epsilon).contains(*sample.label);
  }
  const int cluster = assign_cluster_label(sample.features, store);
  const auto pv = regression_p_values(store, subset, residual_score(output.pred(), *sample.target));
  return prediction_set(pv, config.epsilon).contains(cluster);
}

bool mispredicted(const LabeledSample& sample, const ModelOutput& output) {
  if (sample.label) return output.predicted_label() != *sample.label;
  const double t = *sample.target;
  if (t == 0.0) return output.pred() != 0.0;
  return std::abs(output.pred() - t) / std::abs(t) >= kMispredictionThreshold;
}

}  // namespace

CoverageReport coverage_check(std::span<const LabeledSample> calibration,
                              std::span<const ModelOutput> outputs, const DetectorConfig& config,
                              int repeats, std::uint64_t seed) {
  config.validate();
  if (repeats < 1) throw ConfigError("coverage check needs at least one repeat");
  check_inputs(calibration, outputs);
  const auto [dim, task] = validate_dataset(calibration);
  (void)dim;

  std::vector<FunctionId> functions = {task == TaskKind::Classification ? config.coverage_function
                                                                        : FunctionId::Residual};
  CoverageReport report;
  report.epsilon = config.epsilon;
  report.function = functions.front();
  for (int r = 0; r < repeats; ++r) {
    const auto split = internal_split(calibration.size(), seed, r);
    const auto fit = pick(calibration, split.fit);
    const auto fit_out = pick(outputs, split.fit);
    const auto store = build_store(fit, fit_out, functions, config);
    std::size_t hits = 0;
    for (auto i : split.validation) {
      if (covered(store, calibration[i], outputs[i], config)) ++hits;
    }
    report.rates.push_back(static_cast<double>(hits) / static_cast<double>(split.validation.size()));
  }
  report.mean = std::accumulate(report.rates.begin(), report.rates.end(), 0.0) /
                static_cast<double>(report.rates.size());
  report.deviation = std::abs(report.mean - (1.0 - config.epsilon));
  report.alert = report.deviation > kCoverageAlertBound;
  return report;
}

CoverageReport coverage_check(const CalibrationStore& store, const DetectorConfig& config, int repeats,
                              std::uint64_t seed) {
  const auto samples = store.samples();
  return coverage_check(samples, store.outputs(), config, repeats, seed);
}

DriftMetrics drift_metrics(const std::vector<bool>& drifting, const std::vector<bool>& mispredicted) {
  if (drifting.size() != mispredicted.size()) {
    throw InputError("got " + std::to_string(drifting.size()) + " decisions but " +
                     std::to_string(mispredicted.size()) + " ground-truth entries");
  }
  DriftMetrics m;
  for (std::size_t i = 0; i < drifting.size(); ++i) {
    if (mispredicted[i]) {
      drifting[i] ? ++m.tp : ++m.fn;
    } else {
      drifting[i] ? ++m.fp : ++m.tn;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(m.tp + m.tn, m.total());
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::vector<bool> label_mispredictions(MispredictionRule rule, std::span<const double> achieved,
                                       std::span<const double> reference, double threshold) {
  if (achieved.size() != reference.size()) {
    throw InputError("achieved and reference sequences differ in length");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
  std::vector<bool> out(achieved.size());
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    const double ref = reference[i];
    if (!(ref > 0.0)) {
      throw InputError("reference value at position " + std::to_string(i) + " must be positive");
    }
    if (rule == MispredictionRule::Performance) {
      out[i] = achieved[i] < (1.0 - threshold) * ref;
    } else {
      out[i] = std::abs(achieved[i] - ref) / ref >= threshold;
    }
  }
  return out;
}

std::vector<bool> label_mispredictions(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InputError("predicted and true labels differ in length");
  std::vector<bool> out(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) out[i] = predicted[i] != truth[i];
  return out;
}

std::vector<DetectorConfig> ParameterGrid::expand(const DetectorConfig& base) const {
  auto axis = [](const std::vector<double>& values, double fallback) {
    return values.empty() ? std::vector<double>{fallback} : values;
  };
  std::vector<DetectorConfig> out;
  for (double e : axis(epsilon, base.epsilon)) {
    for (double t : axis(tau, base.tau)) {
      for (double f : axis(subset_fraction, base.subset_fraction)) {
        for (double c : axis(gaussian_c, base.gaussian_c)) {
          DetectorConfig cfg = base;
          cfg.epsilon = e;
          cfg.tau = t;
          cfg.subset_fraction = f;
          cfg.gaussian_c = c;
          cfg.validate();
          out.push_back(cfg);
        }
      }
    }
  }
  return out;
}

GridSearchResult grid_search(std::span<const LabeledSample> calibration,
                             std::span<const ModelOutput> outputs, const ParameterGrid& grid,
                             const DetectorConfig& base, int repeats, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("parameter grid is empty");
  if (repeats < 1) throw ConfigError("grid search needs at least one repeat");
  check_inputs(calibration, outputs);
  const auto [dim, task] = validate_dataset(calibration);
  (void)dim;
  const auto candidates = grid.expand(base);

  std::vector<InternalSplit> splits;
  for (int r = 0; r < repeats; ++r) splits.push_back(internal_split(calibration.size(), seed, r));

  GridSearchResult result;
  double best = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cfg = candidates[c];
    const auto functions = functions_for(cfg, task);
    std::vector<bool> flagged;
    std::vector<bool> wrong;
    for (const auto& split : splits) {
      const auto fit = pick(calibration, split.fit);
      const auto fit_out = pick(outputs, split.fit);
      const auto store = build_store(fit, fit_out, functions, cfg);
      for (auto i : split.validation) {
        flagged.push_back(assess_sample(store, calibration[i].features, outputs[i], cfg).drifting);
        wrong.push_back(mispredicted(calibration[i], outputs[i]));
      }
    }
    const double f1 = drift_metrics(flagged, wrong).f1;
    result.f1.push_back(f1);
    if (f1 > best) {
      best = f1;
      result.best_index = c;
    }
  }
  result.best = candidates[result.best_index];
  return result;
}

nlohmann::json to_json(const CoverageReport& report) {
  return {{"epsilon", report.epsilon},
          {"function", std::string(to_string(report.function))},
          {"coverage", report.rates},
          {"mean_coverage", report.mean},
          {"deviation", report.deviation},
          {"alert", report.alert}};
}

nlohmann::json to_json(const DriftMetrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1},             {"tp", m.tp},               {"fp", m.fp},
          {"fn", m.fn},             {"tn", m.tn}};
}

ParameterGrid grid_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("parameter grid must be a JSON object");
  ParameterGrid grid;
  for (const auto& [key, value] : doc.items()) {
    std::vector<double>* axis = nullptr;
    if (key == "epsilon") axis = &grid.epsilon;
    else if (key == "tau") axis = &grid.tau;
    else if (key == "subset_fraction") axis = &grid.subset_fraction;
    else if (key == "gaussian_c") axis = &grid.gaussian_c;
    else throw ConfigError("unknown grid axis '" + key + "'");
    if (!value.is_array()) throw ConfigError("grid axis '" + key + "' must be an array of numbers");
    for (const auto& v : value) {
      if (!v.is_number()) throw ConfigError("grid axis '" + key + "' must be an array of numbers");
      axis->push_back(v.get<double>());
    }
  }
  return grid;
}

}  // namespace driftcp
