#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftcp/calibration.hpp"
#include "driftcp/config.hpp"
#include "driftcp/core.hpp"
#include "driftcp/nonconformity.hpp"

namespace driftcp {

// Adjusted scores within this of the test score count as ties.
inline constexpr double kScoreTieTolerance = 1e-9;

// Smoothed conformal p-value over the calibration entries carrying
// `hypothesized_label`:
//   (#{score >= test_score} + 1) / (#same-label + 1)
// With no same-label entry at all the result is 1 / (adjusted.size() + 1).
double p_value(std::span<const LabeledScore> adjusted, int hypothesized_label, double test_score);

// p-value for every candidate label. Classification recomputes the test score
// under each hypothesized label; labels run over 0..num_labels-1.
std::map<int, double> label_p_values(const CalibrationStore& store, const WeightedSubset& subset,
                                     FunctionId function, const ModelOutput& output,
                                     const NonconformityParams& params);

// Labels whose p-value exceeds epsilon.
std::set<int> prediction_set(const std::map<int, double>& p_values, double epsilon);

// p-value of the predicted label.
double credibility(const std::map<int, double>& p_values, int predicted_label);

// exp(-(set_size - 1)^2 / (2 c^2)); peaks at 1 for a singleton set.
double confidence(int set_size, double c = 3.0);

struct ExpertVerdict {
  FunctionId function = FunctionId::Lac;
  double credibility = 0.0;
  double confidence = 0.0;
  int set_size = 0;
  bool accept = true;

  friend bool operator==(const ExpertVerdict&, const ExpertVerdict&) = default;
};

// Rejects only when both scores fall below 1 - epsilon.
ExpertVerdict expert_verdict(FunctionId function, double credibility, double confidence,
                             int set_size, double epsilon);

// Majority vote; a tied vote counts as drifting.
bool ensemble_decision(std::span<const ExpertVerdict> verdicts);

struct DriftAssessment {
  std::string id;
  std::vector<ExpertVerdict> verdicts;
  bool drifting = false;

  friend bool operator==(const DriftAssessment&, const DriftAssessment&) = default;
};

// Full deployment-time pipeline for one test input: subset selection,
// weighting, per-function p-values, credibility/confidence, verdicts and the
// ensemble vote. Regression stores are routed to regression_assess.
DriftAssessment assess_sample(const CalibrationStore& store, std::span<const double> test_features,
                              const ModelOutput& output, const DetectorConfig& config,
                              std::string id = {});

// The weighted nearest-neighbour subset the pipeline uses for one input.
WeightedSubset weighted_subset(const CalibrationStore& store, std::span<const double> test_features,
                               const DetectorConfig& config);

nlohmann::json to_json(const DriftAssessment& assessment);
DriftAssessment assessment_from_json(const nlohmann::json& doc);

}  // namespace driftcp
