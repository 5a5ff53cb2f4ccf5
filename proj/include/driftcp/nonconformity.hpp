#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftcp/core.hpp"

namespace driftcp {

// A nonconformity function ("expert"). Residual is the only regression one.
enum class FunctionId { Lac, TopK, Aps, Raps, Residual };

std::string_view to_string(FunctionId id);
FunctionId function_from_string(std::string_view name);
TaskKind task_of(FunctionId id);

struct NonconformityParams {
  double raps_lambda = 0.01;
  int raps_k_reg = 1;
};

// 1-based position of `label` when classes are sorted by descending
// probability, equal probabilities ordered by lower class index.
int probability_rank(std::span<const double> proba, int label);

double lac_score(std::span<const double> proba, int label);
double topk_score(std::span<const double> proba, int label);
double aps_score(std::span<const double> proba, int label);
double raps_score(std::span<const double> proba, int label, double lambda, int k_reg);
double residual_score(double pred, double target);

// Classification score of `output` under a hypothesized label.
double classification_score(FunctionId id, const ModelOutput& output, int label,
                            const NonconformityParams& params);

std::vector<FunctionId> default_function_set(TaskKind task);

}  // namespace driftcp
