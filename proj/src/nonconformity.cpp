#include "driftcp/nonconformity.hpp"

#include <cmath>

#include "driftcp/errors.hpp"

namespace driftcp {

std::string_view to_string(FunctionId id) {
  switch (id) {
    case FunctionId::Lac: return "lac";
    case FunctionId::TopK: return "topk";
    case FunctionId::Aps: return "aps";
    case FunctionId::Raps: return "raps";
    case FunctionId::Residual: return "residual";
  }
  throw InternalError("unhandled FunctionId");
}

FunctionId function_from_string(std::string_view name) {
  for (auto id : {FunctionId::Lac, FunctionId::TopK, FunctionId::Aps, FunctionId::Raps,
                  FunctionId::Residual}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown nonconformity function '" + std::string(name) + "'");
}

TaskKind task_of(FunctionId id) {
  return id == FunctionId::Residual ? TaskKind::Regression : TaskKind::Classification;
}

namespace {

void check_label(std::span<const double> proba, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= proba.size()) {
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(proba.size()) + " classes");
  }
}

// Class j sorts ahead of `label` in the descending order.
bool ranks_ahead(std::span<const double> proba, std::size_t j, int label) {
  const double p = proba[static_cast<std::size_t>(label)];
  return proba[j] > p || (proba[j] == p && j < static_cast<std::size_t>(label));
}

}  // namespace

int probability_rank(std::span<const double> proba, int label) {
  check_label(proba, label);
  int rank = 1;
  for (std::size_t j = 0; j < proba.size(); ++j) {
    if (ranks_ahead(proba, j, label)) ++rank;
  }
  return rank;
}

double lac_score(std::span<const double> proba, int label) {
  check_label(proba, label);
  return 1.0 - proba[static_cast<std::size_t>(label)];
}

double topk_score(std::span<const double> proba, int label) {
  return static_cast<double>(probability_rank(proba, label));
}

double aps_score(std::span<const double> proba, int label) {
  check_label(proba, label);
  // Everything ranked ahead of the label plus the label itself.
  double sum = proba[static_cast<std::size_t>(label)];
  for (std::size_t j = 0; j < proba.size(); ++j) {
    if (ranks_ahead(proba, j, label)) sum += proba[j];
  }
  return sum;
}

double raps_score(std::span<const double> proba, int label, double lambda, int k_reg) {
  if (lambda < 0.0) throw ConfigError("RAPS lambda must be >= 0");
  if (k_reg < 0) throw ConfigError("RAPS k_reg must be >= 0");
  const double base = aps_score(proba, label);
  const int excess = probability_rank(proba, label) - k_reg;
  return excess > 0 ? base + lambda * excess : base;
}

double residual_score(double pred, double target) {
  if (!std::isfinite(pred) || !std::isfinite(target)) {
    throw InputError("residual of a non-finite value");
  }
  return std::abs(pred - target);
}

double classification_score(FunctionId id, const ModelOutput& output, int label,
                            const NonconformityParams& params) {
  if (output.kind() != TaskKind::Classification) {
    throw ConfigError("classification score requested for a regression output");
  }
  const auto& proba = output.proba();
  switch (id) {
    case FunctionId::Lac: return lac_score(proba, label);
    case FunctionId::TopK: return topk_score(proba, label);
    case FunctionId::Aps: return aps_score(proba, label);
    case FunctionId::Raps: return raps_score(proba, label, params.raps_lambda, params.raps_k_reg);
    case FunctionId::Residual: break;
  }
  throw ConfigError("residual is not a classification nonconformity function");
}

std::vector<FunctionId> default_function_set(TaskKind task) {
  if (task == TaskKind::Regression) return {FunctionId::Residual};
  return {FunctionId::Lac, FunctionId::TopK, FunctionId::Aps, FunctionId::Raps};
}

}  // namespace driftcp
