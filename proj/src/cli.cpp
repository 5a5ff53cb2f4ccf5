#include "driftcp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "driftcp/assessment.hpp"
#include "driftcp/calibration.hpp"
#include "driftcp/conformal.hpp"
#include "driftcp/errors.hpp"
#include "driftcp/jsonl.hpp"

namespace driftcp {

namespace {

// Raised by `check` once its report is written.
struct CoverageAlert {};

struct CommonFlags {
  std::string config;
  std::string store;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  std::string output;
};

DetectorConfig resolve_config(const CommonFlags& f, const DetectorConfig& fallback) {
  DetectorConfig cfg = f.config.empty() ? fallback : load_config(f.config);
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.seed) cfg.seed = *f.seed;
  cfg.validate();
  return cfg;
}

// Writes to --output when given, else to the command's stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw InputError("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

std::vector<std::string> function_names(const std::vector<FunctionId>& fns) {
  std::vector<std::string> out;
  for (auto f : fns) out.emplace_back(to_string(f));
  return out;
}

// ---------------------------------------------------------------------------

void cmd_calibrate(const CommonFlags& f, const std::string& input, const std::string& grid_path,
                   const std::string& config_out, std::ostream& out) {
  if (f.store.empty()) throw ConfigError("calibrate needs --store PATH for the artifact");
  DetectorConfig cfg = resolve_config(f, DetectorConfig{});
  const auto records = read_records(input);
  if (records.empty()) throw InputError(input + ": no calibration records");

  std::vector<LabeledSample> samples;
  std::vector<ModelOutput> outputs;
  for (const auto& r : records) {
    if (!r.sample.label && !r.sample.target) {
      throw InputError(input + ":" + std::to_string(r.line) + ": calibration record needs 'label' or 'target'");
    }
    if (!r.output) {
      throw InputError(input + ":" + std::to_string(r.line) + ": calibration record needs 'proba' or 'pred'");
    }
    samples.push_back(r.sample);
    outputs.push_back(*r.output);
  }

  nlohmann::json summary;
  if (!grid_path.empty()) {
    std::ifstream in(grid_path);
    if (!in) throw InputError("cannot open " + grid_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(grid_path + ": " + e.what());
    }
    const auto result = grid_search(samples, outputs, grid_from_json(doc), cfg,
                                    cfg.coverage_repeats, cfg.seed);
    cfg = result.best;
    summary["grid"] = {{"candidates", result.f1.size()}, {"f1", result.f1}, {"selected", result.best_index}};
  }
  if (!config_out.empty()) save_config(cfg, config_out);

  const auto [dim, task] = validate_dataset(samples);
  const auto store = build_store(samples, outputs, functions_for(cfg, task), cfg);
  save_store(store, f.store);

  summary["n"] = store.size();
  summary["dim"] = dim;
  summary["task"] = std::string(to_string(task));
  summary["functions"] = function_names(store.functions());
  summary["labels"] = store.num_labels();
  summary["store"] = f.store;
  out << summary.dump(2) << '\n';
}

void cmd_check(const CommonFlags& f, std::optional<int> repeats, std::ostream& out) {
  if (f.store.empty()) throw ConfigError("check needs --store PATH");
  const auto store = load_store(f.store);
  const auto cfg = resolve_config(f, store.config());
  const auto report = coverage_check(store, cfg, repeats.value_or(cfg.coverage_repeats), cfg.seed);
  out << to_json(report).dump(2) << '\n';
  if (report.alert) throw CoverageAlert{};
}

void cmd_detect(const CommonFlags& f, const std::string& input, std::ostream& out) {
  if (f.store.empty()) throw ConfigError("detect needs --store PATH");
  const auto store = load_store(f.store);
  const auto cfg = resolve_config(f, store.config());
  const auto records = read_records(input);
  std::vector<nlohmann::json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    const auto at = input + ":" + std::to_string(r.line) + ": ";
    if (!r.output) throw InputError(at + "test record needs 'proba' or 'pred'");
    try {
      lines.push_back(to_json(assess_sample(store, r.sample.features, *r.output, cfg, r.sample.id)));
    } catch (const InputError& e) {
      throw InputError(at + e.what());
    }
  }
  for (const auto& l : lines) write_json_line(out, l);
}

bool truth_mispredicted(const nlohmann::json& doc, double threshold) {
  if (doc.contains("mispredicted")) {
    if (!doc["mispredicted"].is_boolean()) throw InputError("'mispredicted' must be a boolean");
    return doc["mispredicted"].get<bool>();
  }
  if (doc.contains("achieved") && doc.contains("oracle")) {
    const double a = doc["achieved"].get<double>();
    const double o = doc["oracle"].get<double>();
    return label_mispredictions(MispredictionRule::Performance, std::span(&a, 1), std::span(&o, 1),
                                threshold)[0];
  }
  if (doc.contains("label") && doc.contains("proba")) {
    const auto out = ModelOutput::classification(doc["proba"].get<std::vector<double>>());
    return out.predicted_label() != doc["label"].get<int>();
  }
  if (doc.contains("target") && doc.contains("pred")) {
    const double p = doc["pred"].get<double>();
    const double t = doc["target"].get<double>();
    return label_mispredictions(MispredictionRule::CostModel, std::span(&p, 1), std::span(&t, 1),
                                threshold)[0];
  }
  throw InputError("truth record needs 'mispredicted', 'label'+'proba', 'target'+'pred' or 'achieved'+'oracle'");
}

void cmd_evaluate(const CommonFlags& f, const std::string& assessments_path, const std::string& truth_path,
                  double threshold, std::ostream& out) {
  (void)f;
  const auto assessments = read_assessments(assessments_path);
  std::ifstream in(truth_path);
  if (!in) throw InputError("cannot open " + truth_path);

  std::map<std::string, bool> truth;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto at = truth_path + ":" + std::to_string(line) + ": ";
    try {
      const auto doc = nlohmann::json::parse(text);
      if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string()) {
        throw InputError("truth record needs a string 'id'");
      }
      const auto id = doc["id"].get<std::string>();
      if (!truth.emplace(id, truth_mispredicted(doc, threshold)).second) {
        throw InputError("duplicate id '" + id + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(at + e.what());
    } catch (const InputError& e) {
      throw InputError(at + e.what());
    }
  }
  if (assessments.empty() || truth.empty()) throw InputError("nothing to evaluate");
  if (assessments.size() != truth.size()) {
    throw InputError(std::to_string(assessments.size()) + " assessments but " +
                     std::to_string(truth.size()) + " truth records");
  }
  std::vector<bool> drifting;
  std::vector<bool> wrong;
  std::set<std::string> seen;
  for (const auto& a : assessments) {
    auto it = truth.find(a.id);
    if (it == truth.end()) throw InputError("assessment id '" + a.id + "' has no truth record");
    if (!seen.insert(a.id).second) throw InputError("duplicate assessment id '" + a.id + "'");
    drifting.push_back(a.drifting);
    wrong.push_back(it->second);
  }
  out << to_json(drift_metrics(drifting, wrong)).dump(2) << '\n';
}

void cmd_triage(const std::string& assessments_path, double budget, std::ostream& out) {
  const auto assessments = read_assessments(assessments_path);
  out << to_json(triage(assessments, budget)).dump() << '\n';
}

// ---------------------------------------------------------------------------

struct SetEvaluation {
  double accuracy = 0.0;
  double flagged_fraction = 0.0;
  DriftMetrics metrics;
  std::vector<DriftAssessment> assessments;
};

SetEvaluation evaluate_set(const ReferenceClassifier& model, const CalibrationStore& store,
                           const DetectorConfig& cfg, std::span<const LabeledSample> samples) {
  SetEvaluation ev;
  std::vector<bool> drifting;
  std::vector<bool> wrong;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    const auto out = model.predict(s.features);
    auto a = assess_sample(store, s.features, out, cfg, s.id);
    const bool miss = out.predicted_label() != *s.label;
    hits += miss ? 0 : 1;
    drifting.push_back(a.drifting);
    wrong.push_back(miss);
    ev.assessments.push_back(std::move(a));
  }
  ev.metrics = drift_metrics(drifting, wrong);
  const auto n = static_cast<double>(std::max<std::size_t>(samples.size(), 1));
  ev.accuracy = static_cast<double>(hits) / n;
  ev.flagged_fraction = static_cast<double>(ev.metrics.tp + ev.metrics.fp) / n;
  return ev;
}

nlohmann::json to_json(const SetEvaluation& ev) {
  return {{"model_accuracy", ev.accuracy},
          {"flagged_fraction", ev.flagged_fraction},
          {"detection", to_json(ev.metrics)}};
}

}  // namespace

nlohmann::json demo_report(const BenchmarkParams& params, const DetectorConfig& config, double budget) {
  config.validate();
  const auto bench = generate_benchmark(params);
  const auto model = train_reference_classifier(bench.training, params.seed);
  const auto functions = functions_for(config, TaskKind::Classification);
  const auto store = build_store(bench.calibration, model.predict_all(bench.calibration), functions, config);
  const auto coverage = coverage_check(store, config, config.coverage_repeats, config.seed);

  const auto in_before = evaluate_set(model, store, config, bench.in_distribution);
  const auto dr_before = evaluate_set(model, store, config, bench.drifted);

  const auto batch = triage(dr_before.assessments, budget);
  const std::set<std::string> chosen(batch.selected.begin(), batch.selected.end());
  std::vector<LabeledSample> relabeled;
  for (const auto& s : bench.drifted) {
    if (chosen.contains(s.id)) relabeled.push_back(s);
  }
  std::vector<LabeledSample> pool = bench.training;
  pool.insert(pool.end(), bench.calibration.begin(), bench.calibration.end());
  const auto updated = incremental_update(pool, relabeled, config, params.seed);

  const auto in_after = evaluate_set(updated.model, updated.store, config, bench.in_distribution);
  const auto dr_after = evaluate_set(updated.model, updated.store, config, bench.drifted);

  nlohmann::json report;
  report["seed"] = params.seed;
  report["drift_shift"] = params.drift_shift;
  report["benchmark"] = {{"classes", params.classes},
                         {"dim", params.dim},
                         {"training", bench.training.size()},
                         {"calibration", bench.calibration.size()},
                         {"in_distribution", bench.in_distribution.size()},
                         {"drifted", bench.drifted.size()},
                         {"relabel_fraction", params.relabel_fraction}};
  report["config"] = to_json(config);
  report["coverage"] = to_json(coverage);
  report["before"] = {{"in_distribution", to_json(in_before)}, {"drifted", to_json(dr_before)}};
  report["triage"] = {{"flagged", dr_before.metrics.tp + dr_before.metrics.fp},
                      {"budget", budget},
                      {"selected", batch.selected}};
  report["after"] = {{"in_distribution", to_json(in_after)}, {"drifted", to_json(dr_after)}};
  report["drifted_accuracy_gain"] = dr_after.accuracy - dr_before.accuracy;
  return report;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal misprediction and drift detector"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&flags](CLI::App* cmd, bool store, bool output) {
    cmd->add_option("--config", flags.config, "flat JSON detector config")->check(CLI::ExistingFile);
    if (store) cmd->add_option("--store", flags.store, "calibration store artifact");
    cmd->add_option("--epsilon", flags.epsilon, "significance level override");
    cmd->add_option("--seed", flags.seed, "random seed");
    if (output) cmd->add_option("--output", flags.output, "write here instead of stdout");
  };

  std::string input;
  std::string second;
  std::string grid;
  std::string save_config_path;
  std::optional<int> repeats;
  double threshold = kMispredictionThreshold;
  double budget = 0.05;
  double drift_shift = 5.0;

  auto* calibrate = app.add_subcommand("calibrate", "build a calibration store from labeled records");
  add_common(calibrate, true, true);
  calibrate->add_option("calibration", input, "calibration JSON Lines")->required();
  calibrate->add_option("--grid", grid, "grid-search these candidate values first");
  calibrate->add_option("--save-config", save_config_path, "write the config actually used");

  auto* check = app.add_subcommand("check", "coverage self-check of a store");
  add_common(check, true, true);
  check->add_option("--repeats", repeats, "internal 80/20 splits");

  auto* detect = app.add_subcommand("detect", "assess test records against a store");
  add_common(detect, true, true);
  detect->add_option("test", input, "test JSON Lines")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score assessments against ground truth");
  add_common(evaluate, false, true);
  evaluate->add_option("assessments", input, "assessment JSON Lines")->required();
  evaluate->add_option("truth", second, "ground-truth JSON Lines")->required();
  evaluate->add_option("--threshold", threshold, "relative misprediction threshold");

  auto* triage_cmd = app.add_subcommand("triage", "pick flagged samples for relabeling");
  add_common(triage_cmd, false, true);
  triage_cmd->add_option("assessments", input, "assessment JSON Lines")->required();
  triage_cmd->add_option("--budget", budget, "share of flagged samples to relabel");

  auto* demo = app.add_subcommand("demo", "end-to-end run on the synthetic benchmark");
  add_common(demo, false, true);
  demo->add_option("--drift-shift", drift_shift, "translation of the drifted set, in stddevs");
  demo->add_option("--budget", budget, "triage budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    Sink sink(flags.output, out);
    auto& o = sink.stream();
    if (*calibrate) {
      cmd_calibrate(flags, input, grid, save_config_path, o);
    } else if (*check) {
      cmd_check(flags, repeats, o);
    } else if (*detect) {
      cmd_detect(flags, input, o);
    } else if (*evaluate) {
      cmd_evaluate(flags, input, second, threshold, o);
    } else if (*triage_cmd) {
      cmd_triage(input, budget, o);
    } else if (*demo) {
      const auto cfg = resolve_config(flags, DetectorConfig{});
      BenchmarkParams params;
      params.seed = flags.seed.value_or(0);
      params.drift_shift = drift_shift;
      o << demo_report(params, cfg, budget).dump(2) << '\n';
    }
    o.flush();
  } catch (const CoverageAlert&) {
    err << "coverage alert: deviation exceeds " << kCoverageAlertBound << '\n';
    return kExitCoverageAlert;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace driftcp
