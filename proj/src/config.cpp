#include "driftcp/config.hpp"

#include <fstream>
#include <set>

#include "driftcp/errors.hpp"

namespace driftcp {

void DetectorConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0, 1)");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw ConfigError("subset_fraction must be in (0, 1]");
  }
  if (small_threshold < 0) throw ConfigError("small_threshold must be >= 0");
  if (!(gaussian_c > 0.0)) throw ConfigError("gaussian_c must be > 0");
  if (raps_lambda < 0.0) throw ConfigError("raps_lambda must be >= 0");
  if (raps_k_reg < 0) throw ConfigError("raps_k_reg must be >= 0");
  if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (k_min < 2 || k_max < k_min) throw ConfigError("k_range must satisfy 2 <= k_min <= k_max");
  if (gap_B < 1) throw ConfigError("gap_B must be >= 1");
  if (functions.empty()) throw ConfigError("at least one nonconformity function is required");
  const TaskKind kind = task_of(functions.front());
  std::set<FunctionId> seen;
  for (auto f : functions) {
    if (task_of(f) != kind) throw ConfigError("functions mix classification and regression");
    if (!seen.insert(f).second) throw ConfigError("duplicate function '" + std::string(to_string(f)) + "'");
  }
  if (coverage_repeats < 1) throw ConfigError("coverage_repeats must be >= 1");
}

nlohmann::json to_json(const DetectorConfig& c) {
  nlohmann::json names = nlohmann::json::array();
  for (auto f : c.functions) names.push_back(std::string(to_string(f)));
  return {
      {"epsilon", c.epsilon},
      {"tau", c.tau},
      {"subset_fraction", c.subset_fraction},
      {"small_threshold", c.small_threshold},
      {"gaussian_c", c.gaussian_c},
      {"raps_lambda", c.raps_lambda},
      {"raps_k_reg", c.raps_k_reg},
      {"knn_k", c.knn_k},
      {"k_range", {c.k_min, c.k_max}},
      {"gap_B", c.gap_B},
      {"functions", names},
      {"seed", c.seed},
      {"normalize", c.normalize},
      {"coverage_repeats", c.coverage_repeats},
      {"coverage_function", std::string(to_string(c.coverage_function))},
  };
}

namespace {

template <typename T>
T field(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

DetectorConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  DetectorConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "epsilon") c.epsilon = field<double>(value, key);
    else if (key == "tau") c.tau = field<double>(value, key);
    else if (key == "subset_fraction") c.subset_fraction = field<double>(value, key);
    else if (key == "small_threshold") c.small_threshold = field<int>(value, key);
    else if (key == "gaussian_c") c.gaussian_c = field<double>(value, key);
    else if (key == "raps_lambda") c.raps_lambda = field<double>(value, key);
    else if (key == "raps_k_reg") c.raps_k_reg = field<int>(value, key);
    else if (key == "knn_k") c.knn_k = field<int>(value, key);
    else if (key == "k_range") {
      auto range = field<std::vector<int>>(value, key);
      if (range.size() != 2) throw ConfigError("k_range must be [k_min, k_max]");
      c.k_min = range[0];
      c.k_max = range[1];
    } else if (key == "gap_B") c.gap_B = field<int>(value, key);
    else if (key == "functions") {
      c.functions.clear();
      for (const auto& name : field<std::vector<std::string>>(value, key)) {
        c.functions.push_back(function_from_string(name));
      }
    } else if (key == "seed") c.seed = field<std::uint64_t>(value, key);
    else if (key == "normalize") c.normalize = field<bool>(value, key);
    else if (key == "coverage_repeats") c.coverage_repeats = field<int>(value, key);
    else if (key == "coverage_function") {
      c.coverage_function = function_from_string(field<std::string>(value, key));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

DetectorConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const DetectorConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace driftcp
