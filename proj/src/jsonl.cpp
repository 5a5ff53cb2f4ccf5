#include "driftcp/jsonl.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "driftcp/errors.hpp"

namespace driftcp {

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::vector<double> number_array(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_array()) throw InputError(std::string("'") + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw InputError(std::string("'") + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

Record record_from_json(const nlohmann::json& doc, std::size_t line) {
  if (!doc.is_object()) throw InputError("record must be a JSON object");
  Record r;
  r.line = line;
  if (!doc.contains("id") || !doc["id"].is_string()) throw InputError("record needs a string 'id'");
  r.sample.id = doc["id"].get<std::string>();
  if (!doc.contains("features")) throw InputError("record '" + r.sample.id + "' has no 'features'");
  r.sample.features = number_array(doc, "features");
  if (r.sample.features.empty()) throw InputError("record '" + r.sample.id + "' has empty features");

  const bool has_label = doc.contains("label");
  const bool has_target = doc.contains("target");
  if (has_label && has_target) {
    throw InputError("record '" + r.sample.id + "' has both 'label' and 'target'");
  }
  if (has_label) {
    const auto& v = doc["label"];
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw InputError("'label' must be a non-negative integer");
    }
    r.sample.label = v.get<int>();
  }
  if (has_target) {
    if (!doc["target"].is_number()) throw InputError("'target' must be a number");
    r.sample.target = doc["target"].get<double>();
  }

  const bool has_proba = doc.contains("proba");
  const bool has_pred = doc.contains("pred");
  if (has_proba && has_pred) throw InputError("record '" + r.sample.id + "' has both 'proba' and 'pred'");
  try {
    if (has_proba) r.output = ModelOutput::classification(number_array(doc, "proba"));
    if (has_pred) {
      if (!doc["pred"].is_number()) throw InputError("'pred' must be a number");
      r.output = ModelOutput::regression(doc["pred"].get<double>());
    }
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  }
  if (r.output && has_label && r.output->kind() != TaskKind::Classification) {
    throw InputError("record '" + r.sample.id + "' pairs a class label with a regression 'pred'");
  }
  if (r.output && has_target && r.output->kind() != TaskKind::Regression) {
    throw InputError("record '" + r.sample.id + "' pairs a regression target with 'proba'");
  }
  return r;
}

nlohmann::json to_json(const Record& r) {
  nlohmann::json j = {{"id", r.sample.id}, {"features", r.sample.features}};
  if (r.sample.label) j["label"] = *r.sample.label;
  if (r.sample.target) j["target"] = *r.sample.target;
  if (r.output) {
    if (r.output->kind() == TaskKind::Classification) {
      j["proba"] = r.output->proba();
    } else {
      j["pred"] = r.output->pred();
    }
  }
  return j;
}

std::vector<nlohmann::json> read_json_lines(std::istream& in, const std::string& source) {
  std::vector<nlohmann::json> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    try {
      out.push_back(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where(source, line) + "invalid JSON: " + e.what());
    }
  }
  return out;
}

std::vector<Record> read_records(std::istream& in, const std::string& source) {
  std::vector<Record> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(text), line));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where(source, line) + e.what());
    } catch (const InputError& e) {
      throw InputError(where(source, line) + e.what());
    }
  }
  return out;
}

std::vector<Record> read_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_records(in, path.string());
}

std::vector<DriftAssessment> read_assessments(std::istream& in, const std::string& source) {
  std::vector<DriftAssessment> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    try {
      out.push_back(assessment_from_json(nlohmann::json::parse(text)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where(source, line) + e.what());
    } catch (const std::runtime_error& e) {
      throw InputError(where(source, line) + e.what());
    }
  }
  return out;
}

std::vector<DriftAssessment> read_assessments(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_assessments(in, path.string());
}

void write_json_line(std::ostream& out, const nlohmann::json& doc) { out << doc.dump() << '\n'; }

}  // namespace driftcp
