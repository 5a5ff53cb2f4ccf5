#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftcp/conformal.hpp"
#include "driftcp/core.hpp"

namespace driftcp {

// One parsed line: the sample (label/target may both be absent for test
// inputs) and, if present, the model output carried alongside it.
struct Record {
  std::size_t line = 0;  // 1-based
  LabeledSample sample;
  std::optional<ModelOutput> output;
};

// Parses {"id", "features", "label"?, "target"?, "proba"?, "pred"?} per line.
// Blank lines are skipped, unknown keys ignored. Errors are InputError with
// "<source>:<line>: " in front.
std::vector<Record> read_records(std::istream& in, const std::string& source);
std::vector<Record> read_records(const std::filesystem::path& path);

Record record_from_json(const nlohmann::json& doc, std::size_t line = 0);
nlohmann::json to_json(const Record& record);

std::vector<DriftAssessment> read_assessments(std::istream& in, const std::string& source);
std::vector<DriftAssessment> read_assessments(const std::filesystem::path& path);

// Raw JSON objects, one per non-blank line.
std::vector<nlohmann::json> read_json_lines(std::istream& in, const std::string& source);

void write_json_line(std::ostream& out, const nlohmann::json& doc);

}  // namespace driftcp
