#pragma once

#include <cstdint>
#include <iosfwd>

#include <json.hpp>

#include "driftcp/config.hpp"
#include "driftcp/harness.hpp"

namespace driftcp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitCoverageAlert = 3;

// Entry point of the command-line tool. Never returns anything but 0, 2 or 3.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// benchmark -> calibrate -> detect -> evaluate -> triage -> retrain -> re-evaluate
nlohmann::json demo_report(const BenchmarkParams& bench, const DetectorConfig& config,
                           double budget = 0.05);

}  // namespace driftcp
