#pragma once

#include <vector>

#include "driftcp/calibration.hpp"
#include "driftcp/config.hpp"
#include "driftcp/core.hpp"

namespace fixture {

// Ten calibration samples over four classes; class 3 never occurs. Outputs
// put 0.9 - 0.05 * rank-within-class on the true label.
inline std::vector<driftcp::LabeledSample> ten_samples() {
  using driftcp::LabeledSample;
  const int labels[10] = {0, 0, 0, 0, 1, 1, 1, 2, 2, 2};
  std::vector<LabeledSample> out;
  for (int i = 0; i < 10; ++i) {
    const double x = labels[i] * 4.0 + 0.3 * (i % 4);
    const double y = (i % 3) * 0.5;
    out.push_back(LabeledSample::classification("c" + std::to_string(i), {x, y}, labels[i]));
  }
  return out;
}

inline std::vector<driftcp::ModelOutput> ten_outputs() {
  const auto samples = ten_samples();
  std::vector<driftcp::ModelOutput> out;
  int seen[4] = {0, 0, 0, 0};
  for (const auto& s : samples) {
    const int y = *s.label;
    const double top = 0.9 - 0.05 * seen[y]++;
    std::vector<double> p(4, (1.0 - top) / 3.0);
    p[static_cast<std::size_t>(y)] = top;
    out.push_back(driftcp::ModelOutput::classification(p));
  }
  return out;
}

inline driftcp::CalibrationStore ten_store(const driftcp::DetectorConfig& cfg = {}) {
  const auto samples = ten_samples();
  const auto outputs = ten_outputs();
  return driftcp::build_store(samples, outputs, cfg.functions, cfg);
}

}  // namespace fixture
