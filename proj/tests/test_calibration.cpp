#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "driftcp/calibration.hpp"
#include "driftcp/errors.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

using namespace driftcp;

namespace {

CalibrationStore random_store(std::mt19937_64& rng, std::size_t n, std::size_t dim, int classes) {
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<LabeledSample> samples;
  std::vector<ModelOutput> outputs;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector f(dim);
    for (auto& v : f) v = g(rng);
    // round to a coarse grid so that distance ties actually happen
    for (auto& v : f) v = std::round(v * 2.0) / 2.0;
    samples.push_back(LabeledSample::classification("r" + std::to_string(i), f, pick(rng)));
    outputs.push_back(ModelOutput::classification(testutil::random_proba(rng, static_cast<std::size_t>(classes))));
  }
  DetectorConfig cfg;
  return build_store(samples, outputs, cfg.functions, cfg);
}

}  // namespace

TEST_CASE("store scores use the true label") {
  const auto store = fixture::ten_store();
  const auto outputs = fixture::ten_outputs();
  CHECK(store.size() == 10);
  CHECK(store.num_labels() == 4);
  CHECK(store.functions().size() == 4);
  const auto& lac = store.scores(FunctionId::Lac);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(lac[i] == doctest::Approx(1.0 - outputs[i].proba()[static_cast<std::size_t>(store.labels()[i])]));
  }
  CHECK(lac[0] == doctest::Approx(0.1));
  CHECK(lac[1] == doctest::Approx(0.15));
  CHECK(lac[4] == doctest::Approx(0.1));
  CHECK_THROWS_AS(store.scores(FunctionId::Residual), ConfigError);
}

TEST_CASE("store build errors") {
  DetectorConfig cfg;
  auto samples = fixture::ten_samples();
  auto outputs = fixture::ten_outputs();
  std::vector<LabeledSample> none;
  std::vector<ModelOutput> no_out;
  CHECK_THROWS_AS(build_store(none, no_out, cfg.functions, cfg), ConfigError);
  outputs.pop_back();
  CHECK_THROWS_AS(build_store(samples, outputs, cfg.functions, cfg), ConfigError);
  outputs = fixture::ten_outputs();
  std::vector<FunctionId> residual = {FunctionId::Residual};
  CHECK_THROWS_AS(build_store(samples, outputs, residual, cfg), ConfigError);
}

TEST_CASE("subset size rule") {
  std::mt19937_64 rng(1);
  auto small = random_store(rng, 150, 2, 3);
  std::vector<double> q{0.0, 0.0};
  CHECK(select_subset(small, q).indices.size() == 150);
  auto big = random_store(rng, 400, 2, 3);
  CHECK(select_subset(big, q, 0.5, 200).indices.size() == 200);
  CHECK(select_subset(big, q, 0.33, 200).indices.size() == 132);
  std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(select_subset(big, wrong), InputError);
}

TEST_CASE("a test vector equal to a calibration vector comes first") {
  const auto store = fixture::ten_store();
  const auto s = select_subset(store, store.raw_features()[6]);
  CHECK(s.indices.front() == 6);
  CHECK(s.distances.front() == 0.0);
}

TEST_CASE("subset matches a brute-force full sort") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> sizes(5, 50);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int t = 0; t < 60; ++t) {
    const auto n = static_cast<std::size_t>(sizes(rng));
    auto store = random_store(rng, n, 3, 3);
    FeatureVector q(3);
    for (auto& v : q) v = std::round(g(rng) * 2.0) / 2.0;
    const double fraction = 0.5;
    const int threshold = 10;  // small enough that most stores get trimmed
    const auto got = select_subset(store, q, fraction, threshold);

    const auto zq = store.normalize(q);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j) s += (store.features()[i][j] - zq[j]) * (store.features()[i][j] - zq[j]);
      all.push_back({std::sqrt(s), i});
    }
    std::sort(all.begin(), all.end());
    const std::size_t keep = n < 10 ? n : static_cast<std::size_t>(std::ceil(fraction * n));
    REQUIRE(got.indices.size() == keep);
    for (std::size_t k = 0; k < keep; ++k) {
      CHECK(got.indices[k] == all[k].second);
      CHECK(got.distances[k] == doctest::Approx(all[k].first).epsilon(1e-12));
      if (k > 0) CHECK(got.distances[k - 1] <= got.distances[k]);
    }
  }
}

TEST_CASE("weights") {
  WeightedSubset s;
  s.indices = {0, 1, 2};
  s.distances = {0.0, std::sqrt(500.0), 30.0};
  const auto w = compute_weights(s, 500.0);
  CHECK(w.weights[0] == 1.0);
  CHECK(w.weights[1] == doctest::Approx(0.367879441171).epsilon(1e-10));
  CHECK(w.weights[1] > w.weights[2]);
  CHECK(w.weights[2] > 0.0);
  CHECK_THROWS_AS(compute_weights(s, 0.0), ConfigError);

  const auto flat = compute_weights(s, 1e12);
  for (double v : flat.weights) CHECK(std::abs(v - 1.0) < 1e-6);
}

TEST_CASE("adjusted scores multiply stored scores by the weights") {
  const auto store = fixture::ten_store();
  auto subset = compute_weights(select_subset(store, store.raw_features()[0]), 500.0);
  const auto adj = adjusted_scores(store, subset, FunctionId::Lac);
  REQUIRE(adj.size() == subset.indices.size());
  for (std::size_t k = 0; k < adj.size(); ++k) {
    const auto i = subset.indices[k];
    CHECK(adj[k].label == store.labels()[i]);
    CHECK(adj[k].score == subset.weights[k] * store.scores(FunctionId::Lac)[i]);
  }
  WeightedSubset half;
  half.indices = {0};
  half.distances = {1.0};
  half.weights = {0.5};
  // stored LAC of sample 0 is 0.1
  CHECK(adjusted_scores(store, half, FunctionId::Lac)[0].score == doctest::Approx(0.05));
  half.weights.clear();
  CHECK_THROWS_AS(adjusted_scores(store, half, FunctionId::Lac), InternalError);
}

TEST_CASE("store round trip is byte stable") {
  testutil::TempDir dir("store");
  const auto store = fixture::ten_store();
  save_store(store, dir / "a.json");
  const auto back = load_store(dir / "a.json");
  CHECK(back.labels() == store.labels());
  CHECK(back.features() == store.features());
  CHECK(back.scores(FunctionId::Raps) == store.scores(FunctionId::Raps));
  CHECK(back.config() == store.config());
  save_store(back, dir / "b.json");

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  const auto rebuilt = fixture::ten_store();
  save_store(rebuilt, dir / "c.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "c.json"));
}

TEST_CASE("corrupt store files are configuration errors") {
  testutil::TempDir dir("corrupt");
  {
    std::ofstream out(dir / "bad.json");
    out << "{\"format\": \"something else\"}";
  }
  CHECK_THROWS_AS(load_store(dir / "bad.json"), ConfigError);
  {
    std::ofstream out(dir / "trunc.json");
    out << "{\"format\": ";
  }
  CHECK_THROWS_AS(load_store(dir / "trunc.json"), ConfigError);
  CHECK_THROWS(load_store(dir / "missing.json"));
}

TEST_CASE("regression functions substitute the default list") {
  DetectorConfig cfg;
  CHECK(functions_for(cfg, TaskKind::Regression) == std::vector<FunctionId>{FunctionId::Residual});
  CHECK(functions_for(cfg, TaskKind::Classification) == cfg.functions);
}
