#include <doctest.h>

#include <fstream>

#include "driftcp/config.hpp"
#include "driftcp/errors.hpp"
#include "helpers.hpp"

using namespace driftcp;

TEST_CASE("defaults") {
  DetectorConfig c;
  CHECK(c.epsilon == 0.1);
  CHECK(c.tau == 500.0);
  CHECK(c.subset_fraction == 0.5);
  CHECK(c.small_threshold == 200);
  CHECK(c.gaussian_c == 3.0);
  CHECK(c.raps_lambda == 0.01);
  CHECK(c.raps_k_reg == 1);
  CHECK(c.knn_k == 3);
  CHECK(c.k_min == 2);
  CHECK(c.k_max == 20);
  CHECK(c.gap_B == 10);
  CHECK(c.functions.size() == 4);
  CHECK(c.normalize);
  CHECK(c.coverage_repeats == 3);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("validation") {
  auto bad = [](auto mutate) {
    DetectorConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](auto& c) { c.epsilon = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.epsilon = 1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.tau = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.subset_fraction = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.gaussian_c = -1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.k_min = 5; c.k_max = 3; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.functions.clear(); }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.functions = {FunctionId::Lac, FunctionId::Residual}; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(bad([](auto& c) { c.functions = {FunctionId::Lac, FunctionId::Lac}; }).validate(),
                  ConfigError);
}

TEST_CASE("flat json form") {
  DetectorConfig c;
  c.epsilon = 0.2;
  c.k_max = 7;
  c.functions = {FunctionId::Aps, FunctionId::Lac};
  const auto j = to_json(c);
  CHECK(j["k_range"] == nlohmann::json::array({2, 7}));
  CHECK(j["functions"] == nlohmann::json::array({"aps", "lac"}));
  CHECK(config_from_json(j) == c);

  const auto partial = config_from_json(nlohmann::json::parse(R"({"epsilon": 0.05})"));
  CHECK(partial.epsilon == 0.05);
  CHECK(partial.tau == 500.0);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"epsilom": 0.05})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"tau": "big"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"k_range": [2]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"functions": ["svm"]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("config files") {
  testutil::TempDir dir("config");
  DetectorConfig c;
  c.seed = 17;
  save_config(c, dir / "c.json");
  CHECK(load_config(dir / "c.json") == c);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
}
