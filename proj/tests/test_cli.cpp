#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "driftcp/cli.hpp"
#include "driftcp/errors.hpp"
#include "driftcp/harness.hpp"
#include "driftcp/jsonl.hpp"
#include "helpers.hpp"

using namespace driftcp;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "driftcp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Calibration and test files from a small benchmark, with model outputs.
struct Files {
  testutil::TempDir dir{"cli"};
  std::filesystem::path cal = dir / "cal.jsonl";
  std::filesystem::path test = dir / "test.jsonl";
  std::filesystem::path truth = dir / "truth.jsonl";
  std::filesystem::path store = dir / "store.json";

  Files() {
    BenchmarkParams bp;
    bp.classes = 3;
    bp.n_per_class = 1000;
    bp.test_per_class = 20;
    const auto bench = generate_benchmark(bp);
    const auto model = train_reference_classifier(bench.training);
    std::ofstream c(cal), t(test), u(truth);
    for (const auto& s : bench.calibration) {
      write_json_line(c, to_json(Record{0, s, model.predict(s.features)}));
    }
    for (const auto& s : bench.drifted) {
      Record r{0, s, model.predict(s.features)};
      r.sample.label.reset();
      write_json_line(t, to_json(r));
      write_json_line(u, to_json(Record{0, s, model.predict(s.features)}));
    }
  }
};

}  // namespace

TEST_CASE("record parsing") {
  const auto r = record_from_json(nlohmann::json::parse(R"({"id":"a","features":[1,2],"label":1,"proba":[0.2,0.8],"extra":5})"));
  CHECK(r.sample.id == "a");
  CHECK(*r.sample.label == 1);
  CHECK(r.output->predicted_label() == 1);

  std::istringstream in("{\"id\":\"a\",\"features\":[1],\"target\":2.0,\"pred\":1.5}\n\n"
                        "{\"id\":\"b\",\"features\":[2]}\n");
  const auto recs = read_records(in, "mem");
  CHECK(recs.size() == 2);
  CHECK(recs[1].line == 3);
  CHECK_FALSE(recs[1].output);

  std::istringstream both("{\"id\":\"a\",\"features\":[1]}\n{\"id\":\"b\",\"features\":[1],\"label\":0,\"target\":1}\n");
  try {
    read_records(both, "f.jsonl");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("f.jsonl:2:") == 0);
  }
  std::istringstream garbage("{oops\n");
  CHECK_THROWS_AS(read_records(garbage, "g"), InputError);
  std::istringstream noid("{\"features\":[1]}\n");
  CHECK_THROWS_AS(read_records(noid, "g"), InputError);
  std::istringstream badproba("{\"id\":\"a\",\"features\":[1],\"proba\":[0.9,0.9]}\n");
  CHECK_THROWS_AS(read_records(badproba, "g"), InputError);
}

TEST_CASE("calibrate, detect, evaluate, triage") {
  Files f;
  auto cal = run({"calibrate", f.cal.string(), "--store", f.store.string()});
  REQUIRE(cal.code == 0);
  const auto summary = nlohmann::json::parse(cal.out);
  CHECK(summary["n"] == 300);
  CHECK(summary["task"] == "classification");
  CHECK(summary["functions"].size() == 4);

  const auto first = slurp(f.store);
  REQUIRE(run({"calibrate", f.cal.string(), "--store", f.store.string()}).code == 0);
  CHECK(slurp(f.store) == first);

  auto check = run({"check", "--store", f.store.string()});
  CHECK(check.code == 0);
  CHECK(nlohmann::json::parse(check.out)["coverage"].size() == 3);

  const auto assessments = f.dir / "a.jsonl";
  auto det = run({"detect", f.test.string(), "--store", f.store.string(), "--output", assessments.string()});
  REQUIRE(det.code == 0);
  const auto lines = read_assessments(assessments);
  CHECK(lines.size() == 60);
  CHECK(lines.front().id == "drift-00000");
  CHECK(lines.back().id == "drift-00059");
  // byte-identical on rerun
  auto det2 = run({"detect", f.test.string(), "--store", f.store.string()});
  CHECK(det2.out == slurp(assessments));

  auto ev = run({"evaluate", assessments.string(), f.truth.string()});
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(ev.out);
  CHECK(metrics["tp"].get<int>() + metrics["fp"].get<int>() + metrics["fn"].get<int>() +
            metrics["tn"].get<int>() == 60);

  auto tri = run({"triage", assessments.string()});
  REQUIRE(tri.code == 0);
  CHECK(nlohmann::json::parse(tri.out).is_array());
}

TEST_CASE("duplicate of a calibration record is accepted") {
  Files f;
  REQUIRE(run({"calibrate", f.cal.string(), "--store", f.store.string()}).code == 0);
  // take a calibration line, find one that the model got right
  std::ifstream in(f.cal);
  std::string line;
  std::string chosen;
  while (std::getline(in, line)) {
    auto r = record_from_json(nlohmann::json::parse(line));
    if (r.output->predicted_label() == *r.sample.label && r.output->proba()[*r.sample.label] > 0.99) {
      chosen = line;
      break;
    }
  }
  REQUIRE_FALSE(chosen.empty());
  write(f.dir / "dup.jsonl", chosen + "\n");
  auto det = run({"detect", (f.dir / "dup.jsonl").string(), "--store", f.store.string()});
  REQUIRE(det.code == 0);
  CHECK(nlohmann::json::parse(det.out)["drifting"] == false);
}

TEST_CASE("exit codes") {
  Files f;
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"calibrate", (f.dir / "nope.jsonl").string(), "--store", f.store.string()}).code == 2);

  write(f.dir / "both.jsonl", "{\"id\":\"x\",\"features\":[1,2],\"label\":0,\"target\":1.0,\"proba\":[1,0]}\n");
  auto both = run({"calibrate", (f.dir / "both.jsonl").string(), "--store", f.store.string()});
  CHECK(both.code == 2);
  CHECK(both.err.find(":1:") != std::string::npos);

  write(f.dir / "corrupt.json", "{\"schema_version\": 1");
  CHECK(run({"check", "--store", (f.dir / "corrupt.json").string()}).code == 2);
  CHECK(run({"detect", f.test.string()}).code == 2);  // no store

  REQUIRE(run({"calibrate", f.cal.string(), "--store", f.store.string()}).code == 0);
  write(f.dir / "empty.jsonl", "");
  auto empty = run({"detect", (f.dir / "empty.jsonl").string(), "--store", f.store.string()});
  CHECK(empty.code == 0);
  CHECK(empty.out.empty());
  CHECK(run({"evaluate", (f.dir / "empty.jsonl").string(), (f.dir / "empty.jsonl").string()}).code == 2);

  CHECK(run({"check", "--store", f.store.string(), "--epsilon", "1.5"}).code == 2);
  write(f.dir / "cfg.json", "{\"unknown\": 1}");
  CHECK(run({"check", "--store", f.store.string(), "--config", (f.dir / "cfg.json").string()}).code == 2);
}

TEST_CASE("evaluate fixture and id checks") {
  testutil::TempDir dir("eval");
  std::ofstream a(dir / "a.jsonl"), t(dir / "t.jsonl");
  for (int i = 0; i < 100; ++i) {
    const bool wrong = i < 10;
    const bool flagged = (wrong && i < 8) || (!wrong && i < 15);
    DriftAssessment as;
    as.id = "s" + std::to_string(i);
    as.drifting = flagged;
    write_json_line(a, to_json(as));
    write_json_line(t, {{"id", as.id}, {"mispredicted", wrong}});
  }
  a.close();
  t.close();
  auto ev = run({"evaluate", (dir / "a.jsonl").string(), (dir / "t.jsonl").string()});
  REQUIRE(ev.code == 0);
  const auto m = nlohmann::json::parse(ev.out);
  CHECK(m["recall"].get<double>() == doctest::Approx(0.8));
  CHECK(m["precision"].get<double>() == doctest::Approx(0.6154).epsilon(1e-4));

  write(dir / "other.jsonl", "{\"id\":\"zzz\",\"mispredicted\":true}\n");
  write(dir / "one.jsonl", "{\"id\":\"s0\",\"drifting\":true,\"verdicts\":[]}\n");
  CHECK(run({"evaluate", (dir / "one.jsonl").string(), (dir / "other.jsonl").string()}).code == 2);
}

TEST_CASE("coverage alert exits 3 on a permuted-label store") {
  Files f;
  std::ifstream in(f.cal);
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  std::vector<int> labels;
  for (const auto& r : rows) labels.push_back(r["label"].get<int>());
  std::mt19937_64 rng(3);
  std::shuffle(labels.begin(), labels.end(), rng);
  {
    std::ofstream out(f.dir / "perm.jsonl");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i]["label"] = labels[i];
      write_json_line(out, rows[i]);
    }
  }
  REQUIRE(run({"calibrate", (f.dir / "perm.jsonl").string(), "--store", f.store.string()}).code == 0);
  auto check = run({"check", "--store", f.store.string()});
  CHECK(check.code == 3);
  CHECK(nlohmann::json::parse(check.out)["alert"] == true);
}

TEST_CASE("grid search persists the chosen config") {
  Files f;
  write(f.dir / "grid.json", R"({"epsilon": [0.1, 0.99]})");
  auto r = run({"calibrate", f.cal.string(), "--store", f.store.string(), "--grid", (f.dir / "grid.json").string(),
                "--save-config", (f.dir / "chosen.json").string()});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["grid"]["candidates"] == 2);
  CHECK(load_config(f.dir / "chosen.json").epsilon == 0.1);
}

TEST_CASE("demo is deterministic") {
  auto a = run({"demo", "--seed", "0"});
  auto b = run({"demo", "--seed", "0"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto report = nlohmann::json::parse(a.out);
  CHECK(report["before"]["in_distribution"]["model_accuracy"].get<double>() -
            report["before"]["drifted"]["model_accuracy"].get<double>() >= 0.2);
  CHECK(report["drifted_accuracy_gain"].get<double>() ==
        doctest::Approx(report["after"]["drifted"]["model_accuracy"].get<double>() -
                        report["before"]["drifted"]["model_accuracy"].get<double>()));
  CHECK(report["triage"]["selected"].size() <= report["triage"]["flagged"].get<std::size_t>());

  auto calm = run({"demo", "--seed", "0", "--drift-shift", "0"});
  REQUIRE(calm.code == 0);
  const auto c = nlohmann::json::parse(calm.out);
  CHECK(c["before"]["drifted"]["flagged_fraction"].get<double>() <= 0.1 + 0.05);
}
