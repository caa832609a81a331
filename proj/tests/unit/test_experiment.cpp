#include "helpers.hpp"

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "ostk/experiment.hpp"

using namespace ostk;
using testutil::expect_kind;

namespace {

// Small enough to run in a few seconds: short scenes and windows, a handful of
// training epochs.
Json tiny_config() {
  return Json::parse(R"({
    "seed": 5,
    "scenes": {"simulate": [{"count": 10, "config": {"frame_count": 40, "agent_count": 8, "motion": "lateral"}}]},
    "window": [0, 25, 40],
    "estimator": {"mode": "stationary"},
    "split": {"train": 0.6, "validation": 0.2, "test": 0.2},
    "train": {"epochs": 3, "batch": 4},
    "denoiser_arch": {"context_radius": 2, "hidden": 4},
    "predictor_arch": {"hidden": 4},
    "methods": [
      {"name": "vpd", "pipeline": "vpd", "denoiser": "model", "predictor": "model"},
      {"name": "two_stage_kalman_cv", "pipeline": "two_stage", "denoiser": "kalman", "predictor": "cv"}
    ]
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("missing predictor is a config error") {
  Json j = tiny_config();
  j["methods"][0].erase("predictor");
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
}

TEST_CASE("config validation catches bad values") {
  Json j = tiny_config();
  j["split"]["test"] = 0.3;
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
  j = tiny_config();
  j["scenes"] = Json::object();
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
  j = tiny_config();
  j["methods"][1]["denoiser"] = "wavelet";
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
  j = tiny_config();
  j["bogus"] = 1;
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
}

TEST_CASE("config round-trips through json") {
  const auto cfg = experiment_config_from_json(tiny_config());
  const auto again = experiment_config_from_json(to_json(cfg));
  CHECK(dump_json(to_json(again)) == dump_json(to_json(cfg)));
  CHECK(config_fingerprint(again) == config_fingerprint(cfg));
}

TEST_CASE("fingerprint changes with every config field") {
  const auto base = config_fingerprint(experiment_config_from_json(tiny_config()));
  std::vector<std::function<void(Json&)>> edits = {
      [](Json& j) { j["seed"] = 6; },
      [](Json& j) { j["window"] = {0, 24, 40}; },
      [](Json& j) { j["estimator"]["window_radius"] = 3; },
      [](Json& j) { j["train"]["epochs"] = 4; },
      [](Json& j) { j["split"] = {{"train", 0.5}, {"validation", 0.3}, {"test", 0.2}}; },
      [](Json& j) { j["scenes"]["simulate"][0]["count"] = 11; },
      [](Json& j) { j["scenes"]["simulate"][0]["config"]["noise"] = {{"sigma_xy", 1.0}}; },
      [](Json& j) { j["kalman"] = {{"process_accel_sigma", 0.05}}; },
      [](Json& j) { j["methods"][1]["predictor"] = "model"; },
      [](Json& j) { j["denoiser_arch"]["hidden"] = 5; },
  };
  std::set<std::string> seen{base};
  for (const auto& edit : edits) {
    Json j = tiny_config();
    edit(j);
    const auto fp = config_fingerprint(experiment_config_from_json(j));
    CHECK(fp != base);
    seen.insert(fp);
  }
  CHECK(seen.size() == edits.size() + 1);
}

TEST_CASE("split is disjoint, complete and seeded") {
  const auto s = split_scenes(200, {0.5, 0.4, 0.1}, 3);
  CHECK(s.train.size() == 100);
  CHECK(s.validation.size() == 80);
  CHECK(s.test.size() == 20);
  std::set<std::size_t> all;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    all.insert(part->begin(), part->end());
  }
  CHECK(all.size() == 200);
  const auto again = split_scenes(200, {0.5, 0.4, 0.1}, 3);
  CHECK(again.test == s.test);
  CHECK(split_scenes(200, {0.5, 0.4, 0.1}, 4).test != s.test);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::count(hits.begin(), hits.end(), 1) == 100);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw Error(ErrorKind::pipeline, "fail " + std::to_string(i));
    });
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "fail 7");
  }
}

TEST_CASE("benchmark runs are byte-identical across runs and thread counts") {
  const auto cfg = experiment_config_from_json(tiny_config());
  const auto a = run_benchmark(cfg, 1);
  const auto b = run_benchmark(cfg, 4);
  CHECK_FALSE(a.has_fatal());
  REQUIRE(a.reports.size() == 2);
  CHECK(a.reports[0].sum == a.reports[0].mse_d + a.reports[0].mse_p);
  const auto root = std::filesystem::temp_directory_path() / "ostk_unit_bench";
  std::filesystem::remove_all(root);
  write_benchmark(a, cfg, root / "a");
  write_benchmark(b, cfg, root / "b");
  const auto ta = tree(root / "a"), tb = tree(root / "b");
  CHECK(ta.size() >= 8);
  CHECK(ta == tb);
  CHECK(ta.count("comparison.csv") == 1);
  CHECK(ta.count("failures.json") == 1);
}

TEST_CASE("benchmark with exact scenes gives zero error for identity and cv") {
  Json j = tiny_config();
  j["scenes"]["simulate"][0]["config"] = {{"frame_count", 40}, {"agent_count", 8}, {"motion", "lateral"},
                                          {"noise", {{"sigma_xy", 0}, {"sigma_z", 0}, {"drift_step_sigma", 0}}}};
  j["matrices"] = "oracle";
  j["methods"] = Json::parse(R"([{"name": "identity_cv", "denoiser": "identity", "predictor": "cv"}])");
  const auto r = run_benchmark(experiment_config_from_json(j), 2);
  REQUIRE(r.reports.size() == 1);
  CHECK(r.reports[0].sum <= 1e-6);
  CHECK(r.failures.empty());
}

TEST_CASE("scene files are loaded relative to the config") {
  const auto dir = std::filesystem::temp_directory_path() / "ostk_unit_files";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "scenes");
  SimConfig c;
  c.frame_count = 40;
  c.agent_count = 6;
  for (int i = 0; i < 3; ++i) write_scene(generate_scene(c, 100 + i), dir / "scenes" / ("s" + std::to_string(i) + ".json"));
  Json j = tiny_config();
  j["scenes"] = {{"files", {"scenes/*.json"}}};
  const auto cfg = experiment_config_from_json(j, dir);
  const auto scenes = load_scenes(cfg);
  REQUIRE(scenes.size() == 3);
  CHECK(scenes[0] == generate_scene(c, 100));
}

TEST_CASE("single-scene configs may omit scenes and methods") {
  const Json j = Json::parse(R"({"window": [0, 20, 30], "estimator": {"refine": "geometric"}})");
  const auto c = experiment_config_from_json(j, {}, false);
  CHECK(c.window == TimeWindow::make(0, 20, 30));
  CHECK(c.estimator.refine == Refinement::geometric);
  CHECK(c.methods.empty());
  expect_kind(ErrorKind::config, [&] { experiment_config_from_json(j); });
  expect_kind(ErrorKind::config,
              [] { experiment_config_from_json(Json::parse(R"({"windw": [0, 20, 30]})"), {}, false); });
}
