#include "helpers.hpp"

#include "ostk/scene.hpp"

using namespace ostk;
using testutil::expect_kind;

namespace {

AgentRecord agent(const std::string& id, std::vector<std::optional<PixelPoint>> visual) {
  const int n = static_cast<int>(visual.size());
  AgentRecord a{id, AgentKind::pedestrian,
                testutil::sensor_line(0, n, {0, 0, 5}, {0.1, 0, 0}, Provenance::noisy),
                std::nullopt, VisualTrajectory(0, std::move(visual)), std::nullopt};
  return a;
}

Scene two_agent_scene(bool gap) {
  std::vector<std::optional<PixelPoint>> full(10, PixelPoint{1, 2});
  auto partial = full;
  if (gap) partial[4] = std::nullopt;
  Scene s;
  s.scene_id = "s";
  s.frame_count = 10;
  s.agents = {agent("a", full), agent("b", partial)};
  return s;
}

}  // namespace

TEST_CASE("sight_partition with full coverage leaves nobody out of sight") {
  const auto mask = sight_partition(two_agent_scene(false), TimeWindow::make(0, 8, 10));
  CHECK(mask.out_of_sight.empty());
  CHECK(mask.in_sight == std::set<std::string>{"a", "b"});
}

TEST_CASE("one absent frame in the window puts the agent out of sight") {
  const auto mask = sight_partition(two_agent_scene(true), TimeWindow::make(0, 8, 10));
  CHECK(mask.out_of_sight == std::set<std::string>{"b"});
  CHECK(mask.in_sight == std::set<std::string>{"a"});
  // the gap at frame 4 is outside this window
  const auto late = sight_partition(two_agent_scene(true), TimeWindow::make(5, 8, 10));
  CHECK(late.out_of_sight.empty());
}

TEST_CASE("sight_partition ignores agent order and is idempotent") {
  auto s = two_agent_scene(true);
  const auto w = TimeWindow::make(0, 8, 10);
  const auto m1 = sight_partition(s, w);
  std::swap(s.agents[0], s.agents[1]);
  CHECK(sight_partition(s, w) == m1);
  CHECK(sight_partition(s, w) == m1);
}

TEST_CASE("sight_partition rejects windows outside the scene") {
  expect_kind(ErrorKind::range, [] { sight_partition(two_agent_scene(false), TimeWindow::make(0, 8, 12)); });
}

TEST_CASE("simulated agent behind the camera is out of sight") {
  SimConfig c;
  c.agent_count = 6;
  c.out_of_sight_count = 2;
  const Scene s = generate_scene(c, 11);
  const auto w = TimeWindow::make(0, 100, 200);
  const auto mask = sight_partition(s, w);
  const auto k = simulated_intrinsics(c);
  const auto& rt = s.camera_truth->extrinsics[0];
  // place a probe 5 m behind the camera centre and check the geometric oracle
  const Eigen::Vector3d centre = -rt.rotation.transpose() * rt.translation;
  const Eigen::Vector3d axis = rt.rotation.row(2).transpose();
  const WorldPoint behind = WorldPoint::from(centre - 5.0 * axis);
  CHECK_FALSE(classify_sight(behind, k, rt, c.image_width, c.image_height, c.fov_degrees));
  CHECK(mask.out_of_sight.size() == 2);
  for (const auto& id : mask.out_of_sight) {
    const auto& a = s.agent(id);
    for (Frame f = 0; f < 100; ++f)
      CHECK_FALSE(classify_sight(a.sensor_clean->at_frame(f), k, s.camera_truth->extrinsics[f], c.image_width,
                                 c.image_height, c.fov_degrees));
  }
}

TEST_CASE("slice_window observation and prediction spans") {
  const auto t = testutil::sensor_line(0, 200, {0, 0, 0}, {1, 0, 0});
  const auto w = TimeWindow::make(0, 100, 200);
  const auto obs = slice_window(t, w, Segment::observation);
  const auto pred = slice_window(t, w, Segment::prediction);
  CHECK(obs.first_frame() == 0);
  CHECK(obs.size() == 100);
  CHECK(pred.first_frame() == 100);
  CHECK(pred.size() == 100);
  CHECK(obs.points()[99].x == 99.0);
  CHECK(pred.points()[0].x == 100.0);
  // union reconstructs [t_s, t_p)
  std::vector<WorldPoint> joined(obs.points().begin(), obs.points().end());
  joined.insert(joined.end(), pred.points().begin(), pred.points().end());
  CHECK(SensorTrajectory(0, joined, Provenance::clean) == t);
}

TEST_CASE("slice_window reports the missing frames") {
  const auto t = testutil::sensor_line(0, 150, {0, 0, 0}, {1, 0, 0});
  try {
    slice_window(t, TimeWindow::make(0, 100, 200), Segment::prediction);
    FAIL("expected coverage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::coverage);
    REQUIRE(e.frames().size() == 50);
    CHECK(e.frames().front() == 150);
    CHECK(e.frames().back() == 199);
  }
}

TEST_CASE("slice_window on visual tracks keeps absent markers") {
  std::vector<std::optional<PixelPoint>> v(20, PixelPoint{1, 1});
  v[15] = std::nullopt;
  const VisualTrajectory t(0, v);
  const auto pred = slice_window(t, TimeWindow::make(0, 10, 20), Segment::prediction);
  CHECK(pred.size() == 10);
  CHECK_FALSE(pred.samples()[5].has_value());
}

TEST_CASE("time window invariants") {
  expect_kind(ErrorKind::validation, [] { TimeWindow::make(5, 5, 10); });
  expect_kind(ErrorKind::validation, [] { TimeWindow::make(5, 10, 9); });
  const auto w = TimeWindow::make(0, 100, 200);
  CHECK(w.observation_span() == 100);
  CHECK(w.prediction_span() == 100);
}

TEST_CASE("trajectories reject non-contiguous or empty data") {
  expect_kind(ErrorKind::validation, [] { SensorTrajectory(0, {}, Provenance::clean); });
  expect_kind(ErrorKind::validation, [] {
    SensorTrajectory(0, {WorldPoint{0, std::nan(""), 0}}, Provenance::clean);
  });
}
