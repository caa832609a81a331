#include "ostk/scene.hpp"

#include <sstream>

namespace ostk {

const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::pedestrian: return "pedestrian";
    case AgentKind::vehicle: return "vehicle";
    case AgentKind::robot: return "robot";
  }
  return "unknown";
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "pedestrian") return AgentKind::pedestrian;
  if (s == "vehicle") return AgentKind::vehicle;
  if (s == "robot") return AgentKind::robot;
  throw Error(ErrorKind::schema, "unknown agent kind '" + s + "'");
}

CameraMatrix CameraTruth::matrix_at(Frame f) const {
  if (f < 0 || f >= static_cast<Frame>(extrinsics.size())) {
    throw Error(ErrorKind::range, "frame outside camera extrinsics", {f});
  }
  return compose_camera_matrix(scale, intrinsics, extrinsics[static_cast<std::size_t>(f)]);
}

CameraMatrixSequence CameraTruth::sequence(const TimeWindow& window) const {
  window.validate();
  CameraMatrixSequence seq{window, {}};
  seq.matrices.reserve(static_cast<std::size_t>(window.observation_span()));
  for (Frame f = window.obs_begin; f < window.obs_end; ++f) seq.matrices.push_back(matrix_at(f));
  return seq;
}

const AgentRecord& Scene::agent(const std::string& id) const {
  for (const auto& a : agents) {
    if (a.agent_id == id) return a;
  }
  throw Error(ErrorKind::validation, "no agent '" + id + "' in scene " + scene_id);
}

void Scene::validate() const {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::validation, "scene " + scene_id + ": " + msg);
  };
  if (!(frame_hz > 0.0)) fail("frame_hz must be positive");
  if (frame_count <= 0) fail("frame_count must be positive");
  if (image_width <= 0 || image_height <= 0) fail("image size must be positive");
  std::set<std::string> ids;
  for (const auto& a : agents) {
    if (!ids.insert(a.agent_id).second) fail("duplicate agent_id '" + a.agent_id + "'");
    auto in_range = [&](Frame b, Frame e) { return b >= 0 && e <= frame_count; };
    const auto& s = a.sensor_noisy;
    if (!in_range(s.first_frame(), s.end_frame())) fail("agent " + a.agent_id + " sensor outside frame range");
    if (a.sensor_clean && (a.sensor_clean->first_frame() != s.first_frame() || a.sensor_clean->size() != s.size())) {
      fail("agent " + a.agent_id + " clean and noisy sensor frames differ");
    }
    for (const auto* v : {&a.visual, &a.visual_gt_hidden}) {
      if (*v && ((*v)->first_frame() < s.first_frame() || (*v)->end_frame() > s.end_frame())) {
        fail("agent " + a.agent_id + " visual frames are not a subset of sensor frames");
      }
    }
  }
  if (camera_truth) {
    if (static_cast<Frame>(camera_truth->extrinsics.size()) != frame_count) {
      fail("camera extrinsics count differs from frame_count");
    }
    camera_truth->intrinsics.validate();
    for (const auto& e : camera_truth->extrinsics) e.validate();
    if (!(camera_truth->scale > 0.0)) fail("camera scale must be positive");
  }
}

SightMask sight_partition(const Scene& scene, const TimeWindow& window) {
  window.validate();
  if (window.pred_end > scene.frame_count) {
    std::ostringstream os;
    os << "window (" << window.obs_begin << "," << window.obs_end << "," << window.pred_end
       << ") exceeds scene frame range [0," << scene.frame_count << ")";
    throw Error(ErrorKind::range, os.str());
  }
  SightMask mask;
  for (const auto& a : scene.agents) {
    const bool visible = a.visual && a.visual->fully_present(window.obs_begin, window.obs_end);
    (visible ? mask.in_sight : mask.out_of_sight).insert(a.agent_id);
  }
  return mask;
}

}  // namespace ostk
