#pragma once

// Agents, scenes and the per-window in-sight / out-of-sight partition.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ostk/camera_geometry.hpp"
#include "ostk/trajectory.hpp"

namespace ostk {

enum class AgentKind { pedestrian, vehicle, robot };
const char* to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

struct AgentRecord {
  std::string agent_id;
  AgentKind kind = AgentKind::pedestrian;
  SensorTrajectory sensor_noisy;
  std::optional<SensorTrajectory> sensor_clean;
  std::optional<VisualTrajectory> visual;
  /// Visual ground truth without field-of-view masking: the simulator's
  /// projection of the clean path, or a dataset's held-out visual column.
  std::optional<VisualTrajectory> visual_gt_hidden;

  bool operator==(const AgentRecord&) const = default;
};

struct CameraTruth {
  CameraIntrinsics intrinsics;
  std::vector<CameraExtrinsics> extrinsics;  // one per scene frame
  double scale = 1.0;

  CameraMatrix matrix_at(Frame f) const;
  CameraMatrixSequence sequence(const TimeWindow& window) const;

  bool operator==(const CameraTruth&) const = default;
};

struct Scene {
  std::string scene_id;
  double frame_hz = 10.0;
  Frame frame_count = 0;
  int image_width = 1920;
  int image_height = 1080;
  std::vector<AgentRecord> agents;
  std::optional<CameraTruth> camera_truth;

  const AgentRecord& agent(const std::string& id) const;
  /// Checks every cross-field invariant; throws a validation error naming the
  /// first violation.
  void validate() const;

  bool operator==(const Scene&) const = default;
};

struct SightMask {
  std::set<std::string> in_sight;
  std::set<std::string> out_of_sight;

  bool operator==(const SightMask&) const = default;
};

/// An agent is in sight for the window when its visual track is present for
/// every observation frame; all other agents are out of sight.
SightMask sight_partition(const Scene& scene, const TimeWindow& window);

}  // namespace ostk
