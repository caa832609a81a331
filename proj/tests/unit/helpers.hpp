#pragma once

#include <doctest.h>

#include <functional>
#include <string>
#include <vector>

#include "ostk/error.hpp"
#include "ostk/scene_simulator.hpp"

namespace testutil {

// Asserts that f throws ostk::Error of the given kind.
inline void expect_kind(ostk::ErrorKind kind, const std::function<void()>& f) {
  bool threw = false;
  try {
    f();
  } catch (const ostk::Error& e) {
    threw = true;
    CHECK_MESSAGE(e.kind() == kind, "got " << ostk::to_string(e.kind()) << ": " << e.what());
  }
  CHECK_MESSAGE(threw, "expected " << ostk::to_string(kind) << " error");
}

inline ostk::SensorTrajectory sensor_line(ostk::Frame first, int n, Eigen::Vector3d p0, Eigen::Vector3d v,
                                          ostk::Provenance prov = ostk::Provenance::clean) {
  std::vector<ostk::WorldPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(ostk::WorldPoint::from(p0 + v * i));
  return {first, pts, prov};
}

inline ostk::VisualTrajectory pixels(ostk::Frame first, std::vector<ostk::PixelPoint> pts) {
  return ostk::VisualTrajectory::dense(first, pts);
}

// Zero-noise, stationary camera, constant-depth linear motion: every
// quantity in the pipeline is exact.
inline ostk::SimConfig exact_config() {
  ostk::SimConfig c;
  c.agent_count = 8;
  c.motion = ostk::MotionKind::lateral;
  c.camera_mode = ostk::CameraMode::stationary;
  c.noise.sigma_xy = 0.0;
  c.noise.sigma_z = 0.0;
  c.noise.drift_step_sigma = 0.0;
  return c;
}

}  // namespace testutil
