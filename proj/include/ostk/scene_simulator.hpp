#pragma once

// Deterministic synthetic scenes: agent paths, ego-camera motion, field-of-view
// visibility and sensor noise.

#include <cstdint>
#include <vector>

#include "ostk/scene.hpp"

namespace ostk {

enum class NoiseKind { gaussian_gps, odometer_drift, composite };
/// lateral: constant velocity along the camera's horizontal image axis at
/// frame 0, so depth stays fixed and a stationary camera sees exactly linear
/// pixel motion.
enum class MotionKind { constant_velocity, waypoint, mixed, lateral };
enum class CameraMode { stationary, translating, orbiting };

const char* to_string(NoiseKind k);
const char* to_string(MotionKind k);
const char* to_string(CameraMode k);
NoiseKind noise_kind_from_string(const std::string& s);
MotionKind motion_kind_from_string(const std::string& s);
CameraMode camera_mode_from_string(const std::string& s);

/// Sensor error model. GPS-style error is i.i.d. Gaussian per frame; odometer
/// drift is a per-axis random walk; composite applies both.
struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian_gps;
  double sigma_xy = 2.0;
  double sigma_z = 0.2;
  double drift_step_sigma = 0.05;

  void validate() const;
  bool operator==(const NoiseModel&) const = default;
};

struct SimConfig {
  int agent_count = 20;
  Frame frame_count = 200;
  double frame_hz = 10.0;
  MotionKind motion = MotionKind::mixed;
  CameraMode camera_mode = CameraMode::stationary;
  double fov_degrees = 72.0;
  int image_width = 1920;
  int image_height = 1080;
  NoiseModel noise;
  int out_of_sight_count = 2;
  /// Gaussian pixel noise on observed visual samples. Hidden ground truth is
  /// never perturbed.
  double pixel_noise_sigma = 0.0;

  void validate() const;
  bool operator==(const SimConfig&) const = default;
};

/// Intrinsics of the simulated camera: square pixels, principal point at the
/// image centre and a horizontal field of view of `fov_degrees`.
CameraIntrinsics simulated_intrinsics(const SimConfig& cfg);

/// Visible iff the point has positive depth, its horizontal bearing from the
/// optical axis is within half the field of view, and it projects inside the
/// image.
bool classify_sight(const WorldPoint& p, const CameraIntrinsics& k, const CameraExtrinsics& rt,
                    int image_width, int image_height, double fov_degrees);

/// Per-agent visibility (scene agent order) of the clean paths at `frame`.
/// Agents without a clean path are classified by their noisy path.
std::vector<bool> classify_sight(const Scene& scene, Frame frame, double fov_degrees);

SensorTrajectory inject_sensor_noise(const SensorTrajectory& traj, const NoiseModel& noise, std::uint64_t seed);

/// Builds a scene whose first `out_of_sight_count` agents stay outside the
/// field of view for every frame and whose remaining agents stay inside it.
/// Bit-identical for a fixed (cfg, seed).
Scene generate_scene(const SimConfig& cfg, std::uint64_t seed);

}  // namespace ostk
