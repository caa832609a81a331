#include "ostk/scene_simulator.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "ostk/random.hpp"

namespace ostk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCameraHeight = 2.5;
constexpr double kCameraPitch = 8.0 * kPi / 180.0;  // downward tilt
constexpr double kMinRange = 6.0;
constexpr double kMaxRange = 30.0;
// Keeps noisy hidden tracks (5 sigma at default noise) well in front of the camera.
constexpr double kMinHiddenDepth = 10.0;
constexpr int kMaxAttempts = 1000;

double deg2rad(double d) { return d * kPi / 180.0; }

struct CameraPose {
  Eigen::Vector3d position;
  double yaw;  // heading of the optical axis in the ground plane
};

CameraPose pose_at(CameraMode mode, Frame t) {
  const double tf = static_cast<double>(t);
  switch (mode) {
    case CameraMode::stationary:
      return {{0.0, 0.0, kCameraHeight}, kPi / 2};
    case CameraMode::translating:
      return {{0.04 * tf, 0.0, kCameraHeight}, kPi / 2};
    case CameraMode::orbiting: {
      // Circle around a point 18 m ahead, always facing it.
      const double radius = 18.0;
      const double phi = -kPi / 2 + deg2rad(0.1) * tf;
      const Eigen::Vector3d center(0.0, radius, kCameraHeight);
      return {center + radius * Eigen::Vector3d(std::cos(phi), std::sin(phi), 0.0), phi + kPi};
    }
  }
  return {{0.0, 0.0, kCameraHeight}, kPi / 2};
}

CameraExtrinsics extrinsics_for(const CameraPose& pose) {
  const double cp = std::cos(kCameraPitch), sp = std::sin(kCameraPitch);
  const Eigen::Vector3d forward(cp * std::cos(pose.yaw), cp * std::sin(pose.yaw), -sp);
  const Eigen::Vector3d right(std::sin(pose.yaw), -std::cos(pose.yaw), 0.0);
  const Eigen::Vector3d down = forward.cross(right);
  CameraExtrinsics rt;
  rt.rotation.row(0) = right.transpose();
  rt.rotation.row(1) = down.transpose();
  rt.rotation.row(2) = forward.transpose();
  rt.translation = -rt.rotation * pose.position;
  return rt;
}

/// Ground-plane point at `range` from the camera and `bearing` radians to the
/// right of its optical axis.
Eigen::Vector2d ground_point(const CameraPose& pose, double bearing, double range) {
  const double heading = pose.yaw - bearing;
  return pose.position.head<2>() + range * Eigen::Vector2d(std::cos(heading), std::sin(heading));
}

struct Region {
  double bearing_lo;  // magnitude, radians
  double bearing_hi;
  double side;        // +1 right, -1 left, 0 either
};

Eigen::Vector2d sample_in_region(CounterRng& rng, const CameraPose& pose, const Region& r) {
  double side = r.side;
  if (side == 0.0) side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  double bearing = rng.uniform(r.bearing_lo, r.bearing_hi);
  if (r.bearing_lo == 0.0) bearing *= (rng.uniform() < 0.5 ? -1.0 : 1.0);
  else bearing *= side;
  return ground_point(pose, bearing, rng.uniform(kMinRange, kMaxRange));
}

/// Random heading, or along +-`axis` when one is given.
std::vector<Eigen::Vector2d> constant_velocity_path(CounterRng& rng, const Eigen::Vector2d& start, Frame n,
                                                    double frame_hz, const Eigen::Vector2d* axis = nullptr) {
  const double speed = rng.uniform(0.3, 1.2) / frame_hz;
  Eigen::Vector2d dir;
  if (axis) {
    dir = (rng.uniform() < 0.5 ? -1.0 : 1.0) * *axis;
  } else {
    const double heading = rng.uniform(0.0, 2.0 * kPi);
    dir = {std::cos(heading), std::sin(heading)};
  }
  const Eigen::Vector2d v = speed * dir;
  std::vector<Eigen::Vector2d> path(static_cast<std::size_t>(n));
  for (Frame t = 0; t < n; ++t) path[static_cast<std::size_t>(t)] = start + static_cast<double>(t) * v;
  return path;
}

std::vector<Eigen::Vector2d> waypoint_path(CounterRng& rng, const Eigen::Vector2d& start, Frame n,
                                           double frame_hz) {
  const int segments = 2 + static_cast<int>(rng.below(3));
  const double seg_frames = static_cast<double>(n - 1) / segments;
  const double max_step = 1.2 / frame_hz * seg_frames;
  std::vector<Eigen::Vector2d> waypoints{start};
  for (int s = 0; s < segments; ++s) {
    const double heading = rng.uniform(0.0, 2.0 * kPi);
    const double dist = rng.uniform(0.25, 1.0) * max_step;
    waypoints.push_back(waypoints.back() + dist * Eigen::Vector2d(std::cos(heading), std::sin(heading)));
  }
  std::vector<double> cumulative{0.0};
  for (int s = 0; s < segments; ++s) {
    cumulative.push_back(cumulative.back() + (waypoints[s + 1] - waypoints[s]).norm());
  }
  const double total = cumulative.back();
  std::vector<Eigen::Vector2d> path(static_cast<std::size_t>(n));
  int seg = 0;
  for (Frame t = 0; t < n; ++t) {
    const double s = n > 1 ? total * static_cast<double>(t) / static_cast<double>(n - 1) : 0.0;
    while (seg + 1 < segments && s > cumulative[seg + 1]) ++seg;
    const double len = cumulative[seg + 1] - cumulative[seg];
    const double a = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
    path[static_cast<std::size_t>(t)] = waypoints[seg] + a * (waypoints[seg + 1] - waypoints[seg]);
  }
  return path;
}

std::string agent_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "agent_%03d", i);
  return buf;
}

}  // namespace

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian_gps: return "gaussian_gps";
    case NoiseKind::odometer_drift: return "odometer_drift";
    case NoiseKind::composite: return "composite";
  }
  return "unknown";
}

const char* to_string(MotionKind k) {
  switch (k) {
    case MotionKind::constant_velocity: return "constant_velocity";
    case MotionKind::waypoint: return "waypoint";
    case MotionKind::mixed: return "mixed";
    case MotionKind::lateral: return "lateral";
  }
  return "unknown";
}

const char* to_string(CameraMode k) {
  switch (k) {
    case CameraMode::stationary: return "stationary";
    case CameraMode::translating: return "translating";
    case CameraMode::orbiting: return "orbiting";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  for (auto k : {NoiseKind::gaussian_gps, NoiseKind::odometer_drift, NoiseKind::composite}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::schema, "unknown noise kind '" + s + "'");
}

MotionKind motion_kind_from_string(const std::string& s) {
  for (auto k : {MotionKind::constant_velocity, MotionKind::waypoint, MotionKind::mixed, MotionKind::lateral}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::schema, "unknown motion kind '" + s + "'");
}

CameraMode camera_mode_from_string(const std::string& s) {
  for (auto k : {CameraMode::stationary, CameraMode::translating, CameraMode::orbiting}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::schema, "unknown camera mode '" + s + "'");
}

void NoiseModel::validate() const {
  for (double s : {sigma_xy, sigma_z, drift_step_sigma}) {
    if (!std::isfinite(s) || s < 0.0) throw Error(ErrorKind::validation, "noise sigmas must be finite and >= 0");
  }
}

void SimConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, "sim config: " + m); };
  if (agent_count < 2) fail("agent_count must be >= 2");
  if (frame_count < 2) fail("frame_count must be >= 2");
  if (!(frame_hz > 0.0)) fail("frame_hz must be positive");
  if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) fail("fov_degrees must lie in (0, 180)");
  if (image_width <= 0 || image_height <= 0) fail("image size must be positive");
  if (out_of_sight_count < 1) fail("out_of_sight_count must be >= 1");
  if (out_of_sight_count >= agent_count) fail("out_of_sight_count must leave at least one in-sight agent");
  if (!(pixel_noise_sigma >= 0.0)) fail("pixel_noise_sigma must be >= 0");
  noise.validate();
}

CameraIntrinsics simulated_intrinsics(const SimConfig& cfg) {
  const double f = 0.5 * cfg.image_width / std::tan(0.5 * deg2rad(cfg.fov_degrees));
  return {f, f, 0.5 * cfg.image_width, 0.5 * cfg.image_height, 0.0};
}

bool classify_sight(const WorldPoint& p, const CameraIntrinsics& k, const CameraExtrinsics& rt,
                    int image_width, int image_height, double fov_degrees) {
  const Eigen::Vector3d pc = rt.rotation * p.vec() + rt.translation;
  if (!(pc.z() > 0.0)) return false;
  if (std::atan2(std::abs(pc.x()), pc.z()) > 0.5 * deg2rad(fov_degrees)) return false;
  const Eigen::Vector3d h = k.matrix() * pc;
  const double u = h.x() / h.z();
  const double v = h.y() / h.z();
  return u >= 0.0 && u < image_width && v >= 0.0 && v < image_height;
}

std::vector<bool> classify_sight(const Scene& scene, Frame frame, double fov_degrees) {
  if (!scene.camera_truth) throw Error(ErrorKind::validation, "classify_sight needs camera ground truth");
  const auto& cam = *scene.camera_truth;
  if (frame < 0 || frame >= static_cast<Frame>(cam.extrinsics.size())) {
    throw Error(ErrorKind::range, "frame outside scene", {frame});
  }
  std::vector<bool> out;
  out.reserve(scene.agents.size());
  for (const auto& a : scene.agents) {
    const auto& path = a.sensor_clean ? *a.sensor_clean : a.sensor_noisy;
    if (frame < path.first_frame() || frame >= path.end_frame()) {
      out.push_back(false);
      continue;
    }
    out.push_back(classify_sight(path.at_frame(frame), cam.intrinsics,
                                 cam.extrinsics[static_cast<std::size_t>(frame)], scene.image_width,
                                 scene.image_height, fov_degrees));
  }
  return out;
}

SensorTrajectory inject_sensor_noise(const SensorTrajectory& traj, const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  if (traj.provenance() != Provenance::clean) {
    throw Error(ErrorKind::validation, "noise can only be injected into a clean trajectory");
  }
  const bool gaussian = noise.kind != NoiseKind::odometer_drift;
  const bool drift = noise.kind != NoiseKind::gaussian_gps;
  CounterRng gx(derive_key(seed, "gps/x")), gy(derive_key(seed, "gps/y")), gz(derive_key(seed, "gps/z"));
  CounterRng dx(derive_key(seed, "drift/x")), dy(derive_key(seed, "drift/y")), dz(derive_key(seed, "drift/z"));
  std::vector<WorldPoint> out(traj.points().begin(), traj.points().end());
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& p = out[i];
    if (gaussian) {
      p.x += noise.sigma_xy * gx.normal();
      p.y += noise.sigma_xy * gy.normal();
      p.z += noise.sigma_z * gz.normal();
    }
    if (drift) {
      if (i > 0) {
        bias += noise.drift_step_sigma * Eigen::Vector3d(dx.normal(), dy.normal(), dz.normal());
      }
      p.x += bias.x();
      p.y += bias.y();
      p.z += bias.z();
    }
  }
  return {traj.first_frame(), std::move(out), Provenance::noisy};
}

Scene generate_scene(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Frame n = cfg.frame_count;
  const CameraIntrinsics k = simulated_intrinsics(cfg);

  std::vector<CameraPose> poses;
  CameraTruth truth{k, {}, 1.0};
  for (Frame t = 0; t < n; ++t) {
    poses.push_back(pose_at(cfg.camera_mode, t));
    truth.extrinsics.push_back(extrinsics_for(poses.back()));
  }
  std::vector<CameraMatrix> matrices;
  for (Frame t = 0; t < n; ++t) matrices.push_back(truth.matrix_at(t));

  const double half_fov = 0.5 * deg2rad(cfg.fov_degrees);
  // camera right vector at frame 0; with no roll it lies in the ground plane
  const Eigen::Vector2d lateral_axis(std::sin(poses.front().yaw), -std::cos(poses.front().yaw));
  const Region visible_region{0.0, 0.8 * half_fov, 0.0};

  Scene scene;
  char id[48];
  std::snprintf(id, sizeof id, "sim_%016llx", static_cast<unsigned long long>(seed));
  scene.scene_id = id;
  scene.frame_hz = cfg.frame_hz;
  scene.frame_count = n;
  scene.image_width = cfg.image_width;
  scene.image_height = cfg.image_height;

  for (int i = 0; i < cfg.agent_count; ++i) {
    const std::string agent_id = agent_name(i);
    const bool hidden = i < cfg.out_of_sight_count;
    const std::uint64_t agent_seed = derive_key(seed, agent_id);
    CounterRng rng(derive_key(agent_seed, "path"));
    const double height = rng.uniform(1.0, 1.8);
    bool waypoint = cfg.motion == MotionKind::waypoint;
    if (cfg.motion == MotionKind::mixed) waypoint = rng.uniform() < 0.5;
    const bool lateral = cfg.motion == MotionKind::lateral;

    std::vector<WorldPoint> clean;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Region region = visible_region;
      if (hidden) {
        region = {half_fov + deg2rad(4.0), half_fov + deg2rad(20.0), rng.uniform() < 0.5 ? -1.0 : 1.0};
      }
      const Eigen::Vector2d start = sample_in_region(rng, poses.front(), region);
      const auto ground = waypoint  ? waypoint_path(rng, start, n, cfg.frame_hz)
                          : lateral ? constant_velocity_path(rng, start, n, cfg.frame_hz, &lateral_axis)
                                    : constant_velocity_path(rng, start, n, cfg.frame_hz);
      clean.clear();
      placed = true;
      for (Frame t = 0; t < n && placed; ++t) {
        const auto& g = ground[static_cast<std::size_t>(t)];
        const WorldPoint p{g.x(), g.y(), height};
        const auto& rt = truth.extrinsics[static_cast<std::size_t>(t)];
        const bool seen = classify_sight(p, k, rt, cfg.image_width, cfg.image_height, cfg.fov_degrees);
        if (hidden) {
          const double depth = (rt.rotation * p.vec() + rt.translation).z();
          placed = !seen && depth >= kMinHiddenDepth;
        } else {
          placed = seen;
        }
        clean.push_back(p);
      }
    }
    if (!placed) {
      throw Error(ErrorKind::generation, "could not place " + std::string(hidden ? "out-of-sight" : "in-sight") +
                                             " agent " + agent_id + " after " + std::to_string(kMaxAttempts) +
                                             " attempts");
    }

    SensorTrajectory sensor_clean(0, clean, Provenance::clean);
    SensorTrajectory sensor_noisy = inject_sensor_noise(sensor_clean, cfg.noise, derive_key(agent_seed, "noise"));

    CounterRng pixel_rng(derive_key(agent_seed, "pixel"));
    std::vector<std::optional<PixelPoint>> visual, gt;
    for (Frame t = 0; t < n; ++t) {
      const auto& p = clean[static_cast<std::size_t>(t)];
      const PixelPoint px = project_point(matrices[static_cast<std::size_t>(t)], p);
      gt.emplace_back(px);
      if (hidden) {
        visual.emplace_back(std::nullopt);
      } else {
        PixelPoint observed = px;
        if (cfg.pixel_noise_sigma > 0.0) {
          observed.u += cfg.pixel_noise_sigma * pixel_rng.normal();
          observed.v += cfg.pixel_noise_sigma * pixel_rng.normal();
        }
        visual.emplace_back(observed);
      }
    }
    scene.agents.push_back(AgentRecord{agent_id, AgentKind::pedestrian, std::move(sensor_noisy),
                                       std::move(sensor_clean), VisualTrajectory(0, std::move(visual)),
                                       VisualTrajectory(0, std::move(gt))});
  }
  scene.camera_truth = std::move(truth);
  scene.validate();
  return scene;
}

}  // namespace ostk
