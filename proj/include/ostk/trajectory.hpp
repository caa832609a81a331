#pragma once

// Frame-indexed trajectories and time windows.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ostk/error.hpp"

namespace ostk {

using Frame = std::int64_t;

/// Observation span [obs_begin, obs_end) followed by prediction span
/// [obs_end, pred_end).
struct TimeWindow {
  Frame obs_begin = 0;
  Frame obs_end = 100;
  Frame pred_end = 200;

  static TimeWindow make(Frame obs_begin, Frame obs_end, Frame pred_end);

  Frame observation_span() const { return obs_end - obs_begin; }
  Frame prediction_span() const { return pred_end - obs_end; }
  void validate() const;

  bool operator==(const TimeWindow&) const = default;
};

enum class Segment { observation, prediction };

struct WorldPoint {
  double x = 0.0, y = 0.0, z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static WorldPoint from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  bool finite() const;
  bool operator==(const WorldPoint&) const = default;
};

struct PixelPoint {
  double u = 0.0, v = 0.0;

  Eigen::Vector2d vec() const { return {u, v}; }
  static PixelPoint from(const Eigen::Vector2d& p) { return {p.x(), p.y()}; }
  bool finite() const;
  bool operator==(const PixelPoint&) const = default;
};

enum class Provenance { noisy, clean, denoised };
const char* to_string(Provenance p);

/// Contiguous run of world positions starting at `first_frame()`.
class SensorTrajectory {
 public:
  using Sample = WorldPoint;

  SensorTrajectory(Frame first_frame, std::vector<WorldPoint> points, Provenance provenance);

  Frame first_frame() const { return first_; }
  Frame end_frame() const { return first_ + static_cast<Frame>(points_.size()); }
  std::size_t size() const { return points_.size(); }
  Provenance provenance() const { return provenance_; }
  std::span<const WorldPoint> points() const { return points_; }
  const WorldPoint& at_frame(Frame f) const;
  bool covers(Frame begin, Frame end) const { return begin >= first_ && end <= end_frame(); }

  SensorTrajectory with_provenance(Provenance p) const { return {first_, points_, p}; }
  SensorTrajectory sub(Frame begin, Frame end) const;

  bool operator==(const SensorTrajectory&) const = default;

 private:
  Frame first_;
  std::vector<WorldPoint> points_;
  Provenance provenance_;
};

/// Contiguous run of pixel samples; std::nullopt marks frames where the agent
/// is outside the field of view.
class VisualTrajectory {
 public:
  using Sample = std::optional<PixelPoint>;

  VisualTrajectory(Frame first_frame, std::vector<std::optional<PixelPoint>> samples);
  static VisualTrajectory dense(Frame first_frame, std::span<const PixelPoint> points);

  Frame first_frame() const { return first_; }
  Frame end_frame() const { return first_ + static_cast<Frame>(samples_.size()); }
  std::size_t size() const { return samples_.size(); }
  std::span<const std::optional<PixelPoint>> samples() const { return samples_; }
  const std::optional<PixelPoint>& at_frame(Frame f) const;
  bool covers(Frame begin, Frame end) const { return begin >= first_ && end <= end_frame(); }
  bool fully_present(Frame begin, Frame end) const;
  bool has_absent() const { return !fully_present(first_, end_frame()); }

  /// Present points in order. Throws a coverage error when any sample is absent.
  std::vector<PixelPoint> present_points() const;

  VisualTrajectory sub(Frame begin, Frame end) const;

  bool operator==(const VisualTrajectory&) const = default;

 private:
  Frame first_;
  std::vector<std::optional<PixelPoint>> samples_;
};


/// Samples of `traj` in the observation span [obs_begin, obs_end) or the
/// prediction span [obs_end, pred_end). Throws a coverage error listing the
/// missing frame indices when the trajectory does not cover the segment.
SensorTrajectory slice_window(const SensorTrajectory& traj, const TimeWindow& window, Segment segment);
VisualTrajectory slice_window(const VisualTrajectory& traj, const TimeWindow& window, Segment segment);

}  // namespace ostk
