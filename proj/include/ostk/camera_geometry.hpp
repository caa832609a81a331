#pragma once

// Pinhole camera model: intrinsics, extrinsics, the composed 3x4 projection
// matrix and world-to-pixel projection.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ostk/trajectory.hpp"

namespace ostk {

using Matrix34 = Eigen::Matrix<double, 3, 4>;

/// Homogeneous depth below this magnitude is treated as a degenerate projection.
inline constexpr double kDepthEpsilon = 1e-9;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Eigen::Matrix3d matrix() const;
  /// Requires fx, fy > 0 and a last row of (0, 0, 1).
  static CameraIntrinsics from_matrix(const Eigen::Matrix3d& k);
  void validate() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

struct CameraExtrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  /// [R | t]
  Matrix34 matrix() const;
  static CameraExtrinsics from_matrix(const Matrix34& rt);
  /// RᵀR = I and det R = +1, both within 1e-9.
  void validate() const;

  bool operator==(const CameraExtrinsics&) const = default;
};

/// A 3x4 projection matrix kept in canonical gauge: unit Frobenius norm, with
/// the sign chosen so that most reference points get positive homogeneous
/// depth. Without reference points the sign makes det(m[:, :3]) positive,
/// which is the same choice for any point in front of the camera. Exact ties
/// fall back to m(2,3) >= 0.
class CameraMatrix {
 public:
  static CameraMatrix from_raw(const Matrix34& raw, std::span<const WorldPoint> reference = {});
  /// Rebuilds a matrix already in canonical gauge (as written to a file)
  /// without renormalizing, so its bits are kept.
  static CameraMatrix restore(const Matrix34& m, double scale);

  const Matrix34& m() const { return m_; }
  /// Signed factor with raw == scale() * m().
  double scale() const { return scale_; }
  Matrix34 raw() const { return scale_ * m_; }

  bool operator==(const CameraMatrix& o) const { return m_ == o.m_ && scale_ == o.scale_; }

 private:
  CameraMatrix(const Matrix34& m, double scale) : m_(m), scale_(scale) {}

  Matrix34 m_;
  double scale_;
};

/// One matrix per frame of [window.obs_begin, window.obs_end).
struct CameraMatrixSequence {
  TimeWindow window;
  std::vector<CameraMatrix> matrices;

  void validate() const;
  const CameraMatrix& at_frame(Frame f) const;
  /// Matrix used for frame f, holding the last observed matrix for frames past
  /// the observation span.
  const CameraMatrix& held_at_frame(Frame f) const;
};

/// m = scale * K * [R | t], canonically normalized.
CameraMatrix compose_camera_matrix(double scale, const CameraIntrinsics& k, const CameraExtrinsics& rt);

/// Third homogeneous coordinate of m * [P, 1]ᵀ.
double homogeneous_depth(const Matrix34& m, const WorldPoint& p);

PixelPoint project_point(const Matrix34& m, const WorldPoint& p);
inline PixelPoint project_point(const CameraMatrix& m, const WorldPoint& p) { return project_point(m.m(), p); }

/// d(pixel)/d(world) at p.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Matrix34& m, const WorldPoint& p);

/// Projects each frame of `s_hat` with that frame's matrix. `s_hat` must cover
/// exactly the sequence window and be clean or denoised.
VisualTrajectory project_trajectory(const CameraMatrixSequence& seq, const SensorTrajectory& s_hat);

}  // namespace ostk
