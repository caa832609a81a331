#include "ostk/camera_geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace ostk {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::from_matrix(const Eigen::Matrix3d& k) {
  if (k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0 || k(1, 0) != 0.0) {
    throw Error(ErrorKind::validation, "intrinsics matrix must be upper triangular with K[2][2] = 1");
  }
  CameraIntrinsics out{k(0, 0), k(1, 1), k(0, 2), k(1, 2), k(0, 1)};
  out.validate();
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorKind::validation, "intrinsics need finite fx > 0 and fy > 0");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(skew)) {
    throw Error(ErrorKind::validation, "intrinsics have non-finite entries");
  }
}

Matrix34 CameraExtrinsics::matrix() const {
  Matrix34 rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = translation;
  return rt;
}

CameraExtrinsics CameraExtrinsics::from_matrix(const Matrix34& rt) {
  CameraExtrinsics out{rt.leftCols<3>(), rt.col(3)};
  out.validate();
  return out;
}

void CameraExtrinsics::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorKind::validation, "extrinsics have non-finite entries");
  }
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorKind::validation, "rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::validation, "rotation determinant is not +1");
  }
}

double homogeneous_depth(const Matrix34& m, const WorldPoint& p) {
  return m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2) * p.z + m(2, 3);
}

CameraMatrix CameraMatrix::restore(const Matrix34& m, double scale) {
  if (!m.allFinite() || !std::isfinite(scale) || scale == 0.0) {
    throw Error(ErrorKind::validation, "camera matrix has non-finite entries or zero scale");
  }
  if (std::abs(m.norm() - 1.0) > 1e-9) throw Error(ErrorKind::validation, "camera matrix is not unit norm");
  return {m, scale};
}

CameraMatrix CameraMatrix::from_raw(const Matrix34& raw, std::span<const WorldPoint> reference) {
  if (!raw.allFinite()) throw Error(ErrorKind::validation, "camera matrix has non-finite entries");
  const double norm = raw.norm();
  if (!(norm > 0.0)) throw Error(ErrorKind::validation, "camera matrix has zero norm");
  Matrix34 m = raw / norm;

  int vote = 0;
  for (const auto& p : reference) {
    const double d = homogeneous_depth(m, p);
    if (d > 0.0) {
      ++vote;
    } else if (d < 0.0) {
      --vote;
    }
  }
  double sign = 1.0;
  if (vote < 0) {
    sign = -1.0;
  } else if (vote == 0) {
    const double det = m.leftCols<3>().determinant();
    if (reference.empty() && det != 0.0) {
      sign = det > 0.0 ? 1.0 : -1.0;
    } else {
      sign = m(2, 3) >= 0.0 ? 1.0 : -1.0;
    }
  }
  return {sign * m, sign * norm};
}

void CameraMatrixSequence::validate() const {
  window.validate();
  if (static_cast<Frame>(matrices.size()) != window.observation_span()) {
    std::ostringstream os;
    os << "camera matrix sequence has " << matrices.size() << " matrices for a "
       << window.observation_span() << "-frame window";
    throw Error(ErrorKind::validation, os.str());
  }
}

const CameraMatrix& CameraMatrixSequence::at_frame(Frame f) const {
  if (f < window.obs_begin || f >= window.obs_end) {
    throw Error(ErrorKind::coverage, "frame outside camera matrix sequence window", {f});
  }
  return matrices[static_cast<std::size_t>(f - window.obs_begin)];
}

const CameraMatrix& CameraMatrixSequence::held_at_frame(Frame f) const {
  if (f >= window.obs_end && f < window.pred_end) return matrices.back();
  return at_frame(f);
}

CameraMatrix compose_camera_matrix(double scale, const CameraIntrinsics& k, const CameraExtrinsics& rt) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::validation, "camera scale must be finite and positive");
  }
  k.validate();
  rt.validate();
  return CameraMatrix::from_raw(scale * k.matrix() * rt.matrix());
}

PixelPoint project_point(const Matrix34& m, const WorldPoint& p) {
  const Eigen::Vector3d h = m * p.vec().homogeneous();
  if (!(std::abs(h.z()) > kDepthEpsilon)) {
    throw Error(ErrorKind::degenerate_projection, "point lies on the camera's principal plane");
  }
  return {h.x() / h.z(), h.y() / h.z()};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Matrix34& m, const WorldPoint& p) {
  const Eigen::Vector3d h = m * p.vec().homogeneous();
  if (!(std::abs(h.z()) > kDepthEpsilon)) {
    throw Error(ErrorKind::degenerate_projection, "point lies on the camera's principal plane");
  }
  const double u = h.x() / h.z();
  const double v = h.y() / h.z();
  Eigen::Matrix<double, 2, 3> j;
  j.row(0) = (m.block<1, 3>(0, 0) - u * m.block<1, 3>(2, 0)) / h.z();
  j.row(1) = (m.block<1, 3>(1, 0) - v * m.block<1, 3>(2, 0)) / h.z();
  return j;
}

VisualTrajectory project_trajectory(const CameraMatrixSequence& seq, const SensorTrajectory& s_hat) {
  seq.validate();
  if (s_hat.provenance() == Provenance::noisy) {
    throw Error(ErrorKind::validation, "project_trajectory expects a clean or denoised trajectory");
  }
  if (s_hat.first_frame() != seq.window.obs_begin || s_hat.end_frame() != seq.window.obs_end) {
    std::vector<Frame> frames;
    for (Frame f = seq.window.obs_begin; f < seq.window.obs_end; ++f) {
      if (f < s_hat.first_frame() || f >= s_hat.end_frame()) frames.push_back(f);
    }
    throw Error(ErrorKind::coverage, "trajectory does not match the camera matrix window", std::move(frames));
  }
  std::vector<std::optional<PixelPoint>> out;
  out.reserve(s_hat.size());
  for (Frame f = seq.window.obs_begin; f < seq.window.obs_end; ++f) {
    try {
      out.emplace_back(project_point(seq.at_frame(f), s_hat.at_frame(f)));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at frame " + std::to_string(f), {f});
    }
  }
  return {seq.window.obs_begin, std::move(out)};
}

}  // namespace ostk
