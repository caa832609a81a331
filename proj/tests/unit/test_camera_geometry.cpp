#include "helpers.hpp"

#include <Eigen/Geometry>

#include "ostk/camera_geometry.hpp"

using namespace ostk;
using testutil::expect_kind;

namespace {

CameraIntrinsics hd() { return {1000, 1000, 960, 540, 0}; }

}  // namespace

TEST_CASE("identity composition is proportional to [I | 0]") {
  const auto m = compose_camera_matrix(1.0, {}, {});
  Matrix34 expect = Matrix34::Zero();
  expect.leftCols<3>() = Eigen::Matrix3d::Identity() / std::sqrt(3.0);
  CHECK((m.m() - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.m().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("scale does not change the normalized matrix") {
  const auto a = compose_camera_matrix(1.0, {}, {});
  const auto b = compose_camera_matrix(2.0, {}, {});
  CHECK((a.m() - b.m()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(b.scale() == doctest::Approx(2.0 * a.scale()));
}

TEST_CASE("pre-normalization row 0 is (1000, 0, 960, 0)") {
  const auto m = compose_camera_matrix(1.0, hd(), {});
  const Eigen::RowVector4d row = m.raw().row(0);
  CHECK(row(0) == doctest::Approx(1000));
  CHECK(std::abs(row(1)) < 1e-12);
  CHECK(row(2) == doctest::Approx(960));
  CHECK(std::abs(row(3)) < 1e-12);
}

TEST_CASE("non-orthonormal rotation is rejected") {
  CameraExtrinsics rt;
  rt.rotation(0, 0) = 1.1;
  expect_kind(ErrorKind::validation, [&] { compose_camera_matrix(1.0, {}, rt); });
  CameraExtrinsics mirror;
  mirror.rotation(2, 2) = -1.0;
  expect_kind(ErrorKind::validation, [&] { compose_camera_matrix(1.0, {}, mirror); });
}

TEST_CASE("project_point closed-form cases") {
  const auto id = compose_camera_matrix(1.0, {}, {});
  const auto p0 = project_point(id, {0, 0, 1});
  CHECK(p0.u == 0.0);
  CHECK(p0.v == 0.0);
  // fx * x / z + cx = 1000 * 1 / 5 + 960
  const auto p = project_point(compose_camera_matrix(1.0, hd(), {}), {1, 0, 5});
  CHECK(p.u == doctest::Approx(1160).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(540).epsilon(1e-12));
  expect_kind(ErrorKind::degenerate_projection, [&] { project_point(id, {1, 1, 0}); });
}

TEST_CASE("projection is invariant to scaling the raw matrix") {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto m = compose_camera_matrix(1.0, hd(), {r, {0.5, -1, 7}});
  const WorldPoint p{0.4, -0.2, 3};
  const auto a = project_point(m.raw(), p);
  for (double lambda : {-3.0, 0.01, 250.0}) {
    const auto b = project_point(Matrix34(lambda * m.raw()), p);
    CHECK(b.u == doctest::Approx(a.u).epsilon(1e-12));
    CHECK(b.v == doctest::Approx(a.v).epsilon(1e-12));
  }
}

TEST_CASE("canonical sign gives positive depth in front of the camera") {
  const auto m = CameraMatrix::from_raw(-5.0 * compose_camera_matrix(1.0, hd(), {}).raw());
  CHECK(homogeneous_depth(m.m(), {0, 0, 4}) > 0);
  CHECK(m.scale() < 0);
}

TEST_CASE("project_trajectory stationary identity camera") {
  const auto m = compose_camera_matrix(1.0, {}, {});
  const CameraMatrixSequence seq{TimeWindow::make(0, 100, 200), std::vector<CameraMatrix>(100, m)};
  const auto s = testutil::sensor_line(0, 100, {0, 0, 1}, {0, 0, 0});
  const auto v = project_trajectory(seq, s);
  CHECK(v.size() == 100);
  CHECK(v.first_frame() == 0);
  for (const auto& p : v.present_points()) {
    CHECK(p.u == 0.0);
    CHECK(p.v == 0.0);
  }
}

TEST_CASE("camera translating along x flips the sign of u") {
  // camera centre moves from x = -2 to x = 2 past a point fixed at x = 0
  std::vector<CameraMatrix> ms;
  for (int i = 0; i < 5; ++i) {
    CameraExtrinsics rt;
    rt.translation = {-(-2.0 + i), 0, 0};
    ms.push_back(compose_camera_matrix(1.0, {}, rt));
  }
  const CameraMatrixSequence seq{TimeWindow::make(0, 5, 6), ms};
  const auto v = project_trajectory(seq, testutil::sensor_line(0, 5, {0, 0, 4}, {0, 0, 0}));
  const auto pts = v.present_points();
  for (int i = 0; i < 5; ++i) {
    const double expect = (0.0 - (-2.0 + i)) / 4.0;  // oracle: (X - Cx) / Z
    CHECK(pts[i].u == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(pts[0].u > 0);
  CHECK(pts[4].u < 0);
}

TEST_CASE("project_trajectory frame i equals project_point exactly") {
  std::vector<CameraMatrix> ms;
  for (int i = 0; i < 10; ++i) {
    CameraExtrinsics rt;
    rt.rotation = Eigen::AngleAxisd(0.01 * i, Eigen::Vector3d::UnitY()).toRotationMatrix();
    rt.translation = {0.1 * i, 0, 2};
    ms.push_back(compose_camera_matrix(1.0, hd(), rt));
  }
  const CameraMatrixSequence seq{TimeWindow::make(0, 10, 12), ms};
  const auto s = testutil::sensor_line(0, 10, {-1, 0.5, 6}, {0.2, 0, 0.1});
  const auto v = project_trajectory(seq, s);
  for (int i = 0; i < 10; ++i) CHECK(*v.samples()[i] == project_point(ms[i], s.points()[i]));
}

TEST_CASE("project_trajectory errors") {
  const auto m = compose_camera_matrix(1.0, {}, {});
  const CameraMatrixSequence seq{TimeWindow::make(0, 10, 20), std::vector<CameraMatrix>(10, m)};
  expect_kind(ErrorKind::coverage,
              [&] { project_trajectory(seq, testutil::sensor_line(0, 9, {0, 0, 1}, {0, 0, 0})); });
  expect_kind(ErrorKind::validation, [&] {
    project_trajectory(seq, testutil::sensor_line(0, 10, {0, 0, 1}, {0, 0, 0}, Provenance::noisy));
  });
  try {
    project_trajectory(seq, testutil::sensor_line(0, 10, {0, 0, 1}, {0, 0, -0.25}));
    FAIL("expected degenerate projection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_projection);
    REQUIRE(e.frames().size() == 1);
    CHECK(e.frames()[0] == 4);
  }
}
