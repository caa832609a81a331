// pybind11 module ostk._core. Arrays are numpy (n, 2) pixel or (n, 3) world
// rows; scenes, configs and results cross the boundary as JSON text and are
// decoded on the Python side.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "ostk/experiment.hpp"

namespace py = pybind11;
using namespace ostk;

namespace {

using RowsXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<WorldPoint> world_rows(const RowsXd& a) {
  if (a.cols() != 3) throw Error(ErrorKind::shape, "expected an (n, 3) array of world points");
  std::vector<WorldPoint> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back({a(i, 0), a(i, 1), a(i, 2)});
  return out;
}

std::vector<PixelPoint> pixel_rows(const RowsXd& a) {
  if (a.cols() != 2) throw Error(ErrorKind::shape, "expected an (n, 2) array of pixels");
  std::vector<PixelPoint> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back({a(i, 0), a(i, 1)});
  return out;
}

RowsXd rows(std::span<const WorldPoint> pts) {
  RowsXd out(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(i) << pts[i].x, pts[i].y, pts[i].z;
  return out;
}

RowsXd rows(const std::vector<PixelPoint>& pts) {
  RowsXd out(pts.size(), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(i) << pts[i].u, pts[i].v;
  return out;
}

Json benchmark_json(const BenchmarkResult& r) {
  Json reports = Json::array();
  for (const auto& rep : r.reports) reports.push_back(to_json(rep));
  Json per_scene = Json::array();
  for (const auto& s : r.per_scene) {
    Json sums = Json::object();
    for (std::size_t k = 0; k < s.sums.size(); ++k)
      sums[r.reports[k].method] = s.sums[k] ? Json(*s.sums[k]) : Json(nullptr);
    per_scene.push_back({{"scene_id", s.scene_id}, {"sums", std::move(sums)}});
  }
  Json failures = Json::array();
  for (const auto& f : r.failures)
    failures.push_back(
        {{"stage", f.stage}, {"subject", f.subject}, {"kind", f.kind}, {"message", f.message}, {"fatal", f.fatal}});
  return {{"fingerprint", r.fingerprint},
          {"reports", std::move(reports)},
          {"per_scene", std::move(per_scene)},
          {"failures", std::move(failures)}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ostk C++ core";
  m.attr("__version__") = "0.1.0";

  // OstkError(message) carries the failure category as `.kind`
  static py::handle exc_type = PyErr_NewException("ostk._core.OstkError", PyExc_RuntimeError, nullptr);
  m.attr("OstkError") = exc_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = exc_type(std::string(to_string(e.kind())) + ": " + e.what());
      err.attr("kind") = to_string(e.kind());
      PyErr_SetObject(exc_type.ptr(), err.ptr());
    }
  });

  m.def(
      "compose_camera_matrix",
      [](double scale, const Eigen::Matrix3d& k, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
        const auto cm = compose_camera_matrix(scale, CameraIntrinsics::from_matrix(k), {r, t});
        return Matrix34(cm.m());
      },
      py::arg("scale"), py::arg("K"), py::arg("R"), py::arg("t"),
      "Canonical (unit-norm) 3x4 projection matrix scale * K [R | t].");

  m.def(
      "project_points",
      [](const Matrix34& mat, const RowsXd& world) {
        std::vector<PixelPoint> out;
        for (const auto& p : world_rows(world)) out.push_back(project_point(mat, p));
        return rows(out);
      },
      py::arg("M"), py::arg("world"));

  m.def(
      "estimate_camera_matrix",
      [](const RowsXd& world, const RowsXd& pixels, bool refine, const std::string& robust) {
        const auto w = world_rows(world);
        const auto px = pixel_rows(pixels);
        if (w.size() != px.size()) throw Error(ErrorKind::shape, "world and pixel arrays differ in length");
        std::vector<Correspondence> corrs;
        for (std::size_t i = 0; i < w.size(); ++i) corrs.push_back({w[i], px[i], 0, std::to_string(i), 1.0});
        EstimatorConfig cfg;
        cfg.refine = refine ? Refinement::geometric : Refinement::none;
        cfg.robust = robust_loss_from_string(robust);
        const auto est = estimate_frame_matrix(corrs, cfg);
        py::dict diag;
        diag["rms_reprojection"] = est.diagnostics.rms_reprojection;
        diag["condition_number"] = est.diagnostics.condition_number;
        diag["ill_conditioned"] = est.diagnostics.ill_conditioned;
        return py::make_tuple(Matrix34(est.matrix.m()), diag);
      },
      py::arg("world"), py::arg("pixels"), py::arg("refine") = false, py::arg("robust") = "none");

  m.def(
      "kalman_denoise",
      [](const RowsXd& track, double process_accel_sigma, double meas_sigma_xy, double meas_sigma_z,
         double init_cov_scale) {
        const KalmanParams params{process_accel_sigma, meas_sigma_xy, meas_sigma_z, init_cov_scale};
        const SensorTrajectory s(0, world_rows(track), Provenance::noisy);
        return rows(kalman_denoise(s, params).points());
      },
      py::arg("track"), py::arg("process_accel_sigma") = KalmanParams{}.process_accel_sigma,
      py::arg("meas_sigma_xy") = KalmanParams{}.meas_sigma_xy, py::arg("meas_sigma_z") = KalmanParams{}.meas_sigma_z,
      py::arg("init_cov_scale") = KalmanParams{}.init_cov_scale);

  m.def(
      "constant_velocity_predict",
      [](const RowsXd& observed, int horizon) {
        const auto v = VisualTrajectory::dense(0, pixel_rows(observed));
        return rows(constant_velocity_predict(v, horizon).present_points());
      },
      py::arg("observed"), py::arg("horizon"));

  m.def(
      "mse_t",
      [](const RowsXd& a, const RowsXd& b) {
        return mse_t(VisualTrajectory::dense(0, pixel_rows(a)), VisualTrajectory::dense(0, pixel_rows(b)));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "check_reported_sum",
      [](double mse_d, double mse_p, double reported, int decimals) {
        const auto c = check_reported_sum(mse_d, mse_p, reported, decimals);
        return py::make_tuple(c.consistent, c.computed, c.note);
      },
      py::arg("mse_d"), py::arg("mse_p"), py::arg("reported_sum"), py::arg("decimals") = 2);

  m.def(
      "simulate_scene_json",
      [](const std::string& config, std::uint64_t seed) {
        const auto cfg = sim_config_from_json(parse_json(config, "<python>"));
        return dump_json(to_json(generate_scene(cfg, seed)));
      },
      py::arg("config"), py::arg("seed"));

  m.def(
      "run_benchmark_json",
      [](const std::string& config, const std::string& base_dir, int jobs) {
        const auto cfg = experiment_config_from_json(parse_json(config, "<python>"), base_dir);
        BenchmarkResult r;
        {
          py::gil_scoped_release release;
          r = run_benchmark(cfg, jobs);
        }
        return dump_json(benchmark_json(r));
      },
      py::arg("config"), py::arg("base_dir") = "", py::arg("jobs") = 1);
}
