// Acceptance checks A1..A10. One PASS/FAIL line per criterion; exit status 1
// when any selected criterion fails. Pass criterion names (e.g. A1 A7) to run
// a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Geometry>

#include "ostk/experiment.hpp"
#include "ostk/random.hpp"

using namespace ostk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RandomCamera {
  CameraIntrinsics k;
  CameraExtrinsics rt;
  double scale = 1.0;
};

RandomCamera random_camera(CounterRng& rng) {
  RandomCamera c;
  c.k.fx = rng.uniform(200, 4000);
  c.k.fy = c.k.fx * rng.uniform(0.8, 1.2);
  c.k.cx = rng.uniform(0, 2000);
  c.k.cy = rng.uniform(0, 1500);
  c.k.skew = rng.uniform(-2, 2);
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  c.rt.rotation = q.toRotationMatrix();
  c.rt.translation = Eigen::Vector3d(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
  c.scale = rng.uniform(0.1, 10);
  return c;
}

// A point in front of the camera, sampled in camera coordinates.
WorldPoint point_in_front(const RandomCamera& c, CounterRng& rng, double zmin, double zmax) {
  const double z = rng.uniform(zmin, zmax);
  const Eigen::Vector3d pc(z * rng.uniform(-1, 1), z * rng.uniform(-0.7, 0.7), z);
  return WorldPoint::from(c.rt.rotation.transpose() * (pc - c.rt.translation));
}

Eigen::Vector2d explicit_projection(const RandomCamera& c, const WorldPoint& p) {
  const Eigen::Vector3d x = c.k.matrix() * (c.rt.rotation * p.vec() + c.rt.translation);
  return {x(0) / x(2), x(1) / x(2)};
}

Outcome a1() {
  const auto t0 = std::chrono::steady_clock::now();
  CounterRng rng(derive_key(101, "a1"));
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_camera(rng);
    const auto m = compose_camera_matrix(c.scale, c.k, c.rt);
    const auto p = point_in_front(c, rng, 0.5, 100);
    const Eigen::Vector2d want = explicit_projection(c, p);
    const Eigen::Vector2d got = project_point(m, p).vec();
    worst = std::max(worst, (got - want).norm() / want.norm());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 5.0,
          fmt("max relative error %.3g (< 1e-9), %.3f s (< 5 s)", worst, secs)};
}

Outcome a2() {
  const auto t0 = std::chrono::steady_clock::now();
  CounterRng rng(derive_key(102, "a2"));
  double worst_elem = 0, worst_rms = 0;
  std::size_t fewest = 1000;
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_camera(rng);
    const std::size_t n = 8 + rng.below(13);
    fewest = std::min(fewest, n);
    std::vector<Correspondence> corrs;
    for (std::size_t j = 0; j < n; ++j) {
      const auto p = point_in_front(c, rng, 2, 50);
      corrs.push_back({p, PixelPoint::from(explicit_projection(c, p)), 0, "p" + std::to_string(j), 1.0});
    }
    const auto est = estimate_frame_matrix(corrs, EstimatorConfig{});
    const auto truth = compose_camera_matrix(1.0, c.k, c.rt);
    worst_elem = std::max(worst_elem, (est.matrix.m() - truth.m()).cwiseAbs().maxCoeff());
    worst_rms = std::max(worst_rms, est.diagnostics.rms_reprojection);
  }
  const double secs = seconds_since(t0);
  return {worst_elem < 1e-6 && worst_rms < 1e-7 && secs < 30.0,
          fmt("%zu+ points/camera: max |dM| %.3g (< 1e-6), max RMS %.3g px (< 1e-7), %.2f s (< 30 s)", fewest,
              worst_elem, worst_rms, secs)};
}

Outcome a3() {
  const std::vector<double> sigmas{0.5, 1.0, 2.0};
  std::vector<double> means;
  SimConfig sim;
  const auto k = simulated_intrinsics(sim);
  for (double sigma : sigmas) {
    double total = 0;
    for (int seed = 0; seed < 50; ++seed) {
      CounterRng rng(derive_key(derive_key(103, "a3"), static_cast<std::uint64_t>(seed)));
      RandomCamera c = random_camera(rng);
      c.k = k;
      std::vector<Correspondence> corrs;
      while (corrs.size() < 200) {
        const auto p = point_in_front(c, rng, 5, 40);
        const Eigen::Vector2d px = explicit_projection(c, p);
        if (px.x() < 0 || px.x() > sim.image_width || px.y() < 0 || px.y() > sim.image_height) continue;
        const Eigen::Vector2d noisy = px + Eigen::Vector2d(rng.normal(0, sigma), rng.normal(0, sigma));
        corrs.push_back({p, PixelPoint::from(noisy), 0, "p" + std::to_string(corrs.size()), 1.0});
      }
      total += estimate_frame_matrix(corrs, EstimatorConfig{}).diagnostics.rms_reprojection;
    }
    means.push_back(total / 50);
  }
  bool ok = true;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    ok = ok && means[i] <= 2 * sigmas[i];
    if (i > 0) ok = ok && means[i] > means[i - 1];
  }
  return {ok, fmt("mean RMS %.4g / %.4g / %.4g px at sigma 0.5 / 1 / 2 (monotone, <= 2 sigma)", means[0], means[1],
                  means[2])};
}

double rmse(const SensorTrajectory& a, const SensorTrajectory& b, std::size_t from = 0) {
  double s = 0;
  for (std::size_t i = from; i < a.size(); ++i) s += (a.points()[i].vec() - b.points()[i].vec()).squaredNorm();
  return std::sqrt(s / static_cast<double>(a.size() - from));
}

Outcome a4() {
  NoiseModel noise;
  noise.kind = NoiseKind::gaussian_gps;
  noise.sigma_xy = 2.0;
  int good = 0;
  double worst_ratio = 0;
  for (int seed = 0; seed < 20; ++seed) {
    CounterRng rng(derive_key(104, static_cast<std::uint64_t>(seed)));
    const WorldPoint p{rng.uniform(-20, 20), rng.uniform(5, 30), rng.uniform(1, 1.8)};
    const SensorTrajectory clean(0, std::vector<WorldPoint>(1000, p), Provenance::clean);
    const auto noisy = inject_sensor_noise(clean, noise, derive_key(204, static_cast<std::uint64_t>(seed)));
    const double ratio = rmse(kalman_denoise(noisy, {}), clean) / rmse(noisy, clean);
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio < 0.7) ++good;
  }

  double worst_cv = 0;
  CounterRng rng(derive_key(104, "cv"));
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d p0(rng.uniform(-20, 20), rng.uniform(5, 30), rng.uniform(1, 1.8));
    const Eigen::Vector3d v(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0);
    std::vector<WorldPoint> pts;
    for (int f = 0; f < 200; ++f) pts.push_back(WorldPoint::from(p0 + v * f));
    const SensorTrajectory track(0, pts, Provenance::noisy);
    const auto out = kalman_denoise(track, {});
    for (std::size_t f = 10; f < out.size(); ++f)
      worst_cv = std::max(worst_cv, (out.points()[f].vec() - pts[f].vec()).norm());
  }
  return {good >= 18 && worst_cv < 1e-6,
          fmt("smoothed/raw RMSE < 0.7 in %d/20 seeds (>= 18, worst %.3f); CV track error after burn-in %.3g m "
              "(< 1e-6)",
              good, worst_ratio, worst_cv)};
}

// A5 and A8 share one run of the shipped benchmark config.
struct BenchmarkRun {
  BenchmarkResult result;
  double seconds = 0;
  std::size_t training_windows = 0;
};

const BenchmarkRun& benchmark_run() {
  static std::optional<BenchmarkRun> run;
  if (!run) {
    const auto cfg = load_experiment_config(fs::path(OSTK_SOURCE_DIR) / "configs" / "benchmark.json");
    const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto t0 = std::chrono::steady_clock::now();
    BenchmarkRun r{run_benchmark(cfg, jobs), 0, 0};
    r.seconds = seconds_since(t0);
    const auto scenes = load_scenes(cfg);
    for (std::size_t i : r.result.split.train)
      r.training_windows += sight_partition(scenes[i], cfg.window).out_of_sight.size();
    run = std::move(r);
  }
  return *run;
}

std::optional<std::size_t> method_index(const BenchmarkResult& r, const std::string& name) {
  for (std::size_t i = 0; i < r.reports.size(); ++i)
    if (r.reports[i].method == name) return i;
  return std::nullopt;
}

Outcome a5() {
  const auto& run = benchmark_run();
  const auto vpd = method_index(run.result, "vpd");
  const auto identity = method_index(run.result, "identity_cv");
  if (!vpd || !identity) return {false, "benchmark is missing the vpd or identity_cv report"};
  const double model = run.result.reports[*vpd].mse_d;
  const double base = run.result.reports[*identity].mse_d;
  // training is a part of the whole benchmark run, so its wall time bounds it
  return {model <= 0.8 * base && run.seconds < 600.0 && run.training_windows >= 200,
          fmt("held-out denoising loss %.1f vs identity %.1f, ratio %.3f (<= 0.8); %zu training windows; "
              "benchmark incl. training %.1f s (< 600 s)",
              model, base, model / base, run.training_windows, run.seconds)};
}

Outcome a8() {
  const auto& run = benchmark_run();
  const auto vpd = method_index(run.result, "vpd");
  const auto base = method_index(run.result, "two_stage_kalman_cv");
  if (!vpd || !base) return {false, "benchmark is missing the vpd or two_stage_kalman_cv report"};
  int wins = 0, baseline_failed = 0, vpd_failed = 0;
  for (const auto& s : run.result.per_scene) {
    const auto& a = s.sums[*vpd];
    const auto& b = s.sums[*base];
    if (!a) {
      ++vpd_failed;
    } else if (!b) {
      // the baseline could not produce a prediction in front of the camera
      ++baseline_failed;
      ++wins;
    } else if (*a < *b) {
      ++wins;
    }
  }
  const int n = static_cast<int>(run.result.per_scene.size());
  return {n == 20 && wins >= 16 && vpd_failed == 0 && run.seconds < 1200.0,
          fmt("VPD SUM below two-stage kalman+cv in %d/%d scenes (>= 16/20; %d where the baseline failed); mean SUM "
              "%.1f vs %.1f; %.1f s (< 1200 s)",
              wins, n, baseline_failed, run.result.reports[*vpd].sum, run.result.reports[*base].sum, run.seconds)};
}

Outcome a6() {
  const auto window = TimeWindow::make(0, 20, 30);
  SimConfig c;
  c.agent_count = 8;
  c.frame_count = 30;
  c.noise.drift_step_sigma = 0;
  std::vector<Scene> scenes;
  for (std::uint64_t i = 0; i < 3; ++i) scenes.push_back(generate_scene(c, derive_key(106, i)));
  // true matrices: a plain DLT on noisy in-sight tracks can land near a
  // degenerate camera, where the loss is too curved for h = 1e-5 differences
  std::vector<std::optional<CameraMatrixSequence>> truth;
  for (const auto& s : scenes) truth.push_back(s.camera_truth->sequence(window));
  const auto dset = build_denoising_samples(scenes, window, truth);
  if (dset.samples.empty()) return {false, "no denoising samples"};

  double worst_d = 0;
  for (std::uint64_t probe = 0; probe < 10; ++probe) {
    DenoiserModel m = DenoiserModel::create({20, 2, 4, true}, probe);
    CounterRng rng(derive_key(206, probe));
    for (std::size_t i = 0; i < m.net.parameter_count(); ++i) m.net.set_parameter(i, rng.uniform(-0.5, 0.5));
    worst_d = std::max(worst_d, gradient_check(m, dset.samples, 1e-5).max_relative_error);
  }

  const auto pixel = build_prediction_samples(scenes, window, truth, KalmanParams{});
  const auto world = build_world_prediction_samples(scenes, window, KalmanParams{});
  if (pixel.samples.empty() || world.samples.empty()) return {false, "no prediction samples"};
  double worst_p = 0;
  for (std::uint64_t probe = 0; probe < 10; ++probe) {
    // alternate pixel and world channel layouts
    const int channels = probe % 2 == 0 ? 2 : 3;
    PredictorModel m = PredictorModel::create({20, 10, 5, channels, 0}, probe);
    CounterRng rng(derive_key(306, probe));
    for (std::size_t i = 0; i < m.net.parameter_count(); ++i) m.net.set_parameter(i, rng.uniform(-0.5, 0.5));
    const auto& set = channels == 2 ? pixel : world;
    worst_p = std::max(worst_p, predictor_gradient_check(m, set.samples, 1e-5).max_relative_error);
  }
  return {worst_d < 1e-4 && worst_p < 1e-4,
          fmt("max relative error denoiser %.3g, predictor %.3g over 10 probes each (< 1e-4, h = 1e-5)", worst_d,
              worst_p)};
}

// Every report's SUM must be the double sum of its components.
int sum_violations(const EvaluationReport& r) {
  int bad = r.sum == r.mse_d + r.mse_p ? 0 : 1;
  for (const auto& a : r.per_agent) bad += a.metrics.sum == a.metrics.mse_d + a.metrics.mse_p ? 0 : 1;
  return bad;
}

std::vector<EvaluationReport> a10_reports();

Outcome a7(bool with_benchmark) {
  CounterRng rng(derive_key(107, "a7"));
  bool self_zero = true, offset_exact = true;
  for (int i = 0; i < 100; ++i) {
    std::vector<PixelPoint> a, b;
    const int n = 1 + static_cast<int>(rng.below(50));
    for (int j = 0; j < n; ++j) {
      a.push_back({rng.uniform(-500, 2500), rng.uniform(-500, 1500)});
      const PixelPoint g{static_cast<double>(rng.below(4000)), static_cast<double>(rng.below(3000))};
      b.push_back(g);
    }
    const auto va = VisualTrajectory::dense(0, a);
    self_zero = self_zero && mse_t(va, va) == 0.0;
    std::vector<PixelPoint> shifted;
    for (const auto& p : b) shifted.push_back({p.u + 3, p.v + 4});
    offset_exact = offset_exact && mse_t(VisualTrajectory::dense(0, b), VisualTrajectory::dense(0, shifted)) == 25.0;
  }

  std::vector<EvaluationReport> reports = a10_reports();
  if (with_benchmark)
    for (const auto& r : benchmark_run().result.reports) reports.push_back(r);
  int bad = 0;
  std::size_t checked = 0;
  for (const auto& r : reports) {
    bad += sum_violations(r);
    checked += 1 + r.per_agent.size();
  }
  const auto paper = check_reported_sum(11.86, 11.23, 23.09);
  return {self_zero && offset_exact && bad == 0 && paper.consistent,
          fmt("mse_t(a,a) = 0: %s; (3,4) offset = 25 exactly: %s; SUM bit-exact in %zu/%zu report entries; "
              "11.86 + 11.23 = 23.09: %s",
              self_zero ? "yes" : "no", offset_exact ? "yes" : "no", checked - bad, checked,
              paper.consistent ? "yes" : "no")};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

Outcome a9() {
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = fs::path(OSTK_SOURCE_DIR) / "configs" / "quick.json";
  std::vector<std::map<std::string, std::string>> trees;
  const std::vector<int> jobs{1, 4};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const fs::path out = root / ("run" + std::to_string(i + 1));
    const std::string cmd = std::string("\"") + OSTK_CLI_PATH + "\" benchmark --config \"" + config.string() +
                            "\" --out \"" + out.string() + "\" --jobs " + std::to_string(jobs[i]) + " > \"" +
                            (root / ("run" + std::to_string(i + 1) + ".log")).string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, fmt("ostk benchmark exited with status %d (see %s)", rc, root.c_str())};
    trees.push_back(read_tree(out));
  }
  std::vector<std::string> differing;
  std::set<std::string> names;
  for (const auto& t : trees)
    for (const auto& [k, v] : t) names.insert(k);
  for (const auto& k : names) {
    const auto a = trees[0].find(k), b = trees[1].find(k);
    if (a == trees[0].end() || b == trees[1].end() || a->second != b->second) differing.push_back(k);
  }
  std::string first = differing.empty() ? "" : ", first: " + differing.front();
  return {differing.empty() && !names.empty(),
          fmt("two `ostk benchmark` runs (--jobs 1 and 4): %zu files, %zu differ%s", names.size(), differing.size(),
              first.c_str())};
}

std::vector<EvaluationReport> a10_reports() {
  SimConfig c;
  c.agent_count = 8;
  c.motion = MotionKind::lateral;
  c.camera_mode = CameraMode::stationary;
  c.noise.sigma_xy = 0;
  c.noise.sigma_z = 0;
  c.noise.drift_step_sigma = 0;
  const TimeWindow window;
  const PipelineSettings settings{window, EstimatorConfig{}, MatrixSource::oracle, std::nullopt};
  std::vector<AgentMetrics> vpd, two_stage;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto scene = generate_scene(c, derive_key(110, i));
    auto a = evaluate_output(scene, run_vpd_pipeline(scene, settings, IdentityDenoiser{}, ConstantVelocityPredictor{}),
                             window);
    auto b = evaluate_output(
        scene, run_two_stage_baseline(scene, settings, IdentityDenoiser{}, ConstantVelocityPredictor{}), window);
    vpd.insert(vpd.end(), a.begin(), a.end());
    two_stage.insert(two_stage.end(), b.begin(), b.end());
  }
  return {aggregate(vpd, "vpd_identity_cv"), aggregate(two_stage, "two_stage_identity_cv")};
}

Outcome a10() {
  const auto reports = a10_reports();
  double worst = 0;
  std::size_t windows = 0;
  for (const auto& r : reports) {
    worst = std::max(worst, r.sum);
    for (const auto& a : r.per_agent) worst = std::max(worst, a.metrics.sum);
    windows += r.per_agent.size();
  }
  return {worst <= 1e-6 && windows > 0,
          fmt("max SUM %.3g over %zu windows of 10 zero-noise linear scenes, both pipelines (<= 1e-6)", worst,
              windows)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  const auto wanted = [&](const std::string& id) { return only.empty() || only.count(id) > 0; };
  const bool bench = wanted("A5") || wanted("A8");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1},
      {"A2", a2},
      {"A3", a3},
      {"A4", a4},
      {"A5", a5},
      {"A6", a6},
      {"A7", [&] { return a7(bench); }},
      {"A8", a8},
      {"A9", a9},
      {"A10", a10},
  };
  int failed = 0, ran = 0;
  for (const auto& [id, check] : criteria) {
    if (!wanted(id)) continue;
    ++ran;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%-3s %s  %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
