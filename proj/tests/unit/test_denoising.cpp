#include "helpers.hpp"

#include <cmath>

#include "ostk/denoising.hpp"

using namespace ostk;
using testutil::expect_kind;

namespace {

SensorTrajectory noisy_of(const SensorTrajectory& clean, double sigma, std::uint64_t seed) {
  return inject_sensor_noise(clean, {NoiseKind::gaussian_gps, sigma, sigma, 0}, seed);
}

double rmse(const SensorTrajectory& a, const SensorTrajectory& b, std::size_t from = 0) {
  double s = 0;
  for (std::size_t i = from; i < a.size(); ++i) s += (a.points()[i].vec() - b.points()[i].vec()).squaredNorm();
  return std::sqrt(s / static_cast<double>(a.size() - from));
}

// Short windows and a tiny network so finite differences stay cheap.
const TimeWindow kSmallWindow = TimeWindow::make(0, 20, 30);

DenoiserArch small_arch() { return {20, 2, 4, true}; }

std::vector<Scene> small_scenes(int n, double sigma, std::uint64_t seed0) {
  SimConfig c;
  c.agent_count = 8;
  c.frame_count = 30;
  c.noise.sigma_xy = sigma;
  c.noise.sigma_z = 0.1 * sigma;
  c.noise.drift_step_sigma = 0;
  std::vector<Scene> out;
  for (int i = 0; i < n; ++i) out.push_back(generate_scene(c, seed0 + i));
  return out;
}

EstimatorConfig stationary() {
  EstimatorConfig e;
  e.mode = EstimatorMode::stationary;
  return e;
}

}  // namespace

TEST_CASE("kalman with zero measurement noise returns the input") {
  const auto clean = testutil::sensor_line(0, 50, {1, 2, 1.5}, {0.3, -0.1, 0});
  const auto noisy = noisy_of(clean, 2.0, 1);
  KalmanParams p;
  p.meas_sigma_xy = 0;
  p.meas_sigma_z = 0;
  const auto out = kalman_denoise(noisy, p);
  CHECK(out.provenance() == Provenance::denoised);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK((out.points()[i].vec() - noisy.points()[i].vec()).norm() < 1e-9);
}

TEST_CASE("kalman smooths constant-position gps noise") {
  int good = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto clean = testutil::sensor_line(0, 1000, {3, -2, 1.4}, {0, 0, 0});
    const auto noisy = noisy_of(clean, 2.0, 500 + seed);
    const auto out = kalman_denoise(noisy, {});
    if (rmse(out, clean) / rmse(noisy, clean) < 0.7) ++good;
  }
  CHECK(good >= 18);
}

TEST_CASE("kalman recovers an exact constant-velocity track after burn-in") {
  const auto clean = testutil::sensor_line(0, 200, {3, -2, 1.4}, {0.05, 0.08, 0});
  const auto out = kalman_denoise(clean.with_provenance(Provenance::noisy), {});
  for (std::size_t i = 10; i < out.size(); ++i) CHECK((out.points()[i].vec() - clean.points()[i].vec()).norm() < 1e-6);
}

TEST_CASE("kalman is translation equivariant") {
  const auto clean = testutil::sensor_line(0, 80, {0, 0, 1}, {0.1, 0, 0});
  const auto noisy = noisy_of(clean, 1.0, 9);
  std::vector<WorldPoint> shifted;
  for (const auto& p : noisy.points()) shifted.push_back({p.x + 100, p.y - 40, p.z + 2});
  const auto a = kalman_denoise(noisy, {});
  const auto b = kalman_denoise({0, shifted, Provenance::noisy}, {});
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((b.points()[i].vec() - a.points()[i].vec() - Eigen::Vector3d(100, -40, 2)).norm() < 1e-9);
}

TEST_CASE("kalman needs two samples") {
  expect_kind(ErrorKind::insufficient,
              [] { kalman_denoise({0, {WorldPoint{0, 0, 0}}, Provenance::noisy}, {}); });
}

TEST_CASE("fresh residual denoiser is the identity") {
  DenoiserModel m = DenoiserModel::create({50, 5, 16, true}, 3);
  const auto noisy = noisy_of(testutil::sensor_line(0, 50, {2, 8, 1.2}, {0.1, 0, 0}), 2.0, 4);
  std::vector<SensorTrajectory> fit{noisy};
  m.norm = fit_world_norm(fit);
  const auto out = denoise(m, noisy);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.points()[i] == noisy.points()[i]);
}

TEST_CASE("non-residual denoiser with zero parameters outputs the fitted mean") {
  DenoiserModel m = DenoiserModel::create({50, 5, 16, false}, 3);
  for (std::size_t i = 0; i < m.net.parameter_count(); ++i) m.net.set_parameter(i, 0.0);
  const auto noisy = noisy_of(testutil::sensor_line(0, 50, {2, 8, 1.2}, {0.1, 0, 0}), 2.0, 4);
  std::vector<SensorTrajectory> fit{noisy};
  m.norm = fit_world_norm(fit);
  const auto out = denoise(m, noisy);
  for (const auto& p : out.points()) CHECK((p.vec() - m.norm->mean).norm() < 1e-12);
}

TEST_CASE("denoise contract errors") {
  DenoiserModel m = DenoiserModel::create({50, 5, 16, true}, 3);
  const auto noisy = noisy_of(testutil::sensor_line(0, 50, {2, 8, 1.2}, {0.1, 0, 0}), 2.0, 4);
  expect_kind(ErrorKind::state, [&] { denoise(m, noisy); });
  std::vector<SensorTrajectory> fit{noisy};
  m.norm = fit_world_norm(fit);
  expect_kind(ErrorKind::shape, [&] { denoise(m, noisy.sub(0, 49)); });
}

TEST_CASE("denoising loss closed forms") {
  const auto a = testutil::pixels(0, {{0, 0}, {5, 5}, {-2, 1}});
  CHECK(denoising_loss(a, a) == 0.0);
  const auto b = testutil::pixels(0, {{3, 4}, {8, 9}, {1, 5}});
  CHECK(denoising_loss(a, b) == 25.0);
  CHECK(denoising_loss(testutil::pixels(0, {{0, 0}}), testutil::pixels(0, {{1, 0}})) == 1.0);
  expect_kind(ErrorKind::coverage, [&] { denoising_loss(a, testutil::pixels(1, {{0, 0}, {5, 5}, {-2, 1}})); });
  expect_kind(ErrorKind::coverage,
              [&] { denoising_loss(a, VisualTrajectory(0, {PixelPoint{0, 0}, std::nullopt, PixelPoint{0, 0}})); });
}

TEST_CASE("denoiser gradients match finite differences") {
  const auto scenes = small_scenes(2, 2.0, 70);
  const auto set = build_denoising_samples(scenes, kSmallWindow, stationary());
  REQUIRE(set.samples.size() >= 2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    DenoiserModel m = DenoiserModel::create(small_arch(), seed);
    CounterRng rng(seed + 1);
    for (std::size_t i = 0; i < m.net.parameter_count(); ++i) m.net.set_parameter(i, rng.uniform(-0.5, 0.5));
    CHECK(m.net.parameter_count() <= 500);
    const auto gc = gradient_check(m, set.samples);
    CHECK(gc.max_relative_error < 1e-4);

    // two step sizes agree relative to the gradient scale (loss is in px^2)
    const auto g2 = gradient_check(m, set.samples, 2e-5);
    double diff = 0;
    for (std::size_t i = 0; i < gc.numeric.size(); ++i) diff = std::max(diff, std::abs(g2.numeric[i] - gc.numeric[i]));
    double gmax = 0;
    for (double g : gc.analytic) gmax = std::max(gmax, std::abs(g));
    CHECK(diff < 1e-8 * std::max(1.0, gmax));
  }
}

TEST_CASE("gradient vanishes at a zero-loss configuration") {
  auto scenes = small_scenes(1, 0.0, 80);
  const auto set = build_denoising_samples(scenes, kSmallWindow, stationary());
  REQUIRE_FALSE(set.samples.empty());
  // zero noise, exact matrices: the identity model reproduces the targets
  CHECK(identity_denoising_loss(set.samples) < 1e-12);
  const auto gc = gradient_check(DenoiserModel::create(small_arch(), 1), set.samples);
  double norm = 0;
  for (double g : gc.analytic) norm += g * g;
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("training on zero-noise scenes cannot beat the identity") {
  const auto train = small_scenes(6, 0.0, 90);
  const auto val = small_scenes(2, 0.0, 190);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch = 4;
  const auto trained = train_denoiser(train, val, kSmallWindow, stationary(), small_arch(), cfg);
  const auto val_set = build_denoising_samples(val, kSmallWindow, stationary());
  CHECK(trained.history.best_validation <= identity_denoising_loss(val_set.samples) + 1e-6);
}

TEST_CASE("training is deterministic") {
  const auto train = small_scenes(6, 2.0, 300);
  const auto val = small_scenes(2, 2.0, 400);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch = 4;
  cfg.seed = 12;
  const auto a = train_denoiser(train, val, kSmallWindow, stationary(), small_arch(), cfg);
  const auto b = train_denoiser(train, val, kSmallWindow, stationary(), small_arch(), cfg);
  CHECK(a.history == b.history);
  CHECK(a.model == b.model);
}

TEST_CASE("training with noisy data improves on the identity") {
  const auto train = small_scenes(40, 2.0, 500);
  const auto val = small_scenes(10, 2.0, 600);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch = 8;
  cfg.step_size = 3e-3;
  const auto out = train_denoiser(train, val, kSmallWindow, stationary(), {20, 4, 16, true}, cfg);
  CHECK(out.history.best_validation < out.history.validation.front());
  // norm_state is fitted once and left alone by training
  const auto again = train_denoiser(train, val, kSmallWindow, stationary(), {20, 4, 16, true}, cfg);
  CHECK(out.model.norm == again.model.norm);
}

TEST_CASE("too many skipped windows abort training") {
  const auto scenes = small_scenes(1, 2.0, 700);
  SampleSet bad = build_denoising_samples(scenes, kSmallWindow, stationary());
  REQUIRE_FALSE(bad.samples.empty());
  bad.total_windows = 10;
  bad.skipped_windows = 6;
  expect_kind(ErrorKind::data_quality, [&] { train_denoiser(bad, bad, small_arch(), TrainConfig{}); });
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  Mlp net({3, 4, 2});
  CounterRng rng(1);
  net.init_glorot(rng, false);
  const Mlp before = net;
  Adam adam(net, {});
  for (int i = 0; i < 5; ++i) adam.step(net, net.zero_gradient());
  CHECK(net == before);
}
