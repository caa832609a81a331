#include "ostk/denoising.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "ostk/evaluation.hpp"

namespace ostk {

void KalmanParams::validate() const {
  for (double s : {process_accel_sigma, meas_sigma_xy, meas_sigma_z}) {
    if (!std::isfinite(s) || s < 0.0) throw Error(ErrorKind::validation, "Kalman sigmas must be finite and >= 0");
  }
  if (!(init_cov_scale > 0.0) || !std::isfinite(init_cov_scale)) {
    throw Error(ErrorKind::validation, "init_cov_scale must be positive");
  }
}

namespace {

// Floor on the measurement sigma (not the variance) so that sigma = 0 trusts
// the measurements to well below 1e-9 even with a small process noise.
constexpr double kMeasSigmaFloor = 1e-12;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

Mat2 inverse2(const Mat2& m) {
  const double det = m.determinant();
  if (std::abs(det) > 1e-300) return m.inverse();
  return m.completeOrthogonalDecomposition().pseudoInverse();
}

std::vector<double> smooth_axis(const std::vector<double>& z, double q, double meas_sigma, double init_scale) {
  const std::size_t n = z.size();
  const double sigma = std::max(meas_sigma, kMeasSigmaFloor);
  const double r = sigma * sigma;
  Mat2 f;
  f << 1.0, 1.0, 0.0, 1.0;
  Mat2 qm;
  qm << 0.25, 0.5, 0.5, 1.0;
  qm *= q * q;

  std::vector<Vec2> xp(n), xf(n);
  std::vector<Mat2> pp(n), pf(n);
  Vec2 x(z[0], z[1] - z[0]);
  Mat2 p = Mat2::Zero();
  p(0, 0) = init_scale * r;
  p(1, 1) = 2.0 * init_scale * r;
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      x = f * x;
      p = f * p * f.transpose() + qm;
    }
    xp[t] = x;
    pp[t] = p;
    const double s = p(0, 0) + r;
    const Vec2 k = p.col(0) / s;
    x += k * (z[t] - x(0));
    // Joseph form keeps P symmetric positive semidefinite.
    Mat2 ikh = Mat2::Identity();
    ikh.col(0) -= k;
    p = ikh * p * ikh.transpose() + r * k * k.transpose();
    xf[t] = x;
    pf[t] = p;
  }

  std::vector<double> out(n);
  Vec2 xs = xf[n - 1];
  out[n - 1] = xs(0);
  for (std::size_t t = n - 1; t-- > 0;) {
    const Mat2 c = pf[t] * f.transpose() * inverse2(pp[t + 1]);
    xs = xf[t] + c * (xs - xp[t + 1]);
    out[t] = xs(0);
  }
  return out;
}

}  // namespace

SensorTrajectory kalman_denoise(const SensorTrajectory& s, const KalmanParams& params) {
  params.validate();
  if (s.size() < 2) throw Error(ErrorKind::insufficient, "Kalman smoothing needs at least 2 samples");
  if (s.provenance() != Provenance::noisy) {
    throw Error(ErrorKind::validation, "Kalman smoothing expects a noisy trajectory");
  }
  const auto pts = s.points();
  std::vector<double> xs, ys, zs;
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
    zs.push_back(p.z);
  }
  const double q = params.process_accel_sigma;
  xs = smooth_axis(xs, q, params.meas_sigma_xy, params.init_cov_scale);
  ys = smooth_axis(ys, q, params.meas_sigma_xy, params.init_cov_scale);
  zs = smooth_axis(zs, q, params.meas_sigma_z, params.init_cov_scale);
  std::vector<WorldPoint> out(pts.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {xs[i], ys[i], zs[i]};
  return {s.first_frame(), std::move(out), Provenance::denoised};
}

std::vector<int> DenoiserArch::layer_sizes() const {
  return {3 * (2 * context_radius + 1), hidden, 3};
}

DenoiserModel DenoiserModel::create(const DenoiserArch& arch, std::uint64_t seed) {
  if (arch.window_frames < 2 || arch.context_radius < 0 || arch.hidden <= 0) {
    throw Error(ErrorKind::validation, "invalid denoiser architecture");
  }
  DenoiserModel m{arch.window_frames, arch.context_radius, arch.residual, Mlp(arch.layer_sizes()), std::nullopt};
  CounterRng rng(derive_key(seed, "denoiser/init"));
  m.net.init_glorot(rng, true);
  return m;
}

Eigen::MatrixXd DenoiserModel::features(std::span<const WorldPoint> window) const {
  if (!norm) throw Error(ErrorKind::state, "denoiser has no fitted normalization");
  const auto n = static_cast<long>(window.size());
  const Eigen::Vector3d inv_scale = norm->scale.cwiseInverse();
  auto at = [&](long j) -> Eigen::Vector3d {
    if (j < 0) return 2.0 * window[0].vec() - window[static_cast<std::size_t>(std::min(-j, n - 1))].vec();
    if (j >= n) {
      const long m = std::max(2 * (n - 1) - j, 0L);
      return 2.0 * window[static_cast<std::size_t>(n - 1)].vec() - window[static_cast<std::size_t>(m)].vec();
    }
    return window[static_cast<std::size_t>(j)].vec();
  };
  const int r = context_radius;
  Eigen::MatrixXd f(3 * (2 * r + 1), n);
  for (long t = 0; t < n; ++t) {
    const Eigen::Vector3d center = window[static_cast<std::size_t>(t)].vec();
    for (int k = -r; k <= r; ++k) {
      const Eigen::Vector3d v = k == 0 ? Eigen::Vector3d(center - norm->mean) : Eigen::Vector3d(at(t + k) - center);
      f.block<3, 1>(3 * (k + r), t) = v.cwiseProduct(inv_scale);
    }
  }
  return f;
}

ChannelNorm fit_world_norm(std::span<const SensorTrajectory> windows) {
  // Mean over all samples; scale is the spread of samples around their own
  // window's mean, so corrections are sized like in-window motion plus noise
  // rather than like the spread of agents across the scene.
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
  double count = 0.0;
  for (const auto& w : windows) {
    if (w.size() == 0) continue;
    Eigen::Vector3d wmean = Eigen::Vector3d::Zero();
    for (const auto& p : w.points()) wmean += p.vec();
    wmean /= static_cast<double>(w.size());
    for (const auto& p : w.points()) {
      sum += p.vec();
      sq += (p.vec() - wmean).cwiseAbs2();
      count += 1.0;
    }
  }
  if (count == 0.0) throw Error(ErrorKind::empty, "no samples to fit normalization");
  Eigen::Vector3d scale = (sq / count).cwiseSqrt();
  for (int c = 0; c < 3; ++c) {
    if (!(scale(c) > 1e-6)) scale(c) = 1.0;
  }
  return {sum / count, scale};
}

namespace {

void check_window(const DenoiserModel& model, const SensorTrajectory& s) {
  if (!model.norm) throw Error(ErrorKind::state, "denoiser has not been fitted");
  if (static_cast<int>(s.size()) != model.window_frames) {
    std::ostringstream os;
    os << "denoiser expects " << model.window_frames << " frames, got " << s.size();
    throw Error(ErrorKind::shape, os.str());
  }
}

Eigen::Vector3d decode(const DenoiserModel& model, const WorldPoint& input, const Eigen::VectorXd& out) {
  const Eigen::Vector3d base = model.residual ? input.vec() : Eigen::Vector3d(model.norm->mean);
  return base + model.norm->scale.cwiseProduct(out);
}

}  // namespace

SensorTrajectory denoise(const DenoiserModel& model, const SensorTrajectory& s) {
  check_window(model, s);
  const Eigen::MatrixXd out = model.net.forward(model.features(s.points()));
  std::vector<WorldPoint> pts(s.size());
  for (std::size_t t = 0; t < pts.size(); ++t) {
    pts[t] = WorldPoint::from(decode(model, s.points()[t], out.col(static_cast<Eigen::Index>(t))));
  }
  return {s.first_frame(), std::move(pts), Provenance::denoised};
}

SensorTrajectory apply_denoiser(const DenoiserSpec& spec, const SensorTrajectory& s) {
  if (const auto* k = std::get_if<KalmanParams>(&spec)) return kalman_denoise(s, *k);
  if (const auto* m = std::get_if<DenoiserModel>(&spec)) return denoise(*m, s);
  return s.with_provenance(Provenance::denoised);
}

std::string describe(const DenoiserSpec& spec) {
  if (std::holds_alternative<KalmanParams>(spec)) return "kalman";
  if (std::holds_alternative<DenoiserModel>(spec)) return "model";
  return "identity";
}

double denoising_loss(const VisualTrajectory& v_pred, const VisualTrajectory& v_gt) { return mse_t(v_pred, v_gt); }

SampleSet build_denoising_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                  std::span<const std::optional<CameraMatrixSequence>> matrices) {
  if (matrices.size() != scenes.size()) throw Error(ErrorKind::shape, "one matrix sequence per scene is required");
  SampleSet set;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& scene = scenes[i];
    const SightMask mask = sight_partition(scene, window);
    std::vector<const AgentRecord*> hidden;
    for (const auto& id : mask.out_of_sight) {
      const auto& a = scene.agent(id);
      if (a.visual_gt_hidden && a.visual_gt_hidden->fully_present(window.obs_begin, window.obs_end) &&
          a.sensor_noisy.covers(window.obs_begin, window.obs_end)) {
        hidden.push_back(&a);
      }
    }
    set.total_windows += static_cast<int>(hidden.size());
    if (!matrices[i]) {
      set.skipped_windows += static_cast<int>(hidden.size());
      continue;
    }
    std::vector<Matrix34> ms;
    for (const auto& m : matrices[i]->matrices) ms.push_back(m.m());
    for (const auto* a : hidden) {
      set.samples.push_back({scene.scene_id, a->agent_id, slice_window(a->sensor_noisy, window, Segment::observation),
                             ms,
                             slice_window(*a->visual_gt_hidden, window, Segment::observation).present_points()});
    }
  }
  return set;
}

SampleSet build_denoising_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                  const EstimatorConfig& estimator) {
  std::vector<std::optional<CameraMatrixSequence>> matrices;
  for (const auto& scene : scenes) {
    try {
      matrices.emplace_back(estimate_matrix_sequence(scene, sight_partition(scene, window), window, estimator).sequence);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient && e.kind() != ErrorKind::degenerate) throw;
      matrices.emplace_back(std::nullopt);
    }
  }
  return build_denoising_samples(scenes, window, matrices);
}

double denoiser_batch_loss(const DenoiserModel& model, std::span<const DenoisingSample> samples,
                           std::span<const std::size_t> indices, MlpGradient* grad) {
  if (indices.empty()) throw Error(ErrorKind::empty, "empty batch");
  const auto w = static_cast<Eigen::Index>(model.window_frames);
  const auto b = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd feats(model.net.input_size(), w * b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& s = samples[indices[static_cast<std::size_t>(i)]];
    check_window(model, s.noisy);
    feats.middleCols(i * w, w) = model.features(s.noisy.points());
  }
  Mlp::Tape tape;
  const Eigen::MatrixXd out = model.net.forward(feats, tape);
  Eigen::MatrixXd grad_out(3, w * b);
  double total = 0.0;
  const double denom = static_cast<double>(w * b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& s = samples[indices[static_cast<std::size_t>(i)]];
    for (Eigen::Index t = 0; t < w; ++t) {
      const auto col = i * w + t;
      const auto ti = static_cast<std::size_t>(t);
      const WorldPoint den = WorldPoint::from(decode(model, s.noisy.points()[ti], out.col(col)));
      const Matrix34& m = s.matrices[ti];
      const PixelPoint p = project_point(m, den);
      const Eigen::Vector2d diff(p.u - s.target[ti].u, p.v - s.target[ti].v);
      total += diff.squaredNorm();
      if (grad) {
        const Eigen::Vector3d d_world = projection_jacobian(m, den).transpose() * (2.0 * diff / denom);
        grad_out.col(col) = model.norm->scale.cwiseProduct(d_world);
      }
    }
  }
  if (grad) model.net.backward(tape, grad_out, *grad);
  return total / denom;
}

double identity_denoising_loss(std::span<const DenoisingSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::empty, "no samples");
  double total = 0.0;
  for (const auto& s : samples) {
    double window = 0.0;
    const auto pts = s.noisy.points();
    for (std::size_t t = 0; t < pts.size(); ++t) {
      const PixelPoint p = project_point(s.matrices[t], pts[t]);
      window += std::pow(p.u - s.target[t].u, 2) + std::pow(p.v - s.target[t].v, 2);
    }
    total += window / static_cast<double>(pts.size());
  }
  return total / static_cast<double>(samples.size());
}

DenoiserTraining train_denoiser(const SampleSet& train, const SampleSet& validation, const DenoiserArch& arch,
                                const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.total_windows == 0 || train.samples.empty()) {
    throw Error(ErrorKind::data_quality, "no usable training windows");
  }
  if (2 * train.skipped_windows > train.total_windows) {
    std::ostringstream os;
    os << train.skipped_windows << " of " << train.total_windows
       << " training windows skipped (camera estimation failed); aborting";
    throw Error(ErrorKind::data_quality, os.str());
  }
  DenoiserModel model = DenoiserModel::create(arch, cfg.seed);
  std::vector<SensorTrajectory> inputs;
  for (const auto& s : train.samples) inputs.push_back(s.noisy);
  model.norm = fit_world_norm(inputs);

  const auto& val = validation.samples.empty() ? train.samples : validation.samples;
  std::vector<std::size_t> val_idx(val.size());
  std::iota(val_idx.begin(), val_idx.end(), std::size_t{0});
  // fit_network mutates model.net in place; the losses read it through `model`.
  auto train_loss = [&](std::span<const std::size_t> idx, MlpGradient* g) {
    return denoiser_batch_loss(model, train.samples, idx, g);
  };
  auto val_loss = [&] { return denoiser_batch_loss(model, val, val_idx, nullptr); };
  DenoiserTraining out{model, {}};
  out.history = fit_network(model.net, train.samples.size(), train_loss, val_loss, cfg, "denoiser/shuffle", on_epoch);
  out.history.skipped_windows = train.skipped_windows;
  out.history.total_windows = train.total_windows;
  out.model = std::move(model);
  return out;
}

DenoiserTraining train_denoiser(std::span<const Scene> train, std::span<const Scene> validation,
                                const TimeWindow& window, const EstimatorConfig& estimator,
                                const DenoiserArch& arch, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto train_set = build_denoising_samples(train, window, estimator);
  const auto val_set = build_denoising_samples(validation, window, estimator);
  return train_denoiser(train_set, val_set, arch, cfg, on_epoch);
}

GradientCheck gradient_check(DenoiserModel model, std::span<const DenoisingSample> probe, double h) {
  if (probe.empty()) throw Error(ErrorKind::empty, "empty probe batch");
  if (!model.norm) {
    std::vector<SensorTrajectory> inputs;
    for (const auto& s : probe) inputs.push_back(s.noisy);
    model.norm = fit_world_norm(inputs);
  }
  std::vector<std::size_t> idx(probe.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  MlpGradient g = model.net.zero_gradient();
  denoiser_batch_loss(model, probe, idx, &g);
  GradientCheck out;
  out.analytic = g.flatten();
  out.numeric = numeric_gradient(model.net, [&] { return denoiser_batch_loss(model, probe, idx, nullptr); }, h);
  out.max_relative_error = max_relative_error(out.analytic, out.numeric);
  return out;
}

}  // namespace ostk
