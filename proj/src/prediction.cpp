#include "ostk/prediction.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ostk/evaluation.hpp"

namespace ostk {

namespace {

template <typename Point>
Point cv_step(const Point& last, const Point& d, int j);

template <>
PixelPoint cv_step(const PixelPoint& last, const PixelPoint& d, int j) {
  return {last.u + d.u * j, last.v + d.v * j};
}

template <>
WorldPoint cv_step(const WorldPoint& last, const WorldPoint& d, int j) {
  return {last.x + d.x * j, last.y + d.y * j, last.z + d.z * j};
}

template <typename Point>
std::vector<Point> cv_extrapolate(const std::vector<Point>& pts, int horizon) {
  if (pts.size() < 2) throw Error(ErrorKind::insufficient, "constant-velocity prediction needs >= 2 frames");
  if (horizon < 1) throw Error(ErrorKind::validation, "prediction horizon must be >= 1");
  const std::size_t n = pts.size();
  const std::size_t k = std::min<std::size_t>(5, n - 1);
  // Mean of the last k displacements telescopes to (x[n-1] - x[n-1-k]) / k.
  const auto diff = to_matrix(std::span<const Point>(pts).subspan(n - 1 - k, k + 1));
  const Eigen::VectorXd d = (diff.col(static_cast<Eigen::Index>(k)) - diff.col(0)) / static_cast<double>(k);
  Point step;
  if constexpr (std::is_same_v<Point, PixelPoint>) {
    step = {d(0), d(1)};
  } else {
    step = {d(0), d(1), d(2)};
  }
  std::vector<Point> out;
  for (int j = 1; j <= horizon; ++j) out.push_back(cv_step(pts.back(), step, j));
  return out;
}

}  // namespace

Eigen::MatrixXd to_matrix(std::span<const PixelPoint> pts) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i].vec();
  return m;
}

Eigen::MatrixXd to_matrix(std::span<const WorldPoint> pts) {
  Eigen::MatrixXd m(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i].vec();
  return m;
}

VisualTrajectory constant_velocity_predict(const VisualTrajectory& v_obs, int horizon) {
  const auto pts = v_obs.present_points();
  const auto out = cv_extrapolate(pts, horizon);
  return VisualTrajectory::dense(v_obs.end_frame(), out);
}

SensorTrajectory constant_velocity_predict(const SensorTrajectory& s_obs, int horizon) {
  const std::vector<WorldPoint> pts(s_obs.points().begin(), s_obs.points().end());
  return {s_obs.end_frame(), cv_extrapolate(pts, horizon), s_obs.provenance()};
}

std::vector<int> PredictorArch::layer_sizes() const {
  return {channels * obs_frames, hidden, channels * pred_frames};
}

PredictorModel PredictorModel::create(const PredictorArch& arch, std::uint64_t seed) {
  if (arch.obs_frames < 2 || arch.pred_frames < 1 || arch.hidden <= 0 || (arch.channels != 2 && arch.channels != 3) ||
      arch.trend_frames == 1 || arch.trend_frames < 0 || arch.trend_frames > arch.obs_frames) {
    throw Error(ErrorKind::validation, "invalid predictor architecture");
  }
  PredictorModel m{arch.obs_frames, arch.pred_frames, arch.channels, arch.trend_frames, Mlp(arch.layer_sizes()),
                   std::nullopt};
  CounterRng rng(derive_key(seed, "predictor/init"));
  m.net.init_glorot(rng, true);
  return m;
}

Eigen::VectorXd PredictorModel::features(const Eigen::MatrixXd& observed) const {
  if (!norm) throw Error(ErrorKind::state, "predictor has not been fitted");
  if (observed.rows() != channels || observed.cols() != obs_frames) {
    std::ostringstream os;
    os << "predictor expects " << channels << "x" << obs_frames << " observation, got " << observed.rows() << "x"
       << observed.cols();
    throw Error(ErrorKind::shape, os.str());
  }
  const Eigen::VectorXd last = observed.col(obs_frames - 1);
  const Eigen::VectorXd inv = norm->scale.cwiseInverse();
  Eigen::VectorXd f(channels * obs_frames);
  for (int i = 0; i + 1 < obs_frames; ++i) {
    f.segment(channels * i, channels) = (observed.col(i) - last).cwiseProduct(inv);
  }
  f.segment(channels * (obs_frames - 1), channels) = (last - norm->mean).cwiseProduct(inv);
  return f;
}

Eigen::MatrixXd PredictorModel::base_path(const Eigen::MatrixXd& observed) const {
  const Eigen::VectorXd last = observed.col(obs_frames - 1);
  if (trend_frames < 2) return last.replicate(1, pred_frames);
  // Line fit on t = 0 .. L-1 (last observed frame at L-1), per channel.
  const int n = trend_frames;
  const auto block = observed.rightCols(n);
  const double t_mean = 0.5 * (n - 1);
  double stt = 0.0;
  Eigen::VectorXd mean = block.rowwise().mean(), sxt = Eigen::VectorXd::Zero(channels);
  for (int i = 0; i < n; ++i) {
    stt += (i - t_mean) * (i - t_mean);
    sxt += (i - t_mean) * (block.col(i) - mean);
  }
  const Eigen::VectorXd slope = sxt / stt;
  Eigen::MatrixXd base(channels, pred_frames);
  for (int k = 0; k < pred_frames; ++k) base.col(k) = mean + slope * (n - 1 - t_mean + k + 1);
  return base;
}

Eigen::MatrixXd PredictorModel::decode(const Eigen::MatrixXd& observed, const Eigen::VectorXd& out) const {
  Eigen::MatrixXd pred = base_path(observed);
  for (int k = 0; k < pred_frames; ++k) pred.col(k) += norm->scale.cwiseProduct(out.segment(channels * k, channels));
  return pred;
}

VisualTrajectory predict(const PredictorModel& model, const VisualTrajectory& v_obs) {
  if (model.channels != 2) throw Error(ErrorKind::shape, "pixel prediction needs a 2-channel model");
  const Eigen::MatrixXd obs = to_matrix(v_obs.present_points());
  const Eigen::MatrixXd pred = model.decode(obs, model.net.forward(model.features(obs)));
  std::vector<PixelPoint> pts;
  for (Eigen::Index k = 0; k < pred.cols(); ++k) pts.push_back(PixelPoint::from(pred.col(k)));
  return VisualTrajectory::dense(v_obs.end_frame(), pts);
}

SensorTrajectory predict(const PredictorModel& model, const SensorTrajectory& s_obs) {
  if (model.channels != 3) throw Error(ErrorKind::shape, "world prediction needs a 3-channel model");
  const Eigen::MatrixXd obs = to_matrix(s_obs.points());
  const Eigen::MatrixXd pred = model.decode(obs, model.net.forward(model.features(obs)));
  std::vector<WorldPoint> pts;
  for (Eigen::Index k = 0; k < pred.cols(); ++k) pts.push_back(WorldPoint::from(pred.col(k)));
  return {s_obs.end_frame(), std::move(pts), s_obs.provenance()};
}

std::string describe(const PredictorSpec& spec) {
  return std::holds_alternative<PredictorModel>(spec) ? "model" : "cv";
}

double prediction_loss(const VisualTrajectory& v_pred, const VisualTrajectory& v_gt) { return mse_t(v_pred, v_gt); }

namespace {

std::vector<const AgentRecord*> hidden_agents(const Scene& scene, const TimeWindow& window, bool need_visual) {
  const SightMask mask = sight_partition(scene, window);
  std::vector<const AgentRecord*> out;
  for (const auto& id : mask.out_of_sight) {
    const auto& a = scene.agent(id);
    if (!a.sensor_noisy.covers(window.obs_begin, window.pred_end)) continue;
    if (need_visual && !(a.visual_gt_hidden && a.visual_gt_hidden->fully_present(window.obs_begin, window.pred_end))) {
      continue;
    }
    out.push_back(&a);
  }
  return out;
}

}  // namespace

PredictionSampleSet build_prediction_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                             std::span<const std::optional<CameraMatrixSequence>> matrices,
                                             const DenoiserSpec& denoiser) {
  if (matrices.size() != scenes.size()) throw Error(ErrorKind::shape, "one matrix sequence per scene is required");
  PredictionSampleSet set;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto agents = hidden_agents(scenes[i], window, true);
    set.total_windows += static_cast<int>(agents.size());
    if (!matrices[i]) {
      set.skipped_windows += static_cast<int>(agents.size());
      continue;
    }
    for (const auto* a : agents) {
      try {
        const auto den = apply_denoiser(denoiser, slice_window(a->sensor_noisy, window, Segment::observation));
        const auto projected = project_trajectory(*matrices[i], den);
        const auto future = slice_window(*a->visual_gt_hidden, window, Segment::prediction);
        set.samples.push_back({scenes[i].scene_id, a->agent_id, to_matrix(projected.present_points()),
                               to_matrix(future.present_points())});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_projection) throw;
        ++set.skipped_windows;
      }
    }
  }
  return set;
}

PredictionSampleSet build_world_prediction_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                                   const DenoiserSpec& denoiser) {
  PredictionSampleSet set;
  for (const auto& scene : scenes) {
    for (const auto* a : hidden_agents(scene, window, false)) {
      ++set.total_windows;
      const auto den = apply_denoiser(denoiser, slice_window(a->sensor_noisy, window, Segment::observation));
      const auto future = slice_window(a->sensor_noisy, window, Segment::prediction);
      set.samples.push_back({scene.scene_id, a->agent_id, to_matrix(den.points()), to_matrix(future.points())});
    }
  }
  return set;
}

double predictor_batch_loss(const PredictorModel& model, std::span<const PredictionSample> samples,
                            std::span<const std::size_t> indices, MlpGradient* grad) {
  if (indices.empty()) throw Error(ErrorKind::empty, "empty batch");
  const auto b = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd feats(model.net.input_size(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    feats.col(i) = model.features(samples[indices[static_cast<std::size_t>(i)]].observed);
  }
  Mlp::Tape tape;
  const Eigen::MatrixXd out = model.net.forward(feats, tape);
  Eigen::MatrixXd grad_out(out.rows(), b);
  const double denom = static_cast<double>(b * model.pred_frames);
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& s = samples[indices[static_cast<std::size_t>(i)]];
    if (s.target.rows() != model.channels || s.target.cols() != model.pred_frames) {
      throw Error(ErrorKind::shape, "prediction target has wrong shape");
    }
    const Eigen::MatrixXd diff = model.decode(s.observed, out.col(i)) - s.target;
    total += diff.squaredNorm();
    if (grad) {
      for (int k = 0; k < model.pred_frames; ++k) {
        grad_out.col(i).segment(model.channels * k, model.channels) =
            model.norm->scale.cwiseProduct(diff.col(k)) * (2.0 / denom);
      }
    }
  }
  if (grad) model.net.backward(tape, grad_out, *grad);
  return total / denom;
}

double constant_velocity_loss(std::span<const PredictionSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::empty, "no samples");
  double total = 0.0;
  for (const auto& s : samples) {
    const auto n = s.observed.cols();
    const auto k = std::min<Eigen::Index>(5, n - 1);
    const Eigen::VectorXd d = (s.observed.col(n - 1) - s.observed.col(n - 1 - k)) / static_cast<double>(k);
    double window = 0.0;
    for (Eigen::Index j = 0; j < s.target.cols(); ++j) {
      window += (s.observed.col(n - 1) + d * static_cast<double>(j + 1) - s.target.col(j)).squaredNorm();
    }
    total += window / static_cast<double>(s.target.cols());
  }
  return total / static_cast<double>(samples.size());
}

ChannelNorm fit_prediction_norm(std::span<const PredictionSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::empty, "no samples to fit normalization");
  const auto c = samples.front().observed.rows();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(c), sq = Eigen::VectorXd::Zero(c);
  double count = 0.0;
  for (const auto& s : samples) {
    const Eigen::VectorXd last = s.observed.col(s.observed.cols() - 1);
    mean += last;
    for (Eigen::Index i = 0; i < s.observed.cols(); ++i) {
      sq += (s.observed.col(i) - last).cwiseAbs2();
      count += 1.0;
    }
  }
  mean /= static_cast<double>(samples.size());
  Eigen::VectorXd scale = (sq / count).cwiseSqrt();
  for (Eigen::Index i = 0; i < c; ++i) {
    if (!(scale(i) > 1e-9)) scale(i) = 1.0;
  }
  return {mean, scale};
}

PredictorTraining train_predictor(const PredictionSampleSet& train, const PredictionSampleSet& validation,
                                  const PredictorArch& arch, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.total_windows == 0 || train.samples.empty()) {
    throw Error(ErrorKind::data_quality, "no usable training windows");
  }
  if (2 * train.skipped_windows > train.total_windows) {
    std::ostringstream os;
    os << train.skipped_windows << " of " << train.total_windows << " training windows skipped; aborting";
    throw Error(ErrorKind::data_quality, os.str());
  }
  PredictorModel model = PredictorModel::create(arch, cfg.seed);
  model.norm = fit_prediction_norm(train.samples);
  const auto& val = validation.samples.empty() ? train.samples : validation.samples;
  std::vector<std::size_t> val_idx(val.size());
  std::iota(val_idx.begin(), val_idx.end(), std::size_t{0});
  auto train_loss = [&](std::span<const std::size_t> idx, MlpGradient* g) {
    return predictor_batch_loss(model, train.samples, idx, g);
  };
  auto val_loss = [&] { return predictor_batch_loss(model, val, val_idx, nullptr); };
  PredictorTraining out{model, {}};
  out.history = fit_network(model.net, train.samples.size(), train_loss, val_loss, cfg, "predictor/shuffle", on_epoch);
  out.history.skipped_windows = train.skipped_windows;
  out.history.total_windows = train.total_windows;
  out.model = std::move(model);
  return out;
}

GradientCheck predictor_gradient_check(PredictorModel model, std::span<const PredictionSample> probe, double h) {
  if (probe.empty()) throw Error(ErrorKind::empty, "empty probe batch");
  if (!model.norm) model.norm = fit_prediction_norm(probe);
  std::vector<std::size_t> idx(probe.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  MlpGradient g = model.net.zero_gradient();
  predictor_batch_loss(model, probe, idx, &g);
  GradientCheck out;
  out.analytic = g.flatten();
  out.numeric = numeric_gradient(model.net, [&] { return predictor_batch_loss(model, probe, idx, nullptr); }, h);
  out.max_relative_error = max_relative_error(out.analytic, out.numeric);
  return out;
}

}  // namespace ostk
