#pragma once

// Future-trajectory prediction from an observed window: a constant-velocity
// baseline and a trainable model decoding offsets from the last observation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ostk/denoising.hpp"

namespace ostk {

/// Extrapolates the mean per-frame displacement of the last min(5, n - 1)
/// steps for `horizon` frames starting right after the observation.
VisualTrajectory constant_velocity_predict(const VisualTrajectory& v_obs, int horizon);
SensorTrajectory constant_velocity_predict(const SensorTrajectory& s_obs, int horizon);

struct PredictorArch {
  int obs_frames = 100;
  int pred_frames = 100;
  int hidden = 64;
  int channels = 2;  // 2 for pixels, 3 for world positions
  /// 0: outputs are offsets from the last observed point. L >= 2: offsets
  /// from the least-squares line through the last L observed points,
  /// continued past the observation.
  int trend_frames = 0;

  std::vector<int> layer_sizes() const;
};

/// Input: for each observed frame i < n - 1 the normalized offset
/// x[i] - x[n-1], and in the last slot the normalized absolute last position.
/// Output: normalized offsets of each future frame from the base path (the
/// last point held, or the continued trend line).
struct PredictorModel {
  int obs_frames = 100;
  int pred_frames = 100;
  int channels = 2;
  int trend_frames = 0;
  Mlp net;
  std::optional<ChannelNorm> norm;

  static PredictorModel create(const PredictorArch& arch, std::uint64_t seed);

  std::vector<int> layer_sizes() const { return net.layer_sizes(); }
  /// `observed` is channels x obs_frames.
  Eigen::VectorXd features(const Eigen::MatrixXd& observed) const;
  /// channels x pred_frames, before any learned correction.
  Eigen::MatrixXd base_path(const Eigen::MatrixXd& observed) const;
  /// channels x pred_frames
  Eigen::MatrixXd decode(const Eigen::MatrixXd& observed, const Eigen::VectorXd& out) const;
  bool operator==(const PredictorModel&) const = default;
};

VisualTrajectory predict(const PredictorModel& model, const VisualTrajectory& v_obs);
SensorTrajectory predict(const PredictorModel& model, const SensorTrajectory& s_obs);

struct ConstantVelocityPredictor {
  bool operator==(const ConstantVelocityPredictor&) const = default;
};

using PredictorSpec = std::variant<ConstantVelocityPredictor, PredictorModel>;
std::string describe(const PredictorSpec& spec);

/// Same contract as denoising_loss.
double prediction_loss(const VisualTrajectory& v_pred, const VisualTrajectory& v_gt);

struct PredictionSample {
  std::string scene_id;
  std::string agent_id;
  Eigen::MatrixXd observed;  // channels x obs_frames
  Eigen::MatrixXd target;    // channels x pred_frames
};

struct PredictionSampleSet {
  std::vector<PredictionSample> samples;
  int skipped_windows = 0;
  int total_windows = 0;
};

Eigen::MatrixXd to_matrix(std::span<const PixelPoint> pts);
Eigen::MatrixXd to_matrix(std::span<const WorldPoint> pts);

/// Pixel-space windows: each out-of-sight agent's noisy observation is
/// denoised, projected with the scene's matrices, and paired with the hidden
/// visual truth of the prediction span. `matrices` is index-aligned with
/// `scenes`; std::nullopt skips that scene's windows.
PredictionSampleSet build_prediction_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                             std::span<const std::optional<CameraMatrixSequence>> matrices,
                                             const DenoiserSpec& denoiser);

/// World-space windows for two-stage prediction: denoised sensor observation
/// paired with the noisy sensor track of the prediction span, which is the
/// only world-space target available without visual supervision.
PredictionSampleSet build_world_prediction_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                                   const DenoiserSpec& denoiser);

double predictor_batch_loss(const PredictorModel& model, std::span<const PredictionSample> samples,
                            std::span<const std::size_t> indices, MlpGradient* grad);
double constant_velocity_loss(std::span<const PredictionSample> samples);

ChannelNorm fit_prediction_norm(std::span<const PredictionSample> samples);

struct PredictorTraining {
  PredictorModel model;
  LossHistory history;
};

PredictorTraining train_predictor(const PredictionSampleSet& train, const PredictionSampleSet& validation,
                                  const PredictorArch& arch, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = {});

GradientCheck predictor_gradient_check(PredictorModel model, std::span<const PredictionSample> probe,
                                       double h = 1e-5);

}  // namespace ostk
