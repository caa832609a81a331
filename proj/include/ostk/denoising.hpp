#pragma once

// Sensor trajectory denoisers: a constant-velocity Kalman / RTS smoother and a
// trainable model supervised through the camera projection.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ostk/camera_geometry.hpp"
#include "ostk/mapping_estimator.hpp"
#include "ostk/mlp.hpp"
#include "ostk/scene.hpp"
#include "ostk/training.hpp"

namespace ostk {

struct KalmanParams {
  double process_accel_sigma = 0.02;  // m / frame²
  double meas_sigma_xy = 2.0;
  double meas_sigma_z = 0.2;
  double init_cov_scale = 10.0;

  void validate() const;
  bool operator==(const KalmanParams&) const = default;
};

/// Per-axis constant-velocity Kalman filter followed by Rauch-Tung-Striebel
/// smoothing. The state starts from the first two measurements.
SensorTrajectory kalman_denoise(const SensorTrajectory& s, const KalmanParams& params);

/// Architecture of the trainable denoiser. Every frame is corrected by the same
/// network applied to a (2 * context_radius + 1)-frame neighbourhood.
struct DenoiserArch {
  int window_frames = 100;
  int context_radius = 10;
  int hidden = 32;
  bool residual = true;

  std::vector<int> layer_sizes() const;
};

/// Input column for frame t holds, per offset k in [-r, r], the normalized
/// absolute position (k = 0) or the normalized displacement x[t+k] - x[t].
/// Offsets past either end are filled by point reflection about the end
/// sample, which keeps straight-line motion straight. The output is a
/// normalized correction added to x[t] (residual) or to the fitted mean.
struct DenoiserModel {
  int window_frames = 100;
  int context_radius = 10;
  bool residual = true;
  Mlp net;
  std::optional<ChannelNorm> norm;  // set by fitting, never changed by training

  static DenoiserModel create(const DenoiserArch& arch, std::uint64_t seed);

  std::vector<int> layer_sizes() const { return net.layer_sizes(); }
  Eigen::MatrixXd features(std::span<const WorldPoint> window) const;
  bool operator==(const DenoiserModel&) const = default;
};

ChannelNorm fit_world_norm(std::span<const SensorTrajectory> windows);

SensorTrajectory denoise(const DenoiserModel& model, const SensorTrajectory& s);

struct IdentityDenoiser {
  bool operator==(const IdentityDenoiser&) const = default;
};

using DenoiserSpec = std::variant<IdentityDenoiser, KalmanParams, DenoiserModel>;

/// Runs any denoiser; the result is always labelled `denoised`.
SensorTrajectory apply_denoiser(const DenoiserSpec& spec, const SensorTrajectory& s);
std::string describe(const DenoiserSpec& spec);

/// Mean over frames of squared pixel distance between two fully present
/// visual tracks over the same frames.
double denoising_loss(const VisualTrajectory& v_pred, const VisualTrajectory& v_gt);

/// One out-of-sight observation window: noisy sensor input, the camera
/// matrices estimated for that window and the hidden visual ground truth.
struct DenoisingSample {
  std::string scene_id;
  std::string agent_id;
  SensorTrajectory noisy;
  std::vector<Matrix34> matrices;
  std::vector<PixelPoint> target;
};

struct SampleSet {
  std::vector<DenoisingSample> samples;
  int skipped_windows = 0;  // windows whose matrices could not be estimated
  int total_windows = 0;
};

/// Hidden-truth windows of every out-of-sight agent. Scenes where estimation
/// fails have all their windows skipped and counted.
SampleSet build_denoising_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                  const EstimatorConfig& estimator);

/// Same, with caller-supplied matrices per scene (index-aligned with scenes;
/// std::nullopt marks a failed estimate).
SampleSet build_denoising_samples(std::span<const Scene> scenes, const TimeWindow& window,
                                  std::span<const std::optional<CameraMatrixSequence>> matrices);

/// Mean denoising loss of `model` over the chosen samples, with the parameter
/// gradient added to `grad` when non-null. Camera matrices are constants.
double denoiser_batch_loss(const DenoiserModel& model, std::span<const DenoisingSample> samples,
                           std::span<const std::size_t> indices, MlpGradient* grad);

/// Same loss with the identity denoiser.
double identity_denoising_loss(std::span<const DenoisingSample> samples);

struct DenoiserTraining {
  DenoiserModel model;
  LossHistory history;
};

/// Fits normalization on the training inputs, then trains with Adam on the
/// projection-consistency loss. Aborts with a data-quality error when more
/// than half of the training windows were skipped.
DenoiserTraining train_denoiser(const SampleSet& train, const SampleSet& validation, const DenoiserArch& arch,
                                const TrainConfig& cfg, const EpochCallback& on_epoch = {});
DenoiserTraining train_denoiser(std::span<const Scene> train, std::span<const Scene> validation,
                                const TimeWindow& window, const EstimatorConfig& estimator,
                                const DenoiserArch& arch, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {});

struct GradientCheck {
  double max_relative_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Analytic gradient of the batch loss against central finite differences.
GradientCheck gradient_check(DenoiserModel model, std::span<const DenoisingSample> probe, double h = 1e-5);

}  // namespace ostk
