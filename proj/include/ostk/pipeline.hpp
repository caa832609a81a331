#pragma once

// Per-scene pipelines: the projection-supervised (VPD) pipeline and the
// two-stage world-space baseline, plus their pixel-space evaluation.

#include <optional>
#include <string>
#include <vector>

#include "ostk/denoising.hpp"
#include "ostk/evaluation.hpp"
#include "ostk/prediction.hpp"

namespace ostk {

enum class PipelineKind { vpd, two_stage };
enum class MatrixSource { estimated, oracle };

const char* to_string(PipelineKind k);
const char* to_string(MatrixSource m);
PipelineKind pipeline_kind_from_string(const std::string& s);
MatrixSource matrix_source_from_string(const std::string& s);

struct PipelineSettings {
  TimeWindow window;
  EstimatorConfig estimator;
  MatrixSource matrices = MatrixSource::estimated;
  /// When set, in-sight sensor tracks are smoothed with these parameters
  /// before they are paired with pixels for estimation.
  std::optional<KalmanParams> smooth_in_sight;
};

struct AgentOutput {
  std::string agent_id;
  SensorTrajectory denoised;  // observation span
  VisualTrajectory projected;  // observation span
  VisualTrajectory predicted;  // prediction span
  std::optional<SensorTrajectory> predicted_world;  // two-stage only
};

struct PipelineOutput {
  std::string scene_id;
  CameraMatrixSequence matrices;
  std::vector<EstimateDiagnostics> diagnostics;  // empty for oracle matrices
  bool estimator_warning = false;
  std::vector<AgentOutput> agents;
};

struct SceneMatrices {
  CameraMatrixSequence sequence;
  std::vector<EstimateDiagnostics> diagnostics;
  bool warning = false;
};

/// Matrices for the observation span, estimated from in-sight agents or taken
/// from the scene's camera truth. Failures are raised as stage "estimation".
SceneMatrices scene_matrices(const Scene& scene, const PipelineSettings& settings);

PipelineOutput run_vpd_pipeline(const Scene& scene, const SceneMatrices& matrices, const TimeWindow& window,
                                const DenoiserSpec& denoiser, const PredictorSpec& predictor);
PipelineOutput run_vpd_pipeline(const Scene& scene, const PipelineSettings& settings, const DenoiserSpec& denoiser,
                                const PredictorSpec& predictor);

/// `predictor` works in world space here: a model must have 3 channels.
PipelineOutput run_two_stage_baseline(const Scene& scene, const SceneMatrices& matrices, const TimeWindow& window,
                                      const DenoiserSpec& denoiser, const PredictorSpec& predictor);
PipelineOutput run_two_stage_baseline(const Scene& scene, const PipelineSettings& settings,
                                      const DenoiserSpec& denoiser, const PredictorSpec& predictor);

/// Metrics for every agent of `output` with hidden visual truth over the
/// whole window, in output order.
std::vector<AgentMetrics> evaluate_output(const Scene& scene, const PipelineOutput& output, const TimeWindow& window);

}  // namespace ostk
