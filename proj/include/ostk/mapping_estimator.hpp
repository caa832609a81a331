#pragma once

// Camera matrix estimation from in-sight agents' paired sensor / visual
// tracks via the normalized direct linear transform.

#include <span>
#include <string>
#include <vector>

#include "ostk/scene.hpp"

namespace ostk {

struct Correspondence {
  WorldPoint world;
  PixelPoint pixel;
  Frame frame = 0;
  std::string agent_id;
  double weight = 1.0;  // in (0, 1]
};

enum class EstimatorMode { stationary, sliding_window };
enum class RobustLoss { none, huber };
/// Optional polish of the algebraic solution by minimizing reprojection error.
enum class Refinement { none, geometric };

const char* to_string(EstimatorMode m);
const char* to_string(RobustLoss r);
EstimatorMode estimator_mode_from_string(const std::string& s);
RobustLoss robust_loss_from_string(const std::string& s);
const char* to_string(Refinement r);
Refinement refinement_from_string(const std::string& s);

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::sliding_window;
  /// Frames pooled on each side of the target frame in sliding_window mode.
  int window_radius = 2;
  int min_correspondences = 6;
  RobustLoss robust = RobustLoss::none;
  double huber_delta = 2.0;  // pixels
  double condition_warn = 1e8;
  Refinement refine = Refinement::none;
  int refine_max_iterations = 50;

  void validate() const;
  bool operator==(const EstimatorConfig&) const = default;
};

struct EstimateDiagnostics {
  /// Largest over second-smallest singular value of the normalized
  /// constraint matrix. The smallest one is the residual and is excluded.
  double condition_number = 0.0;
  /// sqrt(sum |reprojection error|² / (2n)): per-coordinate pixel RMS.
  double rms_reprojection = 0.0;
  std::size_t correspondence_count = 0;
  bool ill_conditioned = false;
  int irls_iterations = 0;
  int refine_iterations = 0;
};

struct FrameEstimate {
  CameraMatrix matrix;
  EstimateDiagnostics diagnostics;
};

FrameEstimate estimate_frame_matrix(std::span<const Correspondence> corrs, const EstimatorConfig& cfg);

struct SequenceEstimate {
  CameraMatrixSequence sequence;
  std::vector<EstimateDiagnostics> diagnostics;  // one per frame
  EstimatorConfig config;

  bool any_warning() const;
};

/// Paired correspondences of in-sight agents, one per (agent, frame) in the
/// observation span, ordered by frame then agent id.
std::vector<Correspondence> collect_correspondences(const Scene& scene, const SightMask& mask,
                                                    const TimeWindow& window);

SequenceEstimate estimate_matrix_sequence(const Scene& scene, const SightMask& mask, const TimeWindow& window,
                                          const EstimatorConfig& cfg);

struct AgentResidual {
  std::string agent_id;
  std::size_t count = 0;
  double rms = 0.0;  // per-coordinate, as in EstimateDiagnostics
  double max = 0.0;  // largest Euclidean residual
};

/// Reprojection residuals of each in-sight agent's sensor track against its
/// visual track under `seq`.
std::vector<AgentResidual> reprojection_report(const CameraMatrixSequence& seq, const Scene& scene,
                                               const SightMask& mask);

}  // namespace ostk
