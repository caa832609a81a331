#include "ostk/pipeline.hpp"

namespace ostk {

const char* to_string(PipelineKind k) { return k == PipelineKind::vpd ? "vpd" : "two_stage"; }
const char* to_string(MatrixSource m) { return m == MatrixSource::estimated ? "estimated" : "oracle"; }

PipelineKind pipeline_kind_from_string(const std::string& s) {
  if (s == "vpd") return PipelineKind::vpd;
  if (s == "two_stage") return PipelineKind::two_stage;
  throw Error(ErrorKind::config, "unknown pipeline '" + s + "' (expected vpd|two_stage)");
}

MatrixSource matrix_source_from_string(const std::string& s) {
  if (s == "estimated") return MatrixSource::estimated;
  if (s == "oracle") return MatrixSource::oracle;
  throw Error(ErrorKind::config, "unknown matrix source '" + s + "' (expected estimated|oracle)");
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(name, e);
  }
}

std::vector<const AgentRecord*> out_of_sight_agents(const Scene& scene, const TimeWindow& window) {
  const SightMask mask = stage("partition", [&] { return sight_partition(scene, window); });
  std::vector<const AgentRecord*> out;
  for (const auto& id : mask.out_of_sight) out.push_back(&scene.agent(id));
  return out;
}

PipelineOutput start_output(const Scene& scene, const SceneMatrices& m) {
  return {scene.scene_id, m.sequence, m.diagnostics, m.warning, {}};
}

}  // namespace

SceneMatrices scene_matrices(const Scene& scene, const PipelineSettings& settings) {
  return stage("estimation", [&] {
    if (settings.matrices == MatrixSource::oracle) {
      if (!scene.camera_truth) throw Error(ErrorKind::validation, "oracle matrices requested but scene has no camera");
      return SceneMatrices{scene.camera_truth->sequence(settings.window), {}, false};
    }
    const SightMask mask = sight_partition(scene, settings.window);
    if (mask.in_sight.empty()) throw Error(ErrorKind::insufficient, "no in-sight agents in the window");
    if (settings.smooth_in_sight) {
      Scene smoothed = scene;
      for (auto& a : smoothed.agents) {
        if (!mask.in_sight.contains(a.agent_id)) continue;
        // Observation span only: later frames must not inform the estimate.
        const auto obs = slice_window(a.sensor_noisy, settings.window, Segment::observation);
        a.sensor_noisy = kalman_denoise(obs, *settings.smooth_in_sight).with_provenance(Provenance::noisy);
      }
      auto est = estimate_matrix_sequence(smoothed, mask, settings.window, settings.estimator);
      const bool warn = est.any_warning();
      return SceneMatrices{std::move(est.sequence), std::move(est.diagnostics), warn};
    }
    auto est = estimate_matrix_sequence(scene, mask, settings.window, settings.estimator);
    const bool warn = est.any_warning();
    return SceneMatrices{std::move(est.sequence), std::move(est.diagnostics), warn};
  });
}

PipelineOutput run_vpd_pipeline(const Scene& scene, const SceneMatrices& matrices, const TimeWindow& window,
                                const DenoiserSpec& denoiser, const PredictorSpec& predictor) {
  PipelineOutput out = start_output(scene, matrices);
  for (const auto* a : out_of_sight_agents(scene, window)) {
    const auto obs = stage("input", [&] { return slice_window(a->sensor_noisy, window, Segment::observation); });
    auto den = stage("denoising", [&] { return apply_denoiser(denoiser, obs); });
    auto projected = stage("projection", [&] { return project_trajectory(matrices.sequence, den); });
    auto predicted = stage("prediction", [&] {
      if (const auto* m = std::get_if<PredictorModel>(&predictor)) return predict(*m, projected);
      return constant_velocity_predict(projected, static_cast<int>(window.prediction_span()));
    });
    out.agents.push_back({a->agent_id, std::move(den), std::move(projected), std::move(predicted), std::nullopt});
  }
  return out;
}

PipelineOutput run_vpd_pipeline(const Scene& scene, const PipelineSettings& settings, const DenoiserSpec& denoiser,
                                const PredictorSpec& predictor) {
  return run_vpd_pipeline(scene, scene_matrices(scene, settings), settings.window, denoiser, predictor);
}

PipelineOutput run_two_stage_baseline(const Scene& scene, const SceneMatrices& matrices, const TimeWindow& window,
                                      const DenoiserSpec& denoiser, const PredictorSpec& predictor) {
  PipelineOutput out = start_output(scene, matrices);
  for (const auto* a : out_of_sight_agents(scene, window)) {
    const auto obs = stage("input", [&] { return slice_window(a->sensor_noisy, window, Segment::observation); });
    auto den = stage("denoising", [&] { return apply_denoiser(denoiser, obs); });
    auto future = stage("prediction", [&] {
      if (const auto* m = std::get_if<PredictorModel>(&predictor)) return predict(*m, den);
      return constant_velocity_predict(den, static_cast<int>(window.prediction_span()));
    });
    auto projected = stage("projection", [&] { return project_trajectory(matrices.sequence, den); });
    auto predicted = stage("projection", [&] {
      std::vector<PixelPoint> px;
      for (Frame f = future.first_frame(); f < future.end_frame(); ++f) {
        const auto& m = matrices.sequence.held_at_frame(f);
        const auto& p = future.at_frame(f);
        if (!(homogeneous_depth(m.m(), p) > kDepthEpsilon)) {
          throw Error(ErrorKind::degenerate_projection, "predicted point behind the camera at frame " +
                                                            std::to_string(f), {f});
        }
        px.push_back(project_point(m, p));
      }
      return VisualTrajectory::dense(future.first_frame(), px);
    });
    out.agents.push_back({a->agent_id, std::move(den), std::move(projected), std::move(predicted), std::move(future)});
  }
  return out;
}

PipelineOutput run_two_stage_baseline(const Scene& scene, const PipelineSettings& settings,
                                      const DenoiserSpec& denoiser, const PredictorSpec& predictor) {
  return run_two_stage_baseline(scene, scene_matrices(scene, settings), settings.window, denoiser, predictor);
}

std::vector<AgentMetrics> evaluate_output(const Scene& scene, const PipelineOutput& output, const TimeWindow& window) {
  std::vector<AgentMetrics> out;
  for (const auto& ao : output.agents) {
    const auto& rec = scene.agent(ao.agent_id);
    if (!rec.visual_gt_hidden || !rec.visual_gt_hidden->fully_present(window.obs_begin, window.pred_end)) continue;
    const auto gt_obs = slice_window(*rec.visual_gt_hidden, window, Segment::observation);
    const auto gt_future = slice_window(*rec.visual_gt_hidden, window, Segment::prediction);
    out.push_back({scene.scene_id, ao.agent_id, evaluate_window(ao.projected, ao.predicted, gt_obs, gt_future)});
  }
  return out;
}

}  // namespace ostk
