#pragma once

// JSON and CSV formats: scenes, fitted models, camera matrices, predictions,
// reports and configuration blocks. Parsing errors name the JSON path of the
// offending field, e.g. "$.agents[2].sensor_noisy[17]".

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ostk/pipeline.hpp"
#include "ostk/scene_simulator.hpp"

namespace ostk {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Pretty-printed, with a trailing newline. Doubles use the shortest text that
/// reads back to the same bits.
std::string dump_json(const Json& j);
Json parse_json(const std::string& text, const std::string& origin);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Lowercase hex FNV-1a of the key-sorted compact dump.
std::string fingerprint(const Json& j);

Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);
Scene load_scene(const std::filesystem::path& path);
void write_scene(const Scene& scene, const std::filesystem::path& path);

Json to_json(const TimeWindow& w);
TimeWindow window_from_json(const Json& j, const std::string& path = "$");
/// "t_s,t_e,t_p"
TimeWindow parse_window(const std::string& text);

Json to_json(const NoiseModel& n);
Json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const Json& j, const std::string& path = "$");

Json to_json(const EstimatorConfig& c);
EstimatorConfig estimator_config_from_json(const Json& j, const std::string& path = "$");

Json to_json(const KalmanParams& k);
KalmanParams kalman_params_from_json(const Json& j, const std::string& path = "$");

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, const std::string& path = "$");

Json to_json(const DenoiserArch& a);
DenoiserArch denoiser_arch_from_json(const Json& j, const std::string& path = "$");
Json to_json(const PredictorArch& a);
PredictorArch predictor_arch_from_json(const Json& j, const std::string& path = "$");

Json to_json(const DenoiserModel& m);
DenoiserModel denoiser_model_from_json(const Json& j);
Json to_json(const PredictorModel& m);
PredictorModel predictor_model_from_json(const Json& j);

Json to_json(const LossHistory& h);

Json to_json(const SceneMatrices& m, const std::string& scene_id, MatrixSource source);
CameraMatrixSequence matrices_from_json(const Json& j);

Json to_json(const PipelineOutput& out, const TimeWindow& window);

/// What a prediction file carries back: per-agent windows, no matrices.
struct PredictionFile {
  std::string scene_id;
  TimeWindow window;
  std::vector<AgentOutput> agents;
};
PredictionFile prediction_from_json(const Json& j);

Json to_json(const EvaluationReport& r);
/// One row per report: method, SUM, MSE-D, MSE-P.
std::string comparison_csv(const std::vector<EvaluationReport>& reports);
/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace ostk
