#pragma once

// Experiment configuration and the benchmark runner: scene sources, the
// train / validation / test split, method registry, training of model
// components and parallel evaluation on the test split.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ostk/io.hpp"

namespace ostk {

struct SimulatedSource {
  SimConfig sim;
  int count = 0;
};

struct SceneSources {
  std::vector<SimulatedSource> simulate;
  std::vector<std::string> files;  // glob patterns, resolved relative to the config file
};

struct SplitRatios {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
};

/// identity | kalman(params) | model, either trained by the benchmark or read
/// from a file.
struct DenoiserChoice {
  enum class Type { identity, kalman, model };
  Type type = Type::identity;
  std::optional<KalmanParams> kalman;  // falls back to ExperimentConfig::kalman
  std::string path;                    // empty: train

  std::string label() const;
};

struct PredictorChoice {
  enum class Type { cv, model };
  Type type = Type::cv;
  std::string path;

  std::string label() const;
};

struct MethodSpec {
  std::string name;
  PipelineKind pipeline = PipelineKind::vpd;
  DenoiserChoice denoiser;
  PredictorChoice predictor;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  SceneSources scenes;
  TimeWindow window;
  EstimatorConfig estimator;
  MatrixSource matrices = MatrixSource::estimated;
  std::optional<KalmanParams> smooth_in_sight;
  SplitRatios split;
  TrainConfig train;
  DenoiserArch denoiser_arch;
  PredictorArch predictor_arch;
  KalmanParams kalman;
  std::vector<MethodSpec> methods;
  std::filesystem::path base_dir;  // where relative paths resolve; not serialized

  PipelineSettings settings() const { return {window, estimator, matrices, smooth_in_sight}; }
  /// Throws a config error naming the first problem. Scene sources and
  /// methods are only required for a benchmark.
  void validate(bool for_benchmark = true) const;
};

/// Every violation, including schema problems, is raised as a config error.
/// With for_benchmark = false, "scenes" and "methods" may be left out, which
/// is what single-scene commands need.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir = {},
                                             bool for_benchmark = true);
ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool for_benchmark = true);
Json to_json(const ExperimentConfig& cfg);
/// Stable across runs; changes when any serialized field changes.
std::string config_fingerprint(const ExperimentConfig& cfg);

/// Simulated scenes first (source order, then index), then files in sorted
/// path order. Simulated scene i of source s uses seed derive_key(derive_key(seed, "scenes"), s * 2^32 + i).
std::vector<Scene> load_scenes(const ExperimentConfig& cfg);

struct Split {
  std::vector<std::size_t> train, validation, test;  // ascending scene indices
};
/// Seeded shuffle of scene indices cut by the ratios (train and validation
/// sizes rounded to nearest, test takes the rest).
Split split_scenes(std::size_t scene_count, const SplitRatios& ratios, std::uint64_t seed);

/// Runs f(0) .. f(n - 1) on up to `jobs` threads. The first exception (by
/// index) is rethrown after all tasks finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f);

struct Failure {
  std::string stage;   // estimation, training, evaluation
  std::string subject;  // scene id, component or method name
  std::string kind;
  std::string message;
  bool fatal = false;
};

struct SceneResult {
  std::string scene_id;
  std::vector<std::optional<double>> sums;  // per method; nullopt when it failed
};

struct BenchmarkResult {
  std::string fingerprint;
  std::vector<EvaluationReport> reports;  // method order
  std::vector<SceneResult> per_scene;     // test split order
  std::vector<std::pair<std::string, LossHistory>> histories;
  std::vector<std::pair<std::string, Json>> models;
  std::vector<Failure> failures;
  Split split;
  std::vector<std::string> scene_ids;

  bool has_fatal() const;
};

using Logger = std::function<void(const std::string&)>;

/// Fatal failures (a training abort, a method failing on every scene) are
/// recorded rather than thrown so that partial results can still be written.
BenchmarkResult run_benchmark(const ExperimentConfig& cfg, int jobs = 1, const Logger& log = {});

/// comparison.csv / .json, reports/<method>.json, per_scene.csv, split.json,
/// training/<component>.json, models/<component>.json, failures.json and the
/// resolved config. Contains no timestamps, so equal runs give equal bytes.
void write_benchmark(const BenchmarkResult& result, const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Resolves a method's denoiser / predictor without training; model choices
/// must carry a path.
DenoiserSpec load_denoiser(const DenoiserChoice& c, const ExperimentConfig& cfg);
PredictorSpec load_predictor(const PredictorChoice& c, const ExperimentConfig& cfg);

void write_report(const EvaluationReport& report, const std::filesystem::path& path);

}  // namespace ostk
