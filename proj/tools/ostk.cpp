// ostk command line: simulate, calibrate, denoise, predict, evaluate, benchmark.
//
// Exit codes: 0 success, 2 configuration / input error, 3 pipeline error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ostk/experiment.hpp"

namespace fs = std::filesystem;
using namespace ostk;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  int jobs = 1;
};

struct MethodArgs {
  std::string window;
  std::string mode;      // estimator mode override
  std::string matrices;  // precomputed matrices file (calibrate output)
  std::string method;    // denoise: identity | kalman | model
  std::string model;     // denoise: model file for --method model
  std::string pipeline = "vpd";
  std::string denoiser = "identity";
  std::string predictor = "cv";
  bool oracle = false;
};

void log_line(const std::string& s) { std::cerr << s << std::endl; }

// An experiment config with just enough in it to drive single-scene commands.
ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = load_experiment_config(g.config, false);
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

PipelineSettings settings_for(const ExperimentConfig& cfg, const MethodArgs& m) {
  PipelineSettings s = cfg.settings();
  if (!m.window.empty()) s.window = parse_window(m.window);
  if (!m.mode.empty()) s.estimator.mode = estimator_mode_from_string(m.mode);
  if (m.oracle) s.matrices = MatrixSource::oracle;
  return s;
}

// --method / --model is the long form of --denoiser.
std::string denoiser_choice(const MethodArgs& m) {
  if (m.method.empty()) {
    if (!m.model.empty()) throw Error(ErrorKind::config, "--model needs --method model");
    return m.denoiser;
  }
  if (m.method == "model") {
    if (m.model.empty()) throw Error(ErrorKind::config, "--method model needs --model <file>");
    return m.model;
  }
  if (!m.model.empty()) throw Error(ErrorKind::config, "--model only applies to --method model");
  return m.method;
}

CameraMatrixSequence read_matrices(const std::string& path) {
  try {
    return matrices_from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what(), e.frames());
  }
}

// Precomputed matrices fix the window unless --window names the same one.
void use_matrices_window(PipelineSettings& s, const MethodArgs& m) {
  if (m.matrices.empty()) return;
  const auto seq = read_matrices(m.matrices);
  if (!m.window.empty() && s.window != seq.window)
    throw Error(ErrorKind::config, "--window differs from the window of " + m.matrices);
  s.window = seq.window;
}

DenoiserSpec denoiser_arg(const std::string& v, const ExperimentConfig& cfg) {
  if (v == "identity") return IdentityDenoiser{};
  if (v == "kalman") return cfg.kalman;
  return load_denoiser({DenoiserChoice::Type::model, std::nullopt, fs::absolute(v).string()}, cfg);
}

PredictorSpec predictor_arg(const std::string& v, const ExperimentConfig& cfg) {
  if (v == "cv") return ConstantVelocityPredictor{};
  return load_predictor({PredictorChoice::Type::model, fs::absolute(v).string()}, cfg);
}

// Anything wrong with an input scene is the caller's problem, not the pipeline's.
Scene read_scene(const std::string& path) {
  try {
    return load_scene(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what(), e.frames());
  }
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

PipelineOutput run_method(const Scene& scene, const PipelineSettings& s, const ExperimentConfig& cfg,
                          const MethodArgs& m) {
  const auto kind = pipeline_kind_from_string(m.pipeline);
  const DenoiserSpec den = denoiser_arg(denoiser_choice(m), cfg);
  const PredictorSpec pred = predictor_arg(m.predictor, cfg);
  SceneMatrices mats;
  if (!m.matrices.empty()) {
    mats.sequence = read_matrices(m.matrices);
  } else {
    mats = scene_matrices(scene, s);
  }
  return kind == PipelineKind::vpd ? run_vpd_pipeline(scene, mats, s.window, den, pred)
                                   : run_two_stage_baseline(scene, mats, s.window, den, pred);
}

int cmd_simulate(const Globals& g, int count) {
  SimConfig sim;
  if (!g.config.empty()) {
    const Json j = read_json_file(g.config);
    try {
      sim = sim_config_from_json(j);
    } catch (const Error& e) {
      throw Error(ErrorKind::config, g.config + ": " + e.what());
    }
  }
  if (g.out.empty()) throw Error(ErrorKind::config, "simulate needs --out <scene.json | directory>");
  if (count <= 0) throw Error(ErrorKind::config, "--count must be positive");
  // Same seeds as the first simulated source of a benchmark with this seed.
  const std::uint64_t base = derive_key(g.seed.value_or(0), "scenes");
  if (fs::path(g.out).extension() == ".json") {
    if (count != 1) throw Error(ErrorKind::config, "--out <file.json> takes a single scene; use a directory");
    const Scene s = generate_scene(sim, derive_key(base, std::uint64_t{0}));
    write_scene(s, g.out);
    std::cout << s.scene_id << "\n";
    return 0;
  }
  for (int i = 0; i < count; ++i) {
    const Scene s = generate_scene(sim, derive_key(base, static_cast<std::uint64_t>(i)));
    write_scene(s, fs::path(g.out) / (s.scene_id + ".json"));
    std::cout << s.scene_id << "\n";
  }
  return 0;
}

int cmd_calibrate(const Globals& g, const std::string& scene_path, const MethodArgs& m) {
  const ExperimentConfig cfg = base_config(g);
  const PipelineSettings s = settings_for(cfg, m);
  const Scene scene = read_scene(scene_path);
  const SceneMatrices mats = scene_matrices(scene, s);
  if (mats.warning) log_line("warning: ill-conditioned estimate in at least one frame");
  if (s.matrices == MatrixSource::estimated) {
    for (const auto& r : reprojection_report(mats.sequence, scene, sight_partition(scene, s.window))) {
      log_line(r.agent_id + ": rms " + format_double(r.rms) + " px, max " + format_double(r.max) + " px");
    }
  }
  emit(g, dump_json(to_json(mats, scene.scene_id, s.matrices)));
  return 0;
}

int cmd_denoise(const Globals& g, const std::string& scene_path, const MethodArgs& m) {
  const ExperimentConfig cfg = base_config(g);
  PipelineSettings s = settings_for(cfg, m);
  use_matrices_window(s, m);
  const Scene scene = read_scene(scene_path);
  MethodArgs cv = m;
  cv.predictor = "cv";
  const PipelineOutput out = run_method(scene, s, cfg, cv);
  Json agents = Json::array();
  for (const auto& a : out.agents) {
    Json den = Json::array(), proj = Json::array();
    for (const auto& p : a.denoised.points()) den.push_back(Json::array({p.x, p.y, p.z}));
    for (const auto& p : a.projected.samples()) proj.push_back(p ? Json::array({p->u, p->v}) : Json(nullptr));
    agents.push_back(Json{{"agent_id", a.agent_id}, {"denoised", std::move(den)}, {"projected", std::move(proj)}});
  }
  emit(g, dump_json(Json{{"format_version", kFormatVersion},
                         {"scene_id", scene.scene_id},
                         {"window", to_json(s.window)},
                         {"denoiser", denoiser_choice(m)},
                         {"agents", std::move(agents)}}));
  return 0;
}

int cmd_predict(const Globals& g, const std::string& scene_path, const MethodArgs& m) {
  const ExperimentConfig cfg = base_config(g);
  PipelineSettings s = settings_for(cfg, m);
  use_matrices_window(s, m);
  const Scene scene = read_scene(scene_path);
  emit(g, dump_json(to_json(run_method(scene, s, cfg, m), s.window)));
  return 0;
}

int cmd_evaluate(const Globals& g, const std::vector<std::string>& scene_paths, const std::string& prediction,
                 const MethodArgs& m, const std::string& method_name) {
  const ExperimentConfig cfg = base_config(g);
  const PipelineSettings s = settings_for(cfg, m);
  std::vector<AgentMetrics> all;
  if (!prediction.empty()) {
    if (scene_paths.size() != 1) throw Error(ErrorKind::config, "--prediction needs exactly one --scene");
    const Scene scene = read_scene(scene_paths.front());
    PredictionFile pf;
    try {
      pf = prediction_from_json(read_json_file(prediction));
    } catch (const Error& e) {
      throw Error(ErrorKind::config, prediction + ": " + e.what());
    }
    if (pf.scene_id != scene.scene_id) throw Error(ErrorKind::config, "prediction belongs to scene " + pf.scene_id);
    PipelineOutput out{pf.scene_id, {}, {}, false, std::move(pf.agents)};
    all = evaluate_output(scene, out, pf.window);
  } else {
    std::vector<std::vector<AgentMetrics>> per(scene_paths.size());
    std::vector<Scene> scenes;
    for (const auto& p : scene_paths) scenes.push_back(read_scene(p));
    parallel_for(scenes.size(), g.jobs, [&](std::size_t i) {
      per[i] = evaluate_output(scenes[i], run_method(scenes[i], s, cfg, m), s.window);
    });
    for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
  }
  const EvaluationReport r = aggregate(std::move(all), method_name, config_fingerprint(cfg));
  emit(g, dump_json(to_json(r)));
  log_line("SUM " + format_double(r.sum) + "  MSE-D " + format_double(r.mse_d) + "  MSE-P " + format_double(r.mse_p));
  return 0;
}

int cmd_benchmark(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorKind::config, "benchmark needs --config <experiment.json>");
  if (g.out.empty()) throw Error(ErrorKind::config, "benchmark needs --out <directory>");
  ExperimentConfig cfg = load_experiment_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  const BenchmarkResult res = run_benchmark(cfg, g.jobs, log_line);
  write_benchmark(res, cfg, g.out);
  std::cout << comparison_csv(res.reports);
  if (res.has_fatal()) {
    log_line("benchmark incomplete, see " + (fs::path(g.out) / "failures.json").string());
    return kExitPipeline;
  }
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::schema:
      return kExitConfig;
    default:
      return kExitPipeline;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-sight trajectory toolkit: denoise sensor tracks through estimated camera projections and "
               "predict their pixel trajectories."};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed (u64); all randomness derives from it");
  app.add_option("--config", g.config, "config file (SimConfig for simulate, experiment config otherwise)");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--jobs", g.jobs, "worker threads for per-scene work")->check(CLI::PositiveNumber);

  MethodArgs m;
  auto add_window = [&](CLI::App* c) {
    c->add_option("--window", m.window, "t_s,t_e,t_p (overrides the config)");
    c->add_option("--mode", m.mode, "estimator mode (overrides the config)")
        ->check(CLI::IsMember({"stationary", "sliding_window"}));
    c->add_flag("--oracle", m.oracle, "use the scene's true camera instead of estimating it");
  };
  auto add_matrices = [&](CLI::App* c) {
    c->add_option("--matrices", m.matrices, "camera matrices from `ostk calibrate` instead of estimating them");
  };
  auto add_method = [&](CLI::App* c) {
    c->add_option("--pipeline", m.pipeline, "vpd | two_stage")->check(CLI::IsMember({"vpd", "two_stage"}));
    c->add_option("--denoiser", m.denoiser, "identity | kalman | <model.json>");
    c->add_option("--predictor", m.predictor, "cv | <model.json>");
  };

  int count = 1;
  auto* sim = app.add_subcommand("simulate", "generate synthetic scenes");
  sim->add_option("--count", count, "number of scenes (--out is a directory; a .json --out takes one scene)");

  std::string scene;
  auto* cal = app.add_subcommand("calibrate", "estimate camera matrices for a scene window");
  cal->add_option("--scene", scene, "scene JSON")->required();
  add_window(cal);

  auto* den = app.add_subcommand("denoise", "denoise and project out-of-sight agents");
  den->add_option("--scene", scene, "scene JSON")->required();
  den->add_option("--denoiser", m.denoiser, "identity | kalman | <model.json>");
  den->add_option("--method", m.method, "identity | kalman | model (long form of --denoiser)")
      ->check(CLI::IsMember({"identity", "kalman", "model"}));
  den->add_option("--model", m.model, "model file for --method model");
  add_window(den);
  add_matrices(den);

  auto* pred = app.add_subcommand("predict", "run a full pipeline on one scene");
  pred->add_option("--scene", scene, "scene JSON")->required();
  add_window(pred);
  add_matrices(pred);
  add_method(pred);

  std::vector<std::string> scenes;
  std::string prediction, method_name = "cli";
  auto* ev = app.add_subcommand("evaluate", "score predictions against hidden visual truth");
  ev->add_option("--scene", scenes, "scene JSON files")->required();
  ev->add_option("--prediction", prediction, "output of `ostk predict` (single scene)");
  ev->add_option("--name", method_name, "method name recorded in the report");
  add_window(ev);
  add_method(ev);

  auto* bench = app.add_subcommand("benchmark", "train, evaluate and compare configured methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(g, count);
    if (*cal) return cmd_calibrate(g, scene, m);
    if (*den) return cmd_denoise(g, scene, m);
    if (*pred) return cmd_predict(g, scene, m);
    if (*ev) return cmd_evaluate(g, scenes, prediction, m, method_name);
    if (*bench) return cmd_benchmark(g);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
