#include "ostk/experiment.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "json_reader.hpp"
#include "ostk/random.hpp"

namespace ostk {

using detail::Node;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::config, msg); }

std::string kalman_tag(const KalmanParams& k) { return "kalman-" + fingerprint(to_json(k)).substr(0, 8); }

const char* type_name(DenoiserChoice::Type t) {
  switch (t) {
    case DenoiserChoice::Type::identity: return "identity";
    case DenoiserChoice::Type::kalman: return "kalman";
    case DenoiserChoice::Type::model: return "model";
  }
  return "?";
}

DenoiserChoice read_denoiser_choice(const Node& n) {
  DenoiserChoice c;
  auto type_of = [&](const Node& t) {
    const std::string s = t.str();
    if (s == "identity") return DenoiserChoice::Type::identity;
    if (s == "kalman") return DenoiserChoice::Type::kalman;
    if (s == "model") return DenoiserChoice::Type::model;
    t.fail("unknown denoiser '" + s + "' (expected identity|kalman|model)");
  };
  if (n.raw().is_string()) {
    c.type = type_of(n);
    return c;
  }
  n.only_keys({"type", "params", "path"});
  c.type = type_of(n.at("type"));
  if (const auto p = n.opt("params")) {
    if (c.type != DenoiserChoice::Type::kalman) p->fail("params only apply to the kalman denoiser");
    c.kalman = kalman_params_from_json(p->raw(), p->path());
  }
  if (const auto p = n.opt("path")) {
    if (c.type != DenoiserChoice::Type::model) p->fail("path only applies to model denoisers");
    c.path = p->str();
  }
  return c;
}

PredictorChoice read_predictor_choice(const Node& n) {
  PredictorChoice c;
  auto type_of = [&](const Node& t) {
    const std::string s = t.str();
    if (s == "cv") return PredictorChoice::Type::cv;
    if (s == "model") return PredictorChoice::Type::model;
    t.fail("unknown predictor '" + s + "' (expected cv|model)");
  };
  if (n.raw().is_string()) {
    c.type = type_of(n);
    return c;
  }
  n.only_keys({"type", "path"});
  c.type = type_of(n.at("type"));
  if (const auto p = n.opt("path")) {
    if (c.type != PredictorChoice::Type::model) p->fail("path only applies to model predictors");
    c.path = p->str();
  }
  return c;
}

Json choice_json(const DenoiserChoice& c) {
  Json j{{"type", type_name(c.type)}};
  if (c.kalman) j["params"] = to_json(*c.kalman);
  if (!c.path.empty()) j["path"] = c.path;
  return j;
}

Json choice_json(const PredictorChoice& c) {
  Json j{{"type", c.type == PredictorChoice::Type::cv ? "cv" : "model"}};
  if (!c.path.empty()) j["path"] = c.path;
  return j;
}

std::filesystem::path resolve(const ExperimentConfig& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || cfg.base_dir.empty() ? path : cfg.base_dir / path;
}

bool trains_denoiser(const DenoiserChoice& c) { return c.type == DenoiserChoice::Type::model && c.path.empty(); }
bool trains_predictor(const PredictorChoice& c) { return c.type == PredictorChoice::Type::model && c.path.empty(); }

std::string predictor_key(const MethodSpec& m) {
  return std::string("predictor_") + to_string(m.pipeline) + "_" + m.denoiser.label();
}

std::string error_kind(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const PipelineError*>(&e)) {
    return std::string(to_string(ErrorKind::pipeline)) + "/" + to_string(pe->cause_kind());
  }
  if (const auto* oe = dynamic_cast<const Error*>(&e)) return to_string(oe->kind());
  return "internal";
}

}  // namespace

std::string DenoiserChoice::label() const {
  switch (type) {
    case Type::identity: return "identity";
    case Type::kalman: return kalman ? kalman_tag(*kalman) : "kalman";
    case Type::model: return path.empty() ? "model" : "model-" + std::to_string(fnv1a(path) & 0xffffffffu);
  }
  return "?";
}

std::string PredictorChoice::label() const {
  if (type == Type::cv) return "cv";
  return path.empty() ? "model" : "model-" + std::to_string(fnv1a(path) & 0xffffffffu);
}

void ExperimentConfig::validate(bool for_benchmark) const {
  if (for_benchmark && scenes.simulate.empty() && scenes.files.empty())
    config_error("at least one scene source is required");
  for (const auto& s : scenes.simulate) {
    if (s.count <= 0) config_error("simulated scene count must be positive");
  }
  for (double r : {split.train, split.validation, split.test}) {
    if (!(r >= 0.0 && r <= 1.0)) config_error("split ratios must lie in [0, 1]");
  }
  if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) config_error("split ratios must sum to 1");
  if (for_benchmark && methods.empty()) config_error("at least one method is required");
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (m.name.empty()) config_error("method names must be non-empty");
    if (m.name.find_first_of("/\\") != std::string::npos || m.name == "." || m.name == "..") {
      config_error("method name '" + m.name + "' cannot be used as a file name");
    }
    if (!names.insert(m.name).second) config_error("duplicate method name '" + m.name + "'");
  }
  try {
    window.validate();
    estimator.validate();
    train.validate();
    kalman.validate();
    if (smooth_in_sight) smooth_in_sight->validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (denoiser_arch.window_frames != window.observation_span()) {
    config_error("denoiser_arch.window_frames must equal the observation span");
  }
  if (predictor_arch.obs_frames != window.observation_span() || predictor_arch.pred_frames != window.prediction_span()) {
    config_error("predictor_arch frames must match the window spans");
  }
  try {
    (void)DenoiserModel::create(denoiser_arch, 0);
    PredictorArch p = predictor_arch;
    p.channels = 2;  // the pipeline picks the channel count
    (void)PredictorModel::create(p, 0);
  } catch (const Error& e) {
    config_error(e.what());
  }
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir,
                                             bool for_benchmark) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    const Node root(j, "$");
    root.only_keys({"seed", "scenes", "window", "estimator", "matrices", "smooth_in_sight", "split", "train",
                    "denoiser_arch", "predictor_arch", "kalman", "methods"});
    if (const auto v = root.opt("seed")) c.seed = v->unsigned_integer();
    const auto sc_opt = for_benchmark ? std::optional<Node>(root.at("scenes")) : root.opt("scenes");
    static const Json kNoObject = Json::object();
    static const Json kNoArray = Json::array();
    const Node sc = sc_opt ? *sc_opt : Node(kNoObject, "$.scenes");
    sc.only_keys({"simulate", "files"});
    if (const auto sims = sc.opt("simulate")) {
      for (std::size_t i = 0; i < sims->size(); ++i) {
        const Node s = (*sims)[i];
        s.only_keys({"count", "config"});
        SimulatedSource src;
        src.count = static_cast<int>(s.at("count").integer());
        if (const auto sim = s.opt("config")) src.sim = sim_config_from_json(sim->raw(), sim->path());
        c.scenes.simulate.push_back(src);
      }
    }
    if (const auto files = sc.opt("files")) {
      for (std::size_t i = 0; i < files->size(); ++i) c.scenes.files.push_back((*files)[i].str());
    }
    if (const auto v = root.opt("window")) c.window = window_from_json(v->raw(), v->path());
    if (const auto v = root.opt("estimator")) c.estimator = estimator_config_from_json(v->raw(), v->path());
    if (const auto v = root.opt("matrices")) c.matrices = v->wrap([&] { return matrix_source_from_string(v->str()); });
    if (const auto v = root.opt("smooth_in_sight")) c.smooth_in_sight = kalman_params_from_json(v->raw(), v->path());
    if (const auto v = root.opt("split")) {
      v->only_keys({"train", "validation", "test"});
      c.split.train = v->at("train").num();
      c.split.validation = v->at("validation").num();
      c.split.test = v->at("test").num();
    }
    if (const auto v = root.opt("train")) c.train = train_config_from_json(v->raw(), v->path());
    // Architecture frame counts follow the window unless given explicitly.
    c.denoiser_arch.window_frames = static_cast<int>(c.window.observation_span());
    c.predictor_arch.obs_frames = static_cast<int>(c.window.observation_span());
    c.predictor_arch.pred_frames = static_cast<int>(c.window.prediction_span());
    if (const auto v = root.opt("denoiser_arch")) {
      DenoiserArch a = denoiser_arch_from_json(v->raw(), v->path());
      if (!v->has("window_frames")) a.window_frames = c.denoiser_arch.window_frames;
      c.denoiser_arch = a;
    }
    if (const auto v = root.opt("predictor_arch")) {
      PredictorArch a = predictor_arch_from_json(v->raw(), v->path());
      if (!v->has("obs_frames")) a.obs_frames = c.predictor_arch.obs_frames;
      if (!v->has("pred_frames")) a.pred_frames = c.predictor_arch.pred_frames;
      c.predictor_arch = a;
    }
    if (const auto v = root.opt("kalman")) c.kalman = kalman_params_from_json(v->raw(), v->path());
    const auto methods_opt = for_benchmark ? std::optional<Node>(root.at("methods")) : root.opt("methods");
    const Node methods = methods_opt ? *methods_opt : Node(kNoArray, "$.methods");
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const Node m = methods[i];
      m.only_keys({"name", "pipeline", "denoiser", "predictor"});
      MethodSpec spec;
      spec.name = m.at("name").str();
      if (const auto p = m.opt("pipeline")) spec.pipeline = p->wrap([&] { return pipeline_kind_from_string(p->str()); });
      spec.denoiser = read_denoiser_choice(m.at("denoiser"));
      spec.predictor = read_predictor_choice(m.at("predictor"));
      c.methods.push_back(std::move(spec));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    throw Error(ErrorKind::config, e.what(), e.frames());
  }
  c.validate(for_benchmark);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool for_benchmark) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  try {
    return experiment_config_from_json(j, path.parent_path(), for_benchmark);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

Json to_json(const ExperimentConfig& c) {
  Json sims = Json::array();
  for (const auto& s : c.scenes.simulate) sims.push_back(Json{{"count", s.count}, {"config", to_json(s.sim)}});
  Json methods = Json::array();
  for (const auto& m : c.methods) {
    methods.push_back(Json{{"name", m.name},
                           {"pipeline", to_string(m.pipeline)},
                           {"denoiser", choice_json(m.denoiser)},
                           {"predictor", choice_json(m.predictor)}});
  }
  return Json{{"seed", c.seed},
              {"scenes", Json{{"simulate", std::move(sims)}, {"files", c.scenes.files}}},
              {"window", to_json(c.window)},
              {"estimator", to_json(c.estimator)},
              {"matrices", to_string(c.matrices)},
              {"smooth_in_sight", c.smooth_in_sight ? to_json(*c.smooth_in_sight) : Json(nullptr)},
              {"split", Json{{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}}},
              {"train", to_json(c.train)},
              {"denoiser_arch", to_json(c.denoiser_arch)},
              {"predictor_arch", to_json(c.predictor_arch)},
              {"kalman", to_json(c.kalman)},
              {"methods", std::move(methods)}};
}

std::string config_fingerprint(const ExperimentConfig& cfg) { return fingerprint(to_json(cfg)); }

std::vector<Scene> load_scenes(const ExperimentConfig& cfg) {
  std::vector<Scene> out;
  const std::uint64_t base = derive_key(cfg.seed, "scenes");
  for (std::size_t s = 0; s < cfg.scenes.simulate.size(); ++s) {
    const auto& src = cfg.scenes.simulate[s];
    for (int i = 0; i < src.count; ++i) {
      out.push_back(generate_scene(src.sim, derive_key(base, (static_cast<std::uint64_t>(s) << 32) + static_cast<std::uint64_t>(i))));
    }
  }
  std::vector<std::string> paths;
  for (const auto& pattern : cfg.scenes.files) {
    const std::string full = resolve(cfg, pattern).string();
    glob_t g{};
    const int rc = ::glob(full.c_str(), 0, nullptr, &g);
    if (rc == GLOB_NOMATCH) {
      globfree(&g);
      config_error("scene pattern '" + pattern + "' matches no files");
    }
    if (rc != 0) {
      globfree(&g);
      config_error("cannot expand scene pattern '" + pattern + "'");
    }
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  for (const auto& p : paths) out.push_back(load_scene(p));
  std::set<std::string> ids;
  for (const auto& s : out) {
    if (!ids.insert(s.scene_id).second) config_error("duplicate scene_id '" + s.scene_id + "'");
  }
  return out;
}

Split split_scenes(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(derive_key(seed, "split"));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n)));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(n))));
  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_val ? s.validation : s.test);
    dst.push_back(order[i]);
  }
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool BenchmarkResult::has_fatal() const {
  return std::any_of(failures.begin(), failures.end(), [](const Failure& f) { return f.fatal; });
}

DenoiserSpec load_denoiser(const DenoiserChoice& c, const ExperimentConfig& cfg) {
  switch (c.type) {
    case DenoiserChoice::Type::identity: return IdentityDenoiser{};
    case DenoiserChoice::Type::kalman: return c.kalman.value_or(cfg.kalman);
    case DenoiserChoice::Type::model: {
      if (c.path.empty()) config_error("model denoiser needs a path here");
      const auto path = resolve(cfg, c.path);
      try {
        return denoiser_model_from_json(read_json_file(path));
      } catch (const Error& e) {
        throw Error(ErrorKind::config, path.string() + ": " + e.what());
      }
    }
  }
  config_error("bad denoiser choice");
}

PredictorSpec load_predictor(const PredictorChoice& c, const ExperimentConfig& cfg) {
  if (c.type == PredictorChoice::Type::cv) return ConstantVelocityPredictor{};
  if (c.path.empty()) config_error("model predictor needs a path here");
  const auto path = resolve(cfg, c.path);
  try {
    return predictor_model_from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

BenchmarkResult run_benchmark(const ExperimentConfig& cfg, int jobs, const Logger& log) {
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  BenchmarkResult res;
  res.fingerprint = config_fingerprint(cfg);

  const std::vector<Scene> scenes = load_scenes(cfg);
  for (const auto& s : scenes) res.scene_ids.push_back(s.scene_id);
  res.split = split_scenes(scenes.size(), cfg.split, cfg.seed);
  if (res.split.test.empty()) config_error("the test split is empty");
  say("scenes: " + std::to_string(scenes.size()) + " (train " + std::to_string(res.split.train.size()) + ", validation " +
      std::to_string(res.split.validation.size()) + ", test " + std::to_string(res.split.test.size()) + ")");

  // Matrices once per scene; both pipelines consume the same ones.
  const PipelineSettings settings = cfg.settings();
  std::vector<std::optional<SceneMatrices>> mats(scenes.size());
  std::vector<std::optional<Failure>> mat_fail(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    try {
      mats[i] = scene_matrices(scenes[i], settings);
    } catch (const Error& e) {
      mat_fail[i] = Failure{"estimation", scenes[i].scene_id, error_kind(e), e.what(), false};
    }
  });
  for (auto& f : mat_fail) {
    if (f) res.failures.push_back(*f);
  }

  auto subset = [&](const std::vector<std::size_t>& idx) {
    std::vector<Scene> s;
    std::vector<std::optional<CameraMatrixSequence>> m;
    for (std::size_t i : idx) {
      s.push_back(scenes[i]);
      m.push_back(mats[i] ? std::optional(mats[i]->sequence) : std::nullopt);
    }
    return std::pair(std::move(s), std::move(m));
  };
  const auto [train_scenes, train_mats] = subset(res.split.train);
  const auto [val_scenes, val_mats] = subset(res.split.validation);

  auto epoch_logger = [&](const std::string& what) -> EpochCallback {
    if (!log) return {};
    return [&log, what](int epoch, double tr, double va) {
      if (epoch % 50 == 0) log(what + " epoch " + std::to_string(epoch) + ": train " + format_double(tr) +
                               ", validation " + format_double(va));
    };
  };

  // Training is serial: the denoiser first, then one predictor per
  // (pipeline, denoiser) pair.
  std::map<std::string, std::string> component_failed;  // component -> message
  std::optional<DenoiserModel> trained_denoiser;
  const bool need_denoiser =
      std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& m) { return trains_denoiser(m.denoiser); });
  if (need_denoiser) {
    say("training denoiser");
    try {
      TrainConfig tc = cfg.train;
      tc.seed = derive_key(cfg.seed, "train/denoiser");
      const SampleSet tr = build_denoising_samples(train_scenes, cfg.window, train_mats);
      const SampleSet va = build_denoising_samples(val_scenes, cfg.window, val_mats);
      auto t = train_denoiser(tr, va, cfg.denoiser_arch, tc, epoch_logger("denoiser"));
      res.histories.emplace_back("denoiser", t.history);
      res.models.emplace_back("denoiser", to_json(t.model));
      trained_denoiser = std::move(t.model);
      say("denoiser: best validation " + format_double(res.histories.back().second.best_validation) + " at epoch " +
          std::to_string(res.histories.back().second.best_epoch) + ", identity " +
          format_double(identity_denoising_loss(va.samples)));
    } catch (const Error& e) {
      component_failed["denoiser"] = e.what();
      res.failures.push_back({"training", "denoiser", error_kind(e), e.what(), true});
    }
  }

  auto denoiser_for = [&](const DenoiserChoice& c) -> DenoiserSpec {
    if (trains_denoiser(c)) {
      if (!trained_denoiser) throw Error(ErrorKind::state, "denoiser training failed");
      return *trained_denoiser;
    }
    return load_denoiser(c, cfg);
  };

  std::map<std::string, PredictorModel> trained_predictors;
  for (const auto& m : cfg.methods) {
    if (!trains_predictor(m.predictor)) continue;
    const std::string key = predictor_key(m);
    if (trained_predictors.contains(key) || component_failed.contains(key)) continue;
    say("training " + key);
    try {
      const DenoiserSpec den = denoiser_for(m.denoiser);
      TrainConfig tc = cfg.train;
      tc.seed = derive_key(cfg.seed, "train/" + key);
      PredictorArch arch = cfg.predictor_arch;
      PredictionSampleSet tr, va;
      if (m.pipeline == PipelineKind::vpd) {
        arch.channels = 2;
        tr = build_prediction_samples(train_scenes, cfg.window, train_mats, den);
        va = build_prediction_samples(val_scenes, cfg.window, val_mats, den);
      } else {
        arch.channels = 3;
        tr = build_world_prediction_samples(train_scenes, cfg.window, den);
        va = build_world_prediction_samples(val_scenes, cfg.window, den);
      }
      auto t = train_predictor(tr, va, arch, tc, epoch_logger(key));
      res.histories.emplace_back(key, t.history);
      res.models.emplace_back(key, to_json(t.model));
      say(key + ": best validation " + format_double(t.history.best_validation) + " at epoch " +
          std::to_string(t.history.best_epoch) + ", cv " + format_double(constant_velocity_loss(va.samples)));
      trained_predictors.emplace(key, std::move(t.model));
    } catch (const Error& e) {
      component_failed[key] = e.what();
      res.failures.push_back({"training", key, error_kind(e), e.what(), true});
    }
  }

  // Resolve every method up front; a method with a failed component is skipped.
  struct Resolved {
    std::optional<DenoiserSpec> denoiser;
    std::optional<PredictorSpec> predictor;
  };
  std::vector<Resolved> resolved(cfg.methods.size());
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    const auto& m = cfg.methods[k];
    try {
      resolved[k].denoiser = denoiser_for(m.denoiser);
      if (trains_predictor(m.predictor)) {
        const auto it = trained_predictors.find(predictor_key(m));
        if (it == trained_predictors.end()) throw Error(ErrorKind::state, "predictor training failed");
        resolved[k].predictor = it->second;
      } else {
        resolved[k].predictor = load_predictor(m.predictor, cfg);
      }
      if (const auto* pm = std::get_if<PredictorModel>(&*resolved[k].predictor)) {
        const int want = m.pipeline == PipelineKind::vpd ? 2 : 3;
        if (pm->channels != want) {
          throw Error(ErrorKind::config, "predictor model has " + std::to_string(pm->channels) + " channels, " +
                                             to_string(m.pipeline) + " needs " + std::to_string(want));
        }
      }
    } catch (const Error& e) {
      resolved[k] = {};
      res.failures.push_back({"setup", m.name, error_kind(e), e.what(), true});
    }
  }

  say("evaluating " + std::to_string(cfg.methods.size()) + " methods on " + std::to_string(res.split.test.size()) +
      " test scenes");
  const std::size_t nm = cfg.methods.size(), nt = res.split.test.size();
  std::vector<std::optional<std::vector<AgentMetrics>>> cell(nm * nt);
  std::vector<std::optional<Failure>> cell_fail(nm * nt);
  parallel_for(nt, jobs, [&](std::size_t t) {
    const std::size_t si = res.split.test[t];
    const Scene& scene = scenes[si];
    for (std::size_t k = 0; k < nm; ++k) {
      if (!resolved[k].denoiser || !mats[si]) continue;
      try {
        const auto& m = cfg.methods[k];
        const PipelineOutput out =
            m.pipeline == PipelineKind::vpd
                ? run_vpd_pipeline(scene, *mats[si], cfg.window, *resolved[k].denoiser, *resolved[k].predictor)
                : run_two_stage_baseline(scene, *mats[si], cfg.window, *resolved[k].denoiser, *resolved[k].predictor);
        auto metrics = evaluate_output(scene, out, cfg.window);
        for (const auto& a : metrics) {
          if (!std::isfinite(a.metrics.sum)) throw Error(ErrorKind::validation, "non-finite metric for " + a.agent_id);
        }
        cell[k * nt + t] = std::move(metrics);
      } catch (const Error& e) {
        cell_fail[k * nt + t] = Failure{"evaluation", cfg.methods[k].name + "/" + scene.scene_id, error_kind(e),
                                        e.what(), false};
      }
    }
  });
  for (auto& f : cell_fail) {
    if (f) res.failures.push_back(*f);
  }

  for (std::size_t t = 0; t < nt; ++t) res.per_scene.push_back({scenes[res.split.test[t]].scene_id, {}});
  for (std::size_t k = 0; k < nm; ++k) {
    std::vector<AgentMetrics> all;
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& c = cell[k * nt + t];
      std::optional<double> scene_sum;
      if (c && !c->empty()) {
        scene_sum = aggregate(*c).sum;
        all.insert(all.end(), c->begin(), c->end());
      }
      res.per_scene[t].sums.push_back(scene_sum);
    }
    if (all.empty()) {
      if (resolved[k].denoiser) {
        res.failures.push_back({"evaluation", cfg.methods[k].name, to_string(ErrorKind::empty),
                                "no test window could be evaluated", true});
      }
      continue;
    }
    res.reports.push_back(aggregate(std::move(all), cfg.methods[k].name, res.fingerprint));
    say(cfg.methods[k].name + ": SUM " + format_double(res.reports.back().sum));
  }
  return res;
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_text_file(path, dump_json(to_json(report)));
}

void write_benchmark(const BenchmarkResult& res, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  Json cfg_json = to_json(cfg);
  write_text_file(out / "config.json", dump_json(cfg_json));

  write_text_file(out / "comparison.csv", comparison_csv(res.reports));
  Json rows = Json::array();
  for (const auto& r : res.reports) {
    rows.push_back(Json{{"method", r.method},
                        {"sum", r.sum},
                        {"mse_d", r.mse_d},
                        {"mse_p", r.mse_p},
                        {"windows", r.per_agent.size()}});
  }
  write_text_file(out / "comparison.json", dump_json(Json{{"config_fingerprint", res.fingerprint},
                                                          {"tool_version", kToolVersion},
                                                          {"metric_definition", kMetricDefinition},
                                                          {"methods", std::move(rows)}}));
  for (const auto& r : res.reports) write_report(r, out / "reports" / (r.method + ".json"));

  std::string table = "scene_id";
  for (const auto& m : cfg.methods) table += "," + m.name;
  table += "\n";
  for (const auto& row : res.per_scene) {
    table += row.scene_id;
    for (const auto& s : row.sums) table += "," + (s ? format_double(*s) : std::string("NA"));
    table += "\n";
  }
  write_text_file(out / "per_scene.csv", table);

  auto ids = [&](const std::vector<std::size_t>& idx) {
    Json a = Json::array();
    for (std::size_t i : idx) a.push_back(res.scene_ids[i]);
    return a;
  };
  write_text_file(out / "split.json", dump_json(Json{{"train", ids(res.split.train)},
                                                     {"validation", ids(res.split.validation)},
                                                     {"test", ids(res.split.test)}}));
  for (const auto& [name, h] : res.histories) write_text_file(out / "training" / (name + ".json"), dump_json(to_json(h)));
  for (const auto& [name, m] : res.models) write_text_file(out / "models" / (name + ".json"), dump_json(m));

  Json fails = Json::array();
  for (const auto& f : res.failures) {
    fails.push_back(Json{{"stage", f.stage}, {"subject", f.subject}, {"kind", f.kind}, {"message", f.message},
                         {"fatal", f.fatal}});
  }
  write_text_file(out / "failures.json", dump_json(Json{{"complete", !res.has_fatal()}, {"failures", std::move(fails)}}));
}

}  // namespace ostk
