#include "ostk/io.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>

#include "json_reader.hpp"
#include "ostk/random.hpp"

namespace ostk {

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::schema, origin + ": malformed JSON: " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::config, "failed writing " + path.string());
}

std::string fingerprint(const Json& j) {
  // nlohmann::json keeps object keys sorted, which makes the dump canonical.
  const nlohmann::json sorted = nlohmann::json::parse(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(sorted.dump())));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

using detail::Node;

template <typename M>
Json matrix_rows(const M& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <int R, int C>
Eigen::Matrix<double, R, C> read_matrix(const Node& n) {
  if (n.size() != R) n.fail("expected " + std::to_string(R) + " rows");
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    const auto row = n[static_cast<std::size_t>(r)].numbers(C);
    for (int c = 0; c < C; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Json point_json(const WorldPoint& p) { return Json::array({p.x, p.y, p.z}); }
Json point_json(const PixelPoint& p) { return Json::array({p.u, p.v}); }

Json sensor_json(const SensorTrajectory& s) {
  Json a = Json::array();
  for (const auto& p : s.points()) a.push_back(point_json(p));
  return a;
}

Json visual_json(const VisualTrajectory& v) {
  Json a = Json::array();
  for (const auto& p : v.samples()) a.push_back(p ? point_json(*p) : Json(nullptr));
  return a;
}

SensorTrajectory read_sensor(const Node& n, Frame first, Provenance prov, std::size_t expected) {
  if (n.size() != expected) n.fail("expected " + std::to_string(expected) + " samples, got " + std::to_string(n.size()));
  std::vector<WorldPoint> pts;
  for (std::size_t i = 0; i < expected; ++i) {
    const auto v = n[i].numbers(3);
    pts.push_back({v[0], v[1], v[2]});
  }
  return {first, std::move(pts), prov};
}

VisualTrajectory read_visual(const Node& n, Frame first, std::size_t expected) {
  if (n.size() != expected) n.fail("expected " + std::to_string(expected) + " samples, got " + std::to_string(n.size()));
  std::vector<std::optional<PixelPoint>> pts;
  for (std::size_t i = 0; i < expected; ++i) {
    const Node s = n[i];
    if (s.is_null()) {
      pts.emplace_back(std::nullopt);
    } else {
      const auto v = s.numbers(2);
      pts.emplace_back(PixelPoint{v[0], v[1]});
    }
  }
  return {first, std::move(pts)};
}

void require_full(const std::string& what, Frame first, std::size_t size, Frame frame_count) {
  if (first != 0 || static_cast<Frame>(size) != frame_count) {
    throw Error(ErrorKind::schema, what + ": scene JSON stores every track over [0, frame_count)");
  }
}

Json mlp_json(const Mlp& net) {
  Json weights = Json::array(), biases = Json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Json w = Json::array();
    const auto& m = net.weight(l);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.push_back(m(r, c));
    }
    weights.push_back(std::move(w));
    Json b = Json::array();
    for (Eigen::Index r = 0; r < net.bias(l).size(); ++r) b.push_back(net.bias(l)(r));
    biases.push_back(std::move(b));
  }
  return Json{{"layer_sizes", net.layer_sizes()},
              {"activation", "tanh hidden, identity output"},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)}};
}

Mlp read_mlp(const Node& n) {
  std::vector<int> sizes;
  const Node ls = n.at("layer_sizes");
  for (std::size_t i = 0; i < ls.size(); ++i) sizes.push_back(static_cast<int>(ls[i].integer()));
  Mlp net = n.wrap([&] { return Mlp(sizes); });
  const Node w = n.at("weights"), b = n.at("biases");
  if (w.size() != net.layer_count() || b.size() != net.layer_count()) n.fail("weights/biases do not match layer_sizes");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& m = net.weight(l);
    const auto flat = w[l].numbers(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[static_cast<std::size_t>(r * m.cols() + c)];
    }
    auto& bias = net.bias(l);
    const auto bv = b[l].numbers(static_cast<std::size_t>(bias.size()));
    for (Eigen::Index r = 0; r < bias.size(); ++r) bias(r) = bv[static_cast<std::size_t>(r)];
  }
  return net;
}

Json norm_json(const std::optional<ChannelNorm>& norm) {
  if (!norm) return nullptr;
  Json mean = Json::array(), scale = Json::array();
  for (Eigen::Index i = 0; i < norm->mean.size(); ++i) {
    mean.push_back(norm->mean(i));
    scale.push_back(norm->scale(i));
  }
  return Json{{"mean", std::move(mean)}, {"scale", std::move(scale)}};
}

std::optional<ChannelNorm> read_norm(const Node& parent, std::size_t channels) {
  const auto n = parent.opt("norm_state");
  if (!n) return std::nullopt;
  const auto mean = n->at("mean").numbers(channels);
  const auto scale = n->at("scale").numbers(channels);
  ChannelNorm out{Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(channels)),
                  Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(channels))};
  for (double s : scale) {
    if (!(s > 0.0)) n->at("scale").fail("norm_state scales must be positive", ErrorKind::validation);
  }
  return out;
}

void check_format(const Node& n, const char* type) {
  const auto v = n.at("format_version").integer();
  if (v != kFormatVersion) n.at("format_version").fail("unsupported format_version " + std::to_string(v));
  if (const auto t = n.opt("model_type"); t && t->str() != type) {
    t->fail("expected model_type '" + std::string(type) + "', got '" + t->str() + "'");
  }
}

}  // namespace

// ---- scenes

Json to_json(const Scene& scene) {
  Json j;
  j["scene_id"] = scene.scene_id;
  j["frame_hz"] = scene.frame_hz;
  j["frame_count"] = scene.frame_count;
  j["image_size"] = Json::array({scene.image_width, scene.image_height});
  if (scene.camera_truth) {
    const auto& cam = *scene.camera_truth;
    Json ext = Json::array();
    for (const auto& e : cam.extrinsics) ext.push_back(matrix_rows(e.matrix()));
    j["camera"] = Json{{"intrinsics", matrix_rows(cam.intrinsics.matrix())}, {"extrinsics", std::move(ext)},
                       {"scale", cam.scale}};
  } else {
    j["camera"] = nullptr;
  }
  Json agents = Json::array();
  for (const auto& a : scene.agents) {
    const std::string where = "agent " + a.agent_id;
    require_full(where + " sensor_noisy", a.sensor_noisy.first_frame(), a.sensor_noisy.size(), scene.frame_count);
    Json aj;
    aj["agent_id"] = a.agent_id;
    aj["kind"] = to_string(a.kind);
    aj["sensor_noisy"] = sensor_json(a.sensor_noisy);
    if (a.sensor_clean) {
      require_full(where + " sensor_clean", a.sensor_clean->first_frame(), a.sensor_clean->size(), scene.frame_count);
      aj["sensor_clean"] = sensor_json(*a.sensor_clean);
    } else {
      aj["sensor_clean"] = nullptr;
    }
    if (a.visual) {
      require_full(where + " visual", a.visual->first_frame(), a.visual->size(), scene.frame_count);
      aj["visual"] = visual_json(*a.visual);
    } else {
      aj["visual"] = nullptr;
    }
    if (a.visual_gt_hidden) {
      require_full(where + " visual_gt_hidden", a.visual_gt_hidden->first_frame(), a.visual_gt_hidden->size(),
                   scene.frame_count);
      aj["visual_gt_hidden"] = visual_json(*a.visual_gt_hidden);
    }
    agents.push_back(std::move(aj));
  }
  j["agents"] = std::move(agents);
  return j;
}

Scene scene_from_json(const Json& j) {
  const Node root(j, "$");
  root.only_keys({"scene_id", "frame_hz", "frame_count", "image_size", "camera", "agents"});
  Scene s;
  s.scene_id = root.at("scene_id").str();
  s.frame_hz = root.at("frame_hz").num();
  if (!(s.frame_hz > 0.0)) root.at("frame_hz").fail("must be positive");
  s.frame_count = root.at("frame_count").integer();
  if (s.frame_count < 1) root.at("frame_count").fail("must be >= 1");
  const auto n = static_cast<std::size_t>(s.frame_count);
  const Node size = root.at("image_size");
  if (size.size() != 2) size.fail("expected [width, height]");
  s.image_width = static_cast<int>(size[0].integer());
  s.image_height = static_cast<int>(size[1].integer());
  if (s.image_width <= 0 || s.image_height <= 0) size.fail("image size must be positive");

  if (const auto cam = root.opt("camera")) {
    cam->only_keys({"intrinsics", "extrinsics", "scale"});
    CameraTruth truth;
    const Node kn = cam->at("intrinsics");
    truth.intrinsics = kn.wrap([&] { return CameraIntrinsics::from_matrix(read_matrix<3, 3>(kn)); });
    const Node en = cam->at("extrinsics");
    if (en.size() != n) {
      en.fail("extrinsics list has " + std::to_string(en.size()) + " entries, frame_count is " +
              std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Node e = en[i];
      truth.extrinsics.push_back(e.wrap([&] {
        auto rt = CameraExtrinsics::from_matrix(read_matrix<3, 4>(e));
        rt.validate();
        return rt;
      }));
    }
    truth.scale = cam->at("scale").num();
    if (!(truth.scale > 0.0)) cam->at("scale").fail("must be positive", ErrorKind::validation);
    s.camera_truth = std::move(truth);
  }

  const Node agents = root.at("agents");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Node a = agents[i];
    a.only_keys({"agent_id", "kind", "sensor_noisy", "sensor_clean", "visual", "visual_gt_hidden"});
    const std::string id = a.at("agent_id").str();
    if (!ids.insert(id).second) a.at("agent_id").fail("duplicate agent_id '" + id + "'");
    const Node kind = a.at("kind");
    AgentRecord rec{id, kind.wrap([&] { return agent_kind_from_string(kind.str()); }),
                    read_sensor(a.at("sensor_noisy"), 0, Provenance::noisy, n), std::nullopt, std::nullopt,
                    std::nullopt};
    if (const auto c = a.opt("sensor_clean")) rec.sensor_clean = read_sensor(*c, 0, Provenance::clean, n);
    if (const auto v = a.opt("visual")) rec.visual = read_visual(*v, 0, n);
    if (const auto v = a.opt("visual_gt_hidden")) rec.visual_gt_hidden = read_visual(*v, 0, n);
    s.agents.push_back(std::move(rec));
  }
  root.wrap([&] {
    s.validate();
    return 0;
  });
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    return scene_from_json(j);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.frames());
  }
}

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  write_text_file(path, dump_json(to_json(scene)));
}

// ---- small config blocks

Json to_json(const TimeWindow& w) { return Json::array({w.obs_begin, w.obs_end, w.pred_end}); }

TimeWindow window_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  if (n.size() != 3) n.fail("expected [t_s, t_e, t_p]");
  return n.wrap([&] { return TimeWindow::make(n[0].integer(), n[1].integer(), n[2].integer()); });
}

TimeWindow parse_window(const std::string& text) {
  std::vector<Frame> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Frame f = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), f);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw Error(ErrorKind::config, "window must be 't_s,t_e,t_p', got '" + text + "'");
    }
    v.push_back(f);
  }
  if (v.size() != 3) throw Error(ErrorKind::config, "window must be 't_s,t_e,t_p', got '" + text + "'");
  try {
    return TimeWindow::make(v[0], v[1], v[2]);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("invalid window: ") + e.what());
  }
}

Json to_json(const NoiseModel& n) {
  return Json{{"kind", to_string(n.kind)},
              {"sigma_xy", n.sigma_xy},
              {"sigma_z", n.sigma_z},
              {"drift_step_sigma", n.drift_step_sigma}};
}

Json to_json(const SimConfig& c) {
  return Json{{"agent_count", c.agent_count},
              {"frame_count", c.frame_count},
              {"frame_hz", c.frame_hz},
              {"motion", to_string(c.motion)},
              {"camera_mode", to_string(c.camera_mode)},
              {"fov_degrees", c.fov_degrees},
              {"image_size", Json::array({c.image_width, c.image_height})},
              {"noise", to_json(c.noise)},
              {"out_of_sight_count", c.out_of_sight_count},
              {"pixel_noise_sigma", c.pixel_noise_sigma}};
}

SimConfig sim_config_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"agent_count", "frame_count", "frame_hz", "motion", "camera_mode", "fov_degrees", "image_size", "noise",
               "out_of_sight_count", "pixel_noise_sigma"});
  SimConfig c;
  if (const auto v = n.opt("agent_count")) c.agent_count = static_cast<int>(v->integer());
  if (const auto v = n.opt("frame_count")) c.frame_count = v->integer();
  if (const auto v = n.opt("frame_hz")) c.frame_hz = v->num();
  if (const auto v = n.opt("motion")) c.motion = v->wrap([&] { return motion_kind_from_string(v->str()); });
  if (const auto v = n.opt("camera_mode")) c.camera_mode = v->wrap([&] { return camera_mode_from_string(v->str()); });
  if (const auto v = n.opt("fov_degrees")) c.fov_degrees = v->num();
  if (const auto v = n.opt("image_size")) {
    if (v->size() != 2) v->fail("expected [width, height]");
    c.image_width = static_cast<int>((*v)[0].integer());
    c.image_height = static_cast<int>((*v)[1].integer());
  }
  if (const auto nz = n.opt("noise")) {
    nz->only_keys({"kind", "sigma_xy", "sigma_z", "drift_step_sigma"});
    if (const auto v = nz->opt("kind")) c.noise.kind = v->wrap([&] { return noise_kind_from_string(v->str()); });
    if (const auto v = nz->opt("sigma_xy")) c.noise.sigma_xy = v->num();
    if (const auto v = nz->opt("sigma_z")) c.noise.sigma_z = v->num();
    if (const auto v = nz->opt("drift_step_sigma")) c.noise.drift_step_sigma = v->num();
  }
  if (const auto v = n.opt("out_of_sight_count")) c.out_of_sight_count = static_cast<int>(v->integer());
  if (const auto v = n.opt("pixel_noise_sigma")) c.pixel_noise_sigma = v->num();
  n.wrap([&] {
    c.validate();
    return 0;
  });
  return c;
}

Json to_json(const EstimatorConfig& c) {
  return Json{{"mode", to_string(c.mode)},
              {"window_radius", c.window_radius},
              {"min_correspondences", c.min_correspondences},
              {"robust", to_string(c.robust)},
              {"huber_delta", c.huber_delta},
              {"condition_warn", c.condition_warn},
              {"refine", to_string(c.refine)},
              {"refine_max_iterations", c.refine_max_iterations}};
}

EstimatorConfig estimator_config_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"mode", "window_radius", "min_correspondences", "robust", "huber_delta", "condition_warn", "refine",
               "refine_max_iterations"});
  EstimatorConfig c;
  if (const auto v = n.opt("mode")) c.mode = v->wrap([&] { return estimator_mode_from_string(v->str()); });
  if (const auto v = n.opt("window_radius")) c.window_radius = static_cast<int>(v->integer());
  if (const auto v = n.opt("min_correspondences")) c.min_correspondences = static_cast<int>(v->integer());
  if (const auto v = n.opt("robust")) c.robust = v->wrap([&] { return robust_loss_from_string(v->str()); });
  if (const auto v = n.opt("huber_delta")) c.huber_delta = v->num();
  if (const auto v = n.opt("condition_warn")) c.condition_warn = v->num();
  if (const auto v = n.opt("refine")) c.refine = v->wrap([&] { return refinement_from_string(v->str()); });
  if (const auto v = n.opt("refine_max_iterations")) c.refine_max_iterations = static_cast<int>(v->integer());
  n.wrap([&] {
    c.validate();
    return 0;
  });
  return c;
}

Json to_json(const KalmanParams& k) {
  return Json{{"process_accel_sigma", k.process_accel_sigma},
              {"meas_sigma_xy", k.meas_sigma_xy},
              {"meas_sigma_z", k.meas_sigma_z},
              {"init_cov_scale", k.init_cov_scale}};
}

KalmanParams kalman_params_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"process_accel_sigma", "meas_sigma_xy", "meas_sigma_z", "init_cov_scale"});
  KalmanParams k;
  if (const auto v = n.opt("process_accel_sigma")) k.process_accel_sigma = v->num();
  if (const auto v = n.opt("meas_sigma_xy")) k.meas_sigma_xy = v->num();
  if (const auto v = n.opt("meas_sigma_z")) k.meas_sigma_z = v->num();
  if (const auto v = n.opt("init_cov_scale")) k.init_cov_scale = v->num();
  n.wrap([&] {
    k.validate();
    return 0;
  });
  return k;
}

Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"step_size", c.step_size},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"batch", c.batch},
              {"seed", c.seed},
              {"early_stop_patience", c.early_stop_patience}};
}

TrainConfig train_config_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"epochs", "step_size", "adam_beta1", "adam_beta2", "adam_eps", "batch", "seed", "early_stop_patience"});
  TrainConfig c;
  if (const auto v = n.opt("epochs")) c.epochs = static_cast<int>(v->integer());
  if (const auto v = n.opt("step_size")) c.step_size = v->num();
  if (const auto v = n.opt("adam_beta1")) c.adam_beta1 = v->num();
  if (const auto v = n.opt("adam_beta2")) c.adam_beta2 = v->num();
  if (const auto v = n.opt("adam_eps")) c.adam_eps = v->num();
  if (const auto v = n.opt("batch")) c.batch = static_cast<int>(v->integer());
  if (const auto v = n.opt("seed")) c.seed = v->unsigned_integer();
  if (const auto v = n.opt("early_stop_patience")) c.early_stop_patience = static_cast<int>(v->integer());
  n.wrap([&] {
    c.validate();
    return 0;
  });
  return c;
}

Json to_json(const DenoiserArch& a) {
  return Json{{"window_frames", a.window_frames},
              {"context_radius", a.context_radius},
              {"hidden", a.hidden},
              {"residual", a.residual}};
}

DenoiserArch denoiser_arch_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"window_frames", "context_radius", "hidden", "residual"});
  DenoiserArch a;
  if (const auto v = n.opt("window_frames")) a.window_frames = static_cast<int>(v->integer());
  if (const auto v = n.opt("context_radius")) a.context_radius = static_cast<int>(v->integer());
  if (const auto v = n.opt("hidden")) a.hidden = static_cast<int>(v->integer());
  if (const auto v = n.opt("residual")) a.residual = v->boolean();
  return a;
}

Json to_json(const PredictorArch& a) {
  return Json{{"obs_frames", a.obs_frames}, {"pred_frames", a.pred_frames}, {"hidden", a.hidden},
              {"channels", a.channels}, {"trend_frames", a.trend_frames}};
}

PredictorArch predictor_arch_from_json(const Json& j, const std::string& path) {
  const Node n(j, path);
  n.only_keys({"obs_frames", "pred_frames", "hidden", "channels", "trend_frames"});
  PredictorArch a;
  if (const auto v = n.opt("obs_frames")) a.obs_frames = static_cast<int>(v->integer());
  if (const auto v = n.opt("pred_frames")) a.pred_frames = static_cast<int>(v->integer());
  if (const auto v = n.opt("hidden")) a.hidden = static_cast<int>(v->integer());
  if (const auto v = n.opt("channels")) a.channels = static_cast<int>(v->integer());
  if (const auto v = n.opt("trend_frames")) a.trend_frames = static_cast<int>(v->integer());
  return a;
}

// ---- models

Json to_json(const DenoiserModel& m) {
  Json j{{"format_version", kFormatVersion},
         {"model_type", "denoiser"},
         {"window_frames", m.window_frames},
         {"context_radius", m.context_radius},
         {"residual", m.residual}};
  const Json net = mlp_json(m.net);
  for (const auto& [k, v] : net.items()) j[k] = v;
  j["norm_state"] = norm_json(m.norm);
  return j;
}

DenoiserModel denoiser_model_from_json(const Json& j) {
  const Node n(j, "$");
  n.only_keys({"format_version", "model_type", "window_frames", "context_radius", "residual", "layer_sizes",
               "activation", "weights", "biases", "norm_state"});
  check_format(n, "denoiser");
  DenoiserModel m;
  m.window_frames = static_cast<int>(n.at("window_frames").integer());
  m.context_radius = static_cast<int>(n.at("context_radius").integer());
  m.residual = n.at("residual").boolean();
  m.net = read_mlp(n);
  const auto expected = DenoiserArch{m.window_frames, m.context_radius, 1, m.residual}.layer_sizes();
  if (m.net.input_size() != expected.front() || m.net.output_size() != expected.back()) {
    n.at("layer_sizes").fail("layer sizes do not match window_frames / context_radius", ErrorKind::shape);
  }
  m.norm = read_norm(n, 3);
  return m;
}

Json to_json(const PredictorModel& m) {
  Json j{{"format_version", kFormatVersion},
         {"model_type", "predictor"},
         {"obs_frames", m.obs_frames},
         {"pred_frames", m.pred_frames},
         {"channels", m.channels},
         {"trend_frames", m.trend_frames}};
  const Json net = mlp_json(m.net);
  for (const auto& [k, v] : net.items()) j[k] = v;
  j["norm_state"] = norm_json(m.norm);
  return j;
}

PredictorModel predictor_model_from_json(const Json& j) {
  const Node n(j, "$");
  n.only_keys({"format_version", "model_type", "obs_frames", "pred_frames", "channels", "trend_frames", "layer_sizes",
               "activation", "weights", "biases", "norm_state"});
  check_format(n, "predictor");
  PredictorModel m;
  m.obs_frames = static_cast<int>(n.at("obs_frames").integer());
  m.pred_frames = static_cast<int>(n.at("pred_frames").integer());
  m.channels = static_cast<int>(n.at("channels").integer());
  if (m.channels != 2 && m.channels != 3) n.at("channels").fail("must be 2 or 3");
  if (const auto v = n.opt("trend_frames")) m.trend_frames = static_cast<int>(v->integer());
  if (m.trend_frames < 0 || m.trend_frames == 1 || m.trend_frames > m.obs_frames) {
    n.at("trend_frames").fail("must be 0 or in [2, obs_frames]");
  }
  m.net = read_mlp(n);
  if (m.net.input_size() != m.channels * m.obs_frames || m.net.output_size() != m.channels * m.pred_frames) {
    n.at("layer_sizes").fail("layer sizes do not match obs_frames / pred_frames", ErrorKind::shape);
  }
  m.norm = read_norm(n, static_cast<std::size_t>(m.channels));
  return m;
}

Json to_json(const LossHistory& h) {
  return Json{{"train", h.train},
              {"validation", h.validation},
              {"best_epoch", h.best_epoch},
              {"best_validation", h.best_validation},
              {"skipped_windows", h.skipped_windows},
              {"total_windows", h.total_windows}};
}

// ---- matrices, pipeline outputs, reports

Json to_json(const SceneMatrices& m, const std::string& scene_id, MatrixSource source) {
  Json mats = Json::array();
  Json scales = Json::array();
  for (const auto& c : m.sequence.matrices) {
    mats.push_back(matrix_rows(c.m()));
    scales.push_back(c.scale());
  }
  Json diag = Json::array();
  for (std::size_t i = 0; i < m.diagnostics.size(); ++i) {
    const auto& d = m.diagnostics[i];
    diag.push_back(Json{{"frame", m.sequence.window.obs_begin + static_cast<Frame>(i)},
                        {"condition_number", d.condition_number},
                        {"rms_reprojection", d.rms_reprojection},
                        {"correspondence_count", d.correspondence_count},
                        {"ill_conditioned", d.ill_conditioned},
                        {"irls_iterations", d.irls_iterations},
                        {"refine_iterations", d.refine_iterations}});
  }
  return Json{{"format_version", kFormatVersion},
              {"scene_id", scene_id},
              {"source", to_string(source)},
              {"window", to_json(m.sequence.window)},
              {"matrices", std::move(mats)},
              {"scales", std::move(scales)},
              {"diagnostics", Json{{"warning", m.warning}, {"frames", std::move(diag)}}}};
}

CameraMatrixSequence matrices_from_json(const Json& j) {
  const Node n(j, "$");
  const auto v = n.at("format_version").integer();
  if (v != kFormatVersion) n.at("format_version").fail("unsupported format_version " + std::to_string(v));
  CameraMatrixSequence seq;
  seq.window = window_from_json(n.at("window").raw(), "$.window");
  const Node mats = n.at("matrices");
  if (static_cast<Frame>(mats.size()) != seq.window.observation_span()) {
    mats.fail("expected one matrix per observation frame");
  }
  // With scales the matrices are taken as already canonical and kept
  // bit-for-bit; hand-written files may omit them and give any raw 3x4.
  const auto scales = n.opt("scales");
  if (scales && scales->size() != mats.size()) scales->fail("expected one scale per matrix");
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const Node m = mats[i];
    seq.matrices.push_back(m.wrap([&] {
      return scales ? CameraMatrix::restore(read_matrix<3, 4>(m), (*scales)[i].num())
                    : CameraMatrix::from_raw(read_matrix<3, 4>(m));
    }));
  }
  n.wrap([&] {
    seq.validate();
    return 0;
  });
  return seq;
}

Json to_json(const PipelineOutput& out, const TimeWindow& window) {
  Json agents = Json::array();
  for (const auto& a : out.agents) {
    Json aj{{"agent_id", a.agent_id},
            {"denoised", sensor_json(a.denoised)},
            {"projected", visual_json(a.projected)},
            {"predicted_first_frame", a.predicted.first_frame()},
            {"predicted", visual_json(a.predicted)}};
    if (a.predicted_world) aj["predicted_world"] = sensor_json(*a.predicted_world);
    agents.push_back(std::move(aj));
  }
  return Json{{"format_version", kFormatVersion},
              {"scene_id", out.scene_id},
              {"window", to_json(window)},
              {"estimator_warning", out.estimator_warning},
              {"agents", std::move(agents)}};
}

PredictionFile prediction_from_json(const Json& j) {
  const Node n(j, "$");
  const auto v = n.at("format_version").integer();
  if (v != kFormatVersion) n.at("format_version").fail("unsupported format_version " + std::to_string(v));
  PredictionFile out;
  out.scene_id = n.at("scene_id").str();
  out.window = window_from_json(n.at("window").raw(), "$.window");
  const auto obs = static_cast<std::size_t>(out.window.observation_span());
  const auto pred = static_cast<std::size_t>(out.window.prediction_span());
  const Node agents = n.at("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Node a = agents[i];
    const Frame first = a.at("predicted_first_frame").integer();
    if (first != out.window.obs_end) a.at("predicted_first_frame").fail("must equal t_e");
    AgentOutput ao{a.at("agent_id").str(),
                   read_sensor(a.at("denoised"), out.window.obs_begin, Provenance::denoised, obs),
                   read_visual(a.at("projected"), out.window.obs_begin, obs),
                   read_visual(a.at("predicted"), first, pred),
                   std::nullopt};
    if (const auto w = a.opt("predicted_world")) ao.predicted_world = read_sensor(*w, first, Provenance::denoised, pred);
    out.agents.push_back(std::move(ao));
  }
  return out;
}

Json to_json(const EvaluationReport& r) {
  Json per = Json::array();
  for (const auto& a : r.per_agent) {
    per.push_back(Json{{"scene_id", a.scene_id},
                       {"agent_id", a.agent_id},
                       {"mse_d", a.metrics.mse_d},
                       {"mse_p", a.metrics.mse_p},
                       {"sum", a.metrics.sum}});
  }
  return Json{{"method", r.method},
              {"sum", r.sum},
              {"mse_d", r.mse_d},
              {"mse_p", r.mse_p},
              {"windows", r.per_agent.size()},
              {"config_fingerprint", r.config_fingerprint},
              {"tool_version", r.tool_version},
              {"metric_definition", r.metric_definition},
              {"per_agent", std::move(per)}};
}

std::string comparison_csv(const std::vector<EvaluationReport>& reports) {
  std::string out = "method,SUM,MSE-D,MSE-P,windows\n";
  for (const auto& r : reports) {
    std::string name = r.method;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : name) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = q + "\"";
    }
    out += name + "," + format_double(r.sum) + "," + format_double(r.mse_d) + "," + format_double(r.mse_p) + "," +
           std::to_string(r.per_agent.size()) + "\n";
  }
  return out;
}

}  // namespace ostk
