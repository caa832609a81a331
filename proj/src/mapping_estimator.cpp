#include "ostk/mapping_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace ostk {

const char* to_string(EstimatorMode m) {
  return m == EstimatorMode::stationary ? "stationary" : "sliding_window";
}

const char* to_string(RobustLoss r) { return r == RobustLoss::none ? "none" : "huber"; }

EstimatorMode estimator_mode_from_string(const std::string& s) {
  if (s == "stationary") return EstimatorMode::stationary;
  if (s == "sliding_window") return EstimatorMode::sliding_window;
  throw Error(ErrorKind::schema, "unknown estimator mode '" + s + "'");
}

const char* to_string(Refinement r) { return r == Refinement::none ? "none" : "geometric"; }

Refinement refinement_from_string(const std::string& s) {
  if (s == "none") return Refinement::none;
  if (s == "geometric") return Refinement::geometric;
  throw Error(ErrorKind::schema, "unknown refinement '" + s + "'");
}

RobustLoss robust_loss_from_string(const std::string& s) {
  if (s == "none") return RobustLoss::none;
  if (s == "huber") return RobustLoss::huber;
  throw Error(ErrorKind::schema, "unknown robust loss '" + s + "'");
}

void EstimatorConfig::validate() const {
  if (window_radius < 0) throw Error(ErrorKind::validation, "window_radius must be >= 0");
  if (min_correspondences < 6) throw Error(ErrorKind::validation, "min_correspondences must be >= 6");
  if (!(huber_delta > 0.0)) throw Error(ErrorKind::validation, "huber_delta must be positive");
  if (!(condition_warn > 0.0)) throw Error(ErrorKind::validation, "condition_warn must be positive");
  if (refine_max_iterations < 1) throw Error(ErrorKind::validation, "refine_max_iterations must be >= 1");
}

bool SequenceEstimate::any_warning() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.ill_conditioned; });
}

namespace {

constexpr int kMaxIrlsIterations = 10;
constexpr double kMultiplicityTol = 1e-12;

double reprojection_error(const Matrix34& m, const Correspondence& c) {
  const Eigen::Vector3d h = m * c.world.vec().homogeneous();
  if (!(std::abs(h.z()) > kDepthEpsilon)) return std::numeric_limits<double>::infinity();
  return std::hypot(h.x() / h.z() - c.pixel.u, h.y() / h.z() - c.pixel.v);
}

struct Solution {
  Matrix34 m;
  double condition_number;
};

// Hartley normalization: world points to zero centroid and RMS distance √3,
// pixels to zero centroid and RMS distance √2.
struct Normalization {
  Eigen::Matrix4d tw = Eigen::Matrix4d::Identity();
  Eigen::Matrix3d tp = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d tp_inv = Eigen::Matrix3d::Identity();
  std::vector<Eigen::Vector4d> world;  // normalized, homogeneous
  std::vector<Eigen::Vector2d> pixel;  // normalized

  Matrix34 denormalize(const Matrix34& mn) const { return tp_inv * mn * tw; }
  Matrix34 normalize(const Matrix34& m) const { return tp * m * tw.inverse(); }
};

Normalization normalize(std::span<const Correspondence> corrs) {
  const auto n = static_cast<double>(corrs.size());
  Eigen::Vector3d cw = Eigen::Vector3d::Zero();
  Eigen::Vector2d cp = Eigen::Vector2d::Zero();
  for (const auto& c : corrs) {
    cw += c.world.vec();
    cp += c.pixel.vec();
  }
  cw /= n;
  cp /= n;
  double rw = 0.0, rp = 0.0;
  for (const auto& c : corrs) {
    rw += (c.world.vec() - cw).squaredNorm();
    rp += (c.pixel.vec() - cp).squaredNorm();
  }
  rw = std::sqrt(rw / n);
  rp = std::sqrt(rp / n);
  if (!(rw > 0.0) || !(rp > 0.0)) {
    throw Error(ErrorKind::degenerate, "all correspondences coincide");
  }
  const double sw = std::sqrt(3.0) / rw;
  const double sp = std::sqrt(2.0) / rp;
  Normalization out;
  out.tw.topLeftCorner<3, 3>() *= sw;
  out.tw.block<3, 1>(0, 3) = -sw * cw;
  out.tp.topLeftCorner<2, 2>() *= sp;
  out.tp.block<2, 1>(0, 2) = -sp * cp;
  out.tp_inv.topLeftCorner<2, 2>() /= sp;
  out.tp_inv.block<2, 1>(0, 2) = cp;
  for (const auto& c : corrs) {
    Eigen::Vector4d x;
    x << sw * (c.world.vec() - cw), 1.0;
    out.world.push_back(x);
    out.pixel.push_back(sp * (c.pixel.vec() - cp));
  }
  return out;
}

Solution solve_weighted(const Normalization& nz, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(nz.world.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double w = std::sqrt(weights[ui]);
    const Eigen::Vector4d& x = nz.world[ui];
    const Eigen::Vector2d& p = nz.pixel[ui];
    a.block<1, 4>(2 * i, 0) = w * x.transpose();
    a.block<1, 4>(2 * i, 8) = -w * p.x() * x.transpose();
    a.block<1, 4>(2 * i + 1, 4) = w * x.transpose();
    a.block<1, 4>(2 * i + 1, 8) = -w * p.y() * x.transpose();
  }

  // The 12x12 triangular factor has the same singular values and right
  // singular vectors as the tall constraint matrix.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Matrix<double, 12, 12> r = qr.matrixQR().topRows<12>().triangularView<Eigen::Upper>();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 12, 12>> svd(r, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(10) - sv(11) <= kMultiplicityTol * sv(0)) {
    throw Error(ErrorKind::degenerate, "degenerate correspondence configuration (null space dimension > 1)");
  }

  const Eigen::Matrix<double, 12, 1> h = svd.matrixV().col(11);
  Matrix34 mn;
  mn << h.segment<4>(0).transpose(), h.segment<4>(4).transpose(), h.segment<4>(8).transpose();
  return {nz.denormalize(mn), sv(0) / sv(10)};
}

// Start for near-planar scenes: fit a homography from normalized (x, y) to
// pixels and give z no influence. With noisy world points the algebraic
// solution of such scenes tends to collapse onto the plane itself.
std::optional<Matrix34> planar_start(const Normalization& nz, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(nz.world.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double w = std::sqrt(weights[ui]);
    const Eigen::Vector3d x(nz.world[ui](0), nz.world[ui](1), 1.0);
    const Eigen::Vector2d& p = nz.pixel[ui];
    a.block<1, 3>(2 * i, 0) = w * x.transpose();
    a.block<1, 3>(2 * i, 6) = -w * p.x() * x.transpose();
    a.block<1, 3>(2 * i + 1, 3) = w * x.transpose();
    a.block<1, 3>(2 * i + 1, 6) = -w * p.y() * x.transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(7) - sv(8) <= kMultiplicityTol * sv(0)) return std::nullopt;
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Matrix34 mn = Matrix34::Zero();
  for (int r = 0; r < 3; ++r) {
    mn(r, 0) = h(3 * r);
    mn(r, 1) = h(3 * r + 1);
    mn(r, 3) = h(3 * r + 2);
  }
  return nz.denormalize(mn);
}

double weighted_cost(const Normalization& nz, const Matrix34& mn, std::span<const double> weights) {
  double cost = 0.0;
  for (std::size_t i = 0; i < nz.world.size(); ++i) {
    const Eigen::Vector3d h = mn * nz.world[i];
    if (!(std::abs(h.z()) > kDepthEpsilon)) return std::numeric_limits<double>::infinity();
    cost += weights[i] * (h.head<2>() / h.z() - nz.pixel[i]).squaredNorm();
  }
  return cost;
}

// Levenberg-Marquardt on the weighted reprojection error, in normalized
// coordinates, with the Frobenius norm re-fixed after every step.
Matrix34 refine_geometric(const Normalization& nz, const Matrix34& start, std::span<const double> weights,
                          int max_iterations, int& iterations) {
  Matrix34 mn = nz.normalize(start);
  mn /= mn.norm();
  double cost = weighted_cost(nz, mn, weights);
  if (!std::isfinite(cost)) return start;
  double lambda = 1e-3;
  const auto n = nz.world.size();
  for (iterations = 0; iterations < max_iterations; ++iterations) {
    Eigen::Matrix<double, 12, 12> jtj = Eigen::Matrix<double, 12, 12>::Zero();
    Eigen::Matrix<double, 12, 1> g = Eigen::Matrix<double, 12, 1>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector4d& x = nz.world[i];
      const Eigen::Vector3d h = mn * x;
      const Eigen::Vector2d proj = h.head<2>() / h.z();
      const Eigen::Vector2d r = proj - nz.pixel[i];
      Eigen::Matrix<double, 2, 12> j = Eigen::Matrix<double, 2, 12>::Zero();
      j.block<1, 4>(0, 0) = x.transpose() / h.z();
      j.block<1, 4>(1, 4) = x.transpose() / h.z();
      j.block<1, 4>(0, 8) = -proj.x() * x.transpose() / h.z();
      j.block<1, 4>(1, 8) = -proj.y() * x.transpose() / h.z();
      jtj += weights[i] * j.transpose() * j;
      g += weights[i] * j.transpose() * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::Matrix<double, 12, 12> a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::Matrix<double, 12, 1> d = a.ldlt().solve(-g);
      Matrix34 next = mn;
      for (int k = 0; k < 12; ++k) next(k / 4, k % 4) += d(k);
      next /= next.norm();
      const double c = weighted_cost(nz, next, weights);
      if (c < cost) {
        const double gain = (cost - c) / cost;
        mn = next;
        cost = c;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain < 1e-12) return nz.denormalize(mn);
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return nz.denormalize(mn);
}

}  // namespace

FrameEstimate estimate_frame_matrix(std::span<const Correspondence> corrs, const EstimatorConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(corrs.size()) < cfg.min_correspondences) {
    std::ostringstream os;
    os << "need at least " << cfg.min_correspondences << " correspondences, got " << corrs.size();
    throw Error(ErrorKind::insufficient, os.str());
  }
  std::vector<double> base(corrs.size());
  std::vector<WorldPoint> reference(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto& c = corrs[i];
    if (!c.world.finite() || !c.pixel.finite()) throw Error(ErrorKind::validation, "non-finite correspondence");
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw Error(ErrorKind::validation, "correspondence weight outside (0, 1]");
    base[i] = c.weight;
    reference[i] = c.world;
  }

  const Normalization nz = normalize(corrs);
  Solution sol = solve_weighted(nz, base);
  int iterations = 0;
  std::vector<double> weights = base;
  if (cfg.robust == RobustLoss::huber) {
    for (; iterations < kMaxIrlsIterations; ++iterations) {
      double change = 0.0;
      for (std::size_t i = 0; i < corrs.size(); ++i) {
        const double e = reprojection_error(sol.m, corrs[i]);
        const double w = base[i] * (e > cfg.huber_delta ? cfg.huber_delta / e : 1.0);
        change = std::max(change, std::abs(w - weights[i]));
        weights[i] = w;
      }
      if (change < 1e-9) break;
      sol = solve_weighted(nz, weights);
    }
  }

  int refine_iterations = 0;
  if (cfg.refine == Refinement::geometric) {
    // Refine from the algebraic solution and from the planar start; keep the
    // lower reprojection cost.
    Matrix34 best = refine_geometric(nz, sol.m, weights, cfg.refine_max_iterations, refine_iterations);
    double best_cost = weighted_cost(nz, nz.normalize(best) / nz.normalize(best).norm(), weights);
    if (const auto start = planar_start(nz, weights)) {
      int its = 0;
      const Matrix34 alt = refine_geometric(nz, *start, weights, cfg.refine_max_iterations, its);
      const double alt_cost = weighted_cost(nz, nz.normalize(alt) / nz.normalize(alt).norm(), weights);
      if (alt_cost < best_cost) {
        best = alt;
        refine_iterations = its;
      }
    }
    sol.m = best;
  }

  FrameEstimate out{CameraMatrix::from_raw(sol.m, reference), {}};
  double sq = 0.0;
  for (const auto& c : corrs) {
    const double e = reprojection_error(out.matrix.m(), c);
    sq += e * e;
  }
  out.diagnostics.condition_number = sol.condition_number;
  out.diagnostics.rms_reprojection = std::sqrt(sq / (2.0 * static_cast<double>(corrs.size())));
  out.diagnostics.correspondence_count = corrs.size();
  out.diagnostics.ill_conditioned = sol.condition_number > cfg.condition_warn;
  out.diagnostics.irls_iterations = iterations;
  out.diagnostics.refine_iterations = refine_iterations;
  return out;
}

std::vector<Correspondence> collect_correspondences(const Scene& scene, const SightMask& mask,
                                                    const TimeWindow& window) {
  window.validate();
  std::vector<const AgentRecord*> agents;
  for (const auto& id : mask.in_sight) agents.push_back(&scene.agent(id));
  std::vector<Correspondence> out;
  out.reserve(agents.size() * static_cast<std::size_t>(window.observation_span()));
  for (Frame f = window.obs_begin; f < window.obs_end; ++f) {
    for (const auto* a : agents) {
      if (!a->visual) throw Error(ErrorKind::coverage, "in-sight agent " + a->agent_id + " has no visual track");
      const auto& px = a->visual->at_frame(f);
      if (!px) throw Error(ErrorKind::coverage, "in-sight agent " + a->agent_id + " absent at frame", {f});
      out.push_back({a->sensor_noisy.at_frame(f), *px, f, a->agent_id, 1.0});
    }
  }
  return out;
}

SequenceEstimate estimate_matrix_sequence(const Scene& scene, const SightMask& mask, const TimeWindow& window,
                                          const EstimatorConfig& cfg) {
  cfg.validate();
  window.validate();
  if (mask.in_sight.empty()) throw Error(ErrorKind::insufficient, "no in-sight agents to estimate from");
  const auto corrs = collect_correspondences(scene, mask, window);
  const auto span = static_cast<std::size_t>(window.observation_span());

  SequenceEstimate out{{window, {}}, {}, cfg};
  if (cfg.mode == EstimatorMode::stationary) {
    const auto est = estimate_frame_matrix(corrs, cfg);
    out.sequence.matrices.assign(span, est.matrix);
    out.diagnostics.assign(span, est.diagnostics);
    return out;
  }

  // Correspondences are frame-major, so each frame's block is contiguous.
  std::vector<std::size_t> first(span + 1, corrs.size());
  for (std::size_t i = corrs.size(); i-- > 0;) first[static_cast<std::size_t>(corrs[i].frame - window.obs_begin)] = i;
  for (std::size_t f = span; f-- > 0;) first[f] = std::min(first[f], first[f + 1]);

  std::vector<Frame> insufficient;
  for (std::size_t f = 0; f < span; ++f) {
    const std::size_t lo = f >= static_cast<std::size_t>(cfg.window_radius) ? f - cfg.window_radius : 0;
    const std::size_t hi = std::min(span, f + cfg.window_radius + 1);
    const std::span<const Correspondence> pooled(corrs.data() + first[lo], first[hi] - first[lo]);
    const Frame frame = window.obs_begin + static_cast<Frame>(f);
    if (static_cast<int>(pooled.size()) < cfg.min_correspondences) {
      insufficient.push_back(frame);
      continue;
    }
    try {
      const auto est = estimate_frame_matrix(pooled, cfg);
      out.sequence.matrices.push_back(est.matrix);
      out.diagnostics.push_back(est.diagnostics);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at frame " + std::to_string(frame), {frame});
    }
  }
  if (!insufficient.empty()) {
    std::ostringstream os;
    os << insufficient.size() << " frame(s) have fewer than " << cfg.min_correspondences
       << " pooled correspondences (first: " << insufficient.front() << ")";
    throw Error(ErrorKind::insufficient, os.str(), std::move(insufficient));
  }
  return out;
}

std::vector<AgentResidual> reprojection_report(const CameraMatrixSequence& seq, const Scene& scene,
                                               const SightMask& mask) {
  seq.validate();
  std::vector<AgentResidual> out;
  for (const auto& id : mask.in_sight) {
    const auto& a = scene.agent(id);
    if (!a.visual || !a.visual->covers(seq.window.obs_begin, seq.window.obs_end) ||
        !a.sensor_noisy.covers(seq.window.obs_begin, seq.window.obs_end)) {
      throw Error(ErrorKind::coverage, "agent " + id + " does not cover the sequence window");
    }
    AgentResidual r{id, 0, 0.0, 0.0};
    double sq = 0.0;
    for (Frame f = seq.window.obs_begin; f < seq.window.obs_end; ++f) {
      const auto& px = a.visual->at_frame(f);
      if (!px) throw Error(ErrorKind::coverage, "agent " + id + " absent at frame", {f});
      const double e = reprojection_error(seq.at_frame(f).m(), {a.sensor_noisy.at_frame(f), *px, f, id, 1.0});
      sq += e * e;
      r.max = std::max(r.max, e);
      ++r.count;
    }
    r.rms = std::sqrt(sq / (2.0 * static_cast<double>(r.count)));
    out.push_back(r);
  }
  return out;
}

}  // namespace ostk
