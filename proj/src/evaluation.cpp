#include "ostk/evaluation.hpp"

#include <cmath>
#include <cstdio>

namespace ostk {

double mse_t(const VisualTrajectory& a, const VisualTrajectory& b) {
  if (a.first_frame() != b.first_frame() || a.size() != b.size()) {
    std::vector<Frame> frames;
    const Frame lo = std::min(a.first_frame(), b.first_frame());
    const Frame hi = std::max(a.end_frame(), b.end_frame());
    for (Frame f = lo; f < hi; ++f) {
      if (!a.covers(f, f + 1) || !b.covers(f, f + 1)) frames.push_back(f);
    }
    throw Error(ErrorKind::coverage, "trajectories span different frames", std::move(frames));
  }
  const auto pa = a.present_points();
  const auto pb = b.present_points();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double du = pa[i].u - pb[i].u;
    const double dv = pa[i].v - pb[i].v;
    sum += du * du + dv * dv;
  }
  return sum / static_cast<double>(pa.size());
}

WindowMetrics make_metrics(double mse_d, double mse_p) { return {mse_d, mse_p, mse_d + mse_p}; }

WindowMetrics evaluate_window(const VisualTrajectory& projected, const VisualTrajectory& predicted,
                              const VisualTrajectory& gt_obs, const VisualTrajectory& gt_future) {
  if (predicted.first_frame() != projected.end_frame()) {
    throw Error(ErrorKind::coverage, "prediction does not start where the observation ends",
                {projected.end_frame()});
  }
  return make_metrics(mse_t(projected, gt_obs), mse_t(predicted, gt_future));
}

EvaluationReport aggregate(std::vector<AgentMetrics> windows, std::string method, std::string config_fingerprint) {
  if (windows.empty()) throw Error(ErrorKind::empty, "no evaluated windows to aggregate");
  double d = 0.0, p = 0.0;
  for (const auto& w : windows) {
    if (!std::isfinite(w.metrics.mse_d) || !std::isfinite(w.metrics.mse_p)) {
      throw Error(ErrorKind::validation, "non-finite metric for agent " + w.agent_id + " in " + w.scene_id);
    }
    d += w.metrics.mse_d;
    p += w.metrics.mse_p;
  }
  const auto n = static_cast<double>(windows.size());
  const WindowMetrics m = make_metrics(d / n, p / n);
  EvaluationReport r;
  r.method = std::move(method);
  r.mse_d = m.mse_d;
  r.mse_p = m.mse_p;
  r.sum = m.sum;
  r.per_agent = std::move(windows);
  r.config_fingerprint = std::move(config_fingerprint);
  return r;
}

SumCheck check_reported_sum(double mse_d, double mse_p, double reported_sum, int decimals) {
  SumCheck out;
  out.computed = mse_d + mse_p;
  const double unit = std::pow(10.0, decimals);
  out.consistent = std::llround(out.computed * unit) == std::llround(reported_sum * unit);
  if (!out.consistent) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "reported SUM %.*f differs from MSE-D + MSE-P = %.*f", decimals, reported_sum,
                  decimals, out.computed);
    out.note = buf;
  }
  return out;
}

}  // namespace ostk
