#pragma once

// Pixel-space error metrics and evaluation reports.

#include <string>
#include <vector>

#include "ostk/trajectory.hpp"

namespace ostk {

/// Mean over frames of the squared Euclidean pixel distance. Both inputs must
/// span the same frames with no absent samples.
double mse_t(const VisualTrajectory& a, const VisualTrajectory& b);

struct WindowMetrics {
  double mse_d = 0.0;
  double mse_p = 0.0;
  double sum = 0.0;  // mse_d + mse_p, computed once

  bool operator==(const WindowMetrics&) const = default;
};

WindowMetrics make_metrics(double mse_d, double mse_p);

/// `projected` and `gt_obs` cover the observation span; `predicted` and
/// `gt_future` cover the prediction span that directly follows it.
WindowMetrics evaluate_window(const VisualTrajectory& projected, const VisualTrajectory& predicted,
                              const VisualTrajectory& gt_obs, const VisualTrajectory& gt_future);

struct AgentMetrics {
  std::string scene_id;
  std::string agent_id;
  WindowMetrics metrics;

  bool operator==(const AgentMetrics&) const = default;
};

inline constexpr const char* kMetricDefinition =
    "mse_t = mean over frames of squared Euclidean pixel distance; sum = mse_d + mse_p; "
    "aggregation = unweighted mean over evaluated windows";
inline constexpr const char* kToolVersion = "ostk 0.1.0";

struct EvaluationReport {
  std::string method;
  double mse_d = 0.0;
  double mse_p = 0.0;
  double sum = 0.0;
  std::vector<AgentMetrics> per_agent;
  std::string config_fingerprint;
  std::string tool_version = kToolVersion;
  std::string metric_definition = kMetricDefinition;

  bool operator==(const EvaluationReport&) const = default;
};

/// Unweighted mean of per-window metrics; sum is recomputed from the means.
EvaluationReport aggregate(std::vector<AgentMetrics> windows, std::string method = {},
                           std::string config_fingerprint = {});

/// Result of checking a published (rounded) SUM against its components.
struct SumCheck {
  double computed = 0.0;
  bool consistent = false;  // computed rounds to the reported value
  std::string note;
};

SumCheck check_reported_sum(double mse_d, double mse_p, double reported_sum, int decimals = 2);

}  // namespace ostk
