#include "ostk/trajectory.hpp"

#include <cmath>
#include <sstream>

namespace ostk {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::range: return "range";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::validation: return "validation";
    case ErrorKind::degenerate_projection: return "degenerate_projection";
    case ErrorKind::insufficient: return "insufficient";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::shape: return "shape";
    case ErrorKind::state: return "state";
    case ErrorKind::schema: return "schema";
    case ErrorKind::config: return "config";
    case ErrorKind::pipeline: return "pipeline";
    case ErrorKind::data_quality: return "data_quality";
    case ErrorKind::empty: return "empty";
    case ErrorKind::generation: return "generation";
  }
  return "unknown";
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::noisy: return "noisy";
    case Provenance::clean: return "clean";
    case Provenance::denoised: return "denoised";
  }
  return "unknown";
}

TimeWindow TimeWindow::make(Frame obs_begin, Frame obs_end, Frame pred_end) {
  TimeWindow w{obs_begin, obs_end, pred_end};
  w.validate();
  return w;
}

void TimeWindow::validate() const {
  if (obs_begin < 0 || obs_begin >= obs_end || obs_end > pred_end) {
    std::ostringstream os;
    os << "invalid time window (" << obs_begin << "," << obs_end << "," << pred_end
       << "): need 0 <= t_s < t_e <= t_p";
    throw Error(ErrorKind::validation, os.str());
  }
}

bool WorldPoint::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

bool PixelPoint::finite() const { return std::isfinite(u) && std::isfinite(v); }

namespace {

std::vector<Frame> missing_frames(Frame have_begin, Frame have_end, Frame want_begin, Frame want_end) {
  std::vector<Frame> missing;
  for (Frame f = want_begin; f < want_end; ++f) {
    if (f < have_begin || f >= have_end) missing.push_back(f);
  }
  return missing;
}

[[noreturn]] void throw_coverage(const char* what, std::vector<Frame> missing) {
  std::ostringstream os;
  os << what << ": " << missing.size() << " frame(s) missing";
  if (!missing.empty()) {
    os << " [" << missing.front();
    if (missing.size() > 1) os << ".." << missing.back();
    os << "]";
  }
  throw Error(ErrorKind::coverage, os.str(), std::move(missing));
}

}  // namespace

SensorTrajectory::SensorTrajectory(Frame first_frame, std::vector<WorldPoint> points, Provenance provenance)
    : first_(first_frame), points_(std::move(points)), provenance_(provenance) {
  if (first_ < 0) throw Error(ErrorKind::validation, "sensor trajectory starts at negative frame");
  if (points_.empty()) throw Error(ErrorKind::validation, "sensor trajectory is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].finite()) {
      throw Error(ErrorKind::validation, "sensor trajectory has non-finite sample",
                  {first_ + static_cast<Frame>(i)});
    }
  }
}

const WorldPoint& SensorTrajectory::at_frame(Frame f) const {
  if (f < first_ || f >= end_frame()) throw_coverage("sensor sample lookup", {f});
  return points_[static_cast<std::size_t>(f - first_)];
}

SensorTrajectory SensorTrajectory::sub(Frame begin, Frame end) const {
  if (!covers(begin, end)) throw_coverage("sensor trajectory", missing_frames(first_, end_frame(), begin, end));
  return {begin,
          std::vector<WorldPoint>(points_.begin() + (begin - first_), points_.begin() + (end - first_)),
          provenance_};
}

VisualTrajectory::VisualTrajectory(Frame first_frame, std::vector<std::optional<PixelPoint>> samples)
    : first_(first_frame), samples_(std::move(samples)) {
  if (first_ < 0) throw Error(ErrorKind::validation, "visual trajectory starts at negative frame");
  if (samples_.empty()) throw Error(ErrorKind::validation, "visual trajectory is empty");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i] && !samples_[i]->finite()) {
      throw Error(ErrorKind::validation, "visual trajectory has non-finite sample",
                  {first_ + static_cast<Frame>(i)});
    }
  }
}

VisualTrajectory VisualTrajectory::dense(Frame first_frame, std::span<const PixelPoint> points) {
  return {first_frame, std::vector<std::optional<PixelPoint>>(points.begin(), points.end())};
}

const std::optional<PixelPoint>& VisualTrajectory::at_frame(Frame f) const {
  if (f < first_ || f >= end_frame()) throw_coverage("visual sample lookup", {f});
  return samples_[static_cast<std::size_t>(f - first_)];
}

bool VisualTrajectory::fully_present(Frame begin, Frame end) const {
  if (!covers(begin, end)) return false;
  for (Frame f = begin; f < end; ++f) {
    if (!samples_[static_cast<std::size_t>(f - first_)]) return false;
  }
  return true;
}

std::vector<PixelPoint> VisualTrajectory::present_points() const {
  std::vector<PixelPoint> out;
  out.reserve(samples_.size());
  std::vector<Frame> absent;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i]) {
      out.push_back(*samples_[i]);
    } else {
      absent.push_back(first_ + static_cast<Frame>(i));
    }
  }
  if (!absent.empty()) throw_coverage("visual trajectory has absent samples", std::move(absent));
  return out;
}

VisualTrajectory VisualTrajectory::sub(Frame begin, Frame end) const {
  if (!covers(begin, end)) throw_coverage("visual trajectory", missing_frames(first_, end_frame(), begin, end));
  return {begin, std::vector<std::optional<PixelPoint>>(samples_.begin() + (begin - first_),
                                                        samples_.begin() + (end - first_))};
}

namespace {

template <typename Traj>
Traj slice_impl(const Traj& traj, const TimeWindow& window, Segment segment) {
  window.validate();
  const Frame begin = segment == Segment::observation ? window.obs_begin : window.obs_end;
  const Frame end = segment == Segment::observation ? window.obs_end : window.pred_end;
  if (begin == end) throw Error(ErrorKind::validation, "requested segment is empty");
  return traj.sub(begin, end);
}

}  // namespace

SensorTrajectory slice_window(const SensorTrajectory& traj, const TimeWindow& window, Segment segment) {
  return slice_impl(traj, window, segment);
}

VisualTrajectory slice_window(const VisualTrajectory& traj, const TimeWindow& window, Segment segment) {
  return slice_impl(traj, window, segment);
}

}  // namespace ostk
