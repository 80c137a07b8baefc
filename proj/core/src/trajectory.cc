#include "rffslam/trajectory.hpp"

#include <algorithm>

#include "rffslam/errors.hpp"

namespace rffslam {

std::vector<double> unwrap_headings(const Trajectory& trajectory) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const auto& sp : trajectory) {
    if (out.empty()) {
      out.push_back(sp.pose.heading);
    } else {
      out.push_back(out.back() + wrap_angle(sp.pose.heading - out.back()));
    }
  }
  return out;
}

Pose2D interpolate_linear(const Trajectory& trajectory, double t) {
  if (trajectory.empty()) throw InvalidArgument("interpolate_linear: empty trajectory");
  if (t <= trajectory.front().time) return trajectory.front().pose;
  if (t >= trajectory.back().time) return trajectory.back().pose;
  const auto upper = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                                      [](double v, const StampedPose& sp) { return v < sp.time; });
  const auto& b = *upper;
  const auto& a = *(upper - 1);
  const double span = b.time - a.time;
  const double s = span > 0.0 ? (t - a.time) / span : 0.0;
  const double dheading = wrap_angle(b.pose.heading - a.pose.heading);
  return {a.pose.x + s * (b.pose.x - a.pose.x), a.pose.y + s * (b.pose.y - a.pose.y),
          wrap_angle(a.pose.heading + s * dheading)};
}

}  // namespace rffslam
