#include "rffslam/priors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rffslam/errors.hpp"

namespace rffslam {

Pose2D motion_prior(const Pose2D& prev, const OdometryControl& control, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("motion_prior: dt must be positive");
  const double step = control.linear_velocity * dt;
  return {prev.x + step * std::cos(prev.heading), prev.y + step * std::sin(prev.heading),
          wrap_angle(prev.heading + control.angular_velocity * dt)};
}

Trajectory integrate_odometry(const Pose2D& initial, std::span<const OdometryControl> odometry) {
  Trajectory out;
  if (odometry.empty()) return out;
  out.reserve(odometry.size());
  out.push_back({odometry.front().time, initial});
  for (std::size_t i = 1; i < odometry.size(); ++i) {
    const double dt = odometry[i].time - odometry[i - 1].time;
    if (!(dt > 0.0)) {
      throw InvalidArgument("integrate_odometry: timestamps must be strictly increasing");
    }
    out.push_back({odometry[i].time, motion_prior(out.back().pose, odometry[i], dt)});
  }
  return out;
}

Trajectory refresh_motion_prior(const PriorMeanFn& estimate,
                                std::span<const OdometryControl> odometry, double horizon) {
  Trajectory out;
  if (odometry.empty()) return out;
  out.reserve(odometry.size());
  out.push_back({odometry.front().time, estimate(odometry.front().time)});
  for (std::size_t i = 1; i < odometry.size(); ++i) {
    const double dt = odometry[i].time - odometry[i - 1].time;
    if (!(dt > 0.0)) {
      throw InvalidArgument("refresh_motion_prior: timestamps must be strictly increasing");
    }
    const double t_prev = odometry[i - 1].time;
    const Pose2D from = t_prev <= horizon ? estimate(t_prev) : out.back().pose;
    out.push_back({odometry[i].time, motion_prior(from, odometry[i], dt)});
  }
  return out;
}

Pose2D SplineTrajectory::operator()(double t) const {
  return {x_(t), y_(t), wrap_angle(heading_(t))};
}

std::vector<double> spline_weights(std::span<const double> residuals, double weight_floor) {
  if (!(weight_floor > 0.0)) throw InvalidArgument("spline_weights: weight floor must be positive");
  std::vector<double> weights;
  weights.reserve(residuals.size());
  double sum = 0.0;
  for (double r : residuals) {
    if (!(r >= 0.0)) throw InvalidArgument("spline_weights: residuals must be non-negative");
    weights.push_back(1.0 / std::max(r, weight_floor));
    sum += weights.back();
  }
  const double mean = sum / static_cast<double>(std::max<std::size_t>(weights.size(), 1));
  for (double& w : weights) w /= mean;
  return weights;
}

SplineTrajectory spline_prior(const Trajectory& trajectory, std::span<const double> residuals,
                              const SplinePriorConfig& config) {
  if (trajectory.size() < 4) {
    throw InvalidArgument("spline_prior: need at least 4 trajectory points, got " +
                          std::to_string(trajectory.size()));
  }
  if (residuals.size() != trajectory.size()) {
    throw InvalidArgument("spline_prior: one residual per trajectory point required");
  }
  const auto weights = spline_weights(residuals, config.weight_floor);
  std::vector<double> t, xs, ys;
  t.reserve(trajectory.size());
  xs.reserve(trajectory.size());
  ys.reserve(trajectory.size());
  for (const auto& sp : trajectory) {
    t.push_back(sp.time);
    xs.push_back(sp.pose.x);
    ys.push_back(sp.pose.y);
  }
  const auto headings = unwrap_headings(trajectory);
  return SplineTrajectory(SmoothingSpline(t, xs, weights, config.smoothing),
                          SmoothingSpline(t, ys, weights, config.smoothing),
                          SmoothingSpline(t, headings, weights, config.smoothing));
}

}  // namespace rffslam
