#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rffslam/smoothing_spline.hpp"
#include "rffslam/trajectory.hpp"

namespace rffslam {

// Prior mean of the trajectory, mu_x(t).
using PriorMeanFn = std::function<Pose2D(double)>;

// Wheel odometry sample. The control stamped t_i drives the robot over
// (t_{i-1}, t_i].
struct OdometryControl {
  double time = 0.0;
  double linear_velocity = 0.0;   // m/s
  double angular_velocity = 0.0;  // rad/s

  friend bool operator==(const OdometryControl&, const OdometryControl&) = default;
};

// One Euler step of the unicycle model:
//   x += v dt cos(a), y += v dt sin(a), a += w dt (wrapped).
// Throws InvalidArgument if dt <= 0.
Pose2D motion_prior(const Pose2D& prev, const OdometryControl& control, double dt);

// Chains motion_prior from `initial` at odometry.front().time. The first
// control only supplies the start time. Requires strictly increasing times.
Trajectory integrate_odometry(const Pose2D& initial, std::span<const OdometryControl> odometry);

// Motion-model prior refreshed from a trajectory estimate:
//   mu(t_0) = estimate(t_0),  mu(t_i) = motion_prior(estimate(t_{i-1}), u_i, t_i - t_{i-1}).
// Past `horizon` the estimate is not trusted and the chain continues from
// mu(t_{i-1}) instead.
Trajectory refresh_motion_prior(const PriorMeanFn& estimate,
                                std::span<const OdometryControl> odometry,
                                double horizon = std::numeric_limits<double>::infinity());

struct SplinePriorConfig {
  double smoothing = 0.98;
  double weight_floor = 1e-3;
};

// Per-coordinate smoothing splines of a trajectory estimate. Headings are
// smoothed unwrapped and wrapped on evaluation.
class SplineTrajectory {
 public:
  SplineTrajectory(SmoothingSpline x, SmoothingSpline y, SmoothingSpline heading)
      : x_(std::move(x)), y_(std::move(y)), heading_(std::move(heading)) {}

  Pose2D operator()(double t) const;

  const SmoothingSpline& x() const { return x_; }
  const SmoothingSpline& y() const { return y_; }
  const SmoothingSpline& heading() const { return heading_; }

 private:
  SmoothingSpline x_;
  SmoothingSpline y_;
  SmoothingSpline heading_;
};

// Spline weights 1 / max(residual_i, weight_floor), rescaled to mean 1.
std::vector<double> spline_weights(std::span<const double> residuals, double weight_floor);

// Smoothing-spline prior through `trajectory`, each point weighted inversely to
// its data-fit error. Requires >= 4 points and one non-negative residual per point.
SplineTrajectory spline_prior(const Trajectory& trajectory, std::span<const double> residuals,
                              const SplinePriorConfig& config = {});

}  // namespace rffslam
