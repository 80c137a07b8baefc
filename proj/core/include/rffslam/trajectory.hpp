#pragma once

#include <vector>

#include "rffslam/observation.hpp"

namespace rffslam {

struct StampedPose {
  double time = 0.0;
  Pose2D pose;

  friend bool operator==(const StampedPose&, const StampedPose&) = default;
};

// Time-ordered poses.
using Trajectory = std::vector<StampedPose>;

// Heading sequence with cumulative 2*pi corrections so that consecutive
// entries differ by at most pi.
std::vector<double> unwrap_headings(const Trajectory& trajectory);

// Piecewise-linear interpolation, heading interpolated along the shorter arc.
// Clamps to the end poses outside the time span. Throws InvalidArgument if empty.
Pose2D interpolate_linear(const Trajectory& trajectory, double t);

}  // namespace rffslam
