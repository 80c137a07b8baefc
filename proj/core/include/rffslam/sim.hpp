#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rffslam/observation.hpp"
#include "rffslam/priors.hpp"
#include "rffslam/trajectory.hpp"

namespace rffslam::sim {

// Planar world and motion limits for random trajectories.
struct TrajectoryConfig {
  double duration = 10.0;  // s
  double cadence = 0.1;    // s between samples
  double world_size = 100.0;  // square box [0, world_size]^2
  double max_speed = 2.0;     // m/s
  double waypoint_interval = 2.0;  // s between spline waypoints
  double turn_std = 0.6;           // rad, heading change per waypoint
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  int num_landmarks = 20;
  TrajectoryConfig trajectory;
  double landmark_margin = 10.0;  // m around the trajectory bounding box
  MeasurementKind kind = MeasurementKind::kRangeBearing;
  double range_noise_std = 2.0;    // m
  double bearing_noise_std = 0.05235987755982988;  // rad (3 deg)
  // Noise reported in R when the true noise std is below it. A zero-noise
  // scenario still needs a positive-definite R.
  double min_range_sigma = 0.1;
  double min_bearing_sigma = 0.01;
  // 0 disables range gating.
  double sensor_max_range = 0.0;
  // Odometry noise is opt-in; the default odometry is exact.
  double odometry_velocity_std = 0.0;  // m/s
  double odometry_yaw_rate_std = 0.0;  // rad/s

  // Throws InvalidArgument when out of range.
  void validate() const;
};

struct Scenario {
  ScenarioConfig config;
  Trajectory ground_truth;
  std::vector<Landmark2D> landmarks;
  std::vector<Measurement> measurements;
  std::vector<OdometryControl> odometry;
  // Times at which no landmark was visible.
  std::vector<double> blind_times;
};

// Smooth random trajectory in the world box: a heading random walk sets
// waypoints every waypoint_interval seconds, an interpolating cubic spline
// joins them, and samples are taken every cadence seconds. Headings follow
// the direction of travel to the next sample. Draws are retried until the
// speed cap, box and turn-rate checks hold. Deterministic per seed.
Trajectory generate_trajectory(std::uint64_t seed, const TrajectoryConfig& config);

// Uniform in the trajectory bounding box grown by `margin` (clipped to the
// world box), at least 1 m from every sampled pose. Ids are 0..count-1.
std::vector<Landmark2D> generate_landmarks(std::uint64_t seed, int count, const Trajectory& trajectory,
                                           double margin, double world_size);

// One measurement per (sample time, visible landmark). Noise is Gaussian in
// measurement space; both a range and a bearing normal are drawn for every
// measurement regardless of kind, so a fixed seed reuses the same standard
// normal sequence across noise levels.
std::vector<Measurement> generate_measurements(const Trajectory& trajectory,
                                               const std::vector<Landmark2D>& landmarks,
                                               const ScenarioConfig& config,
                                               std::vector<double>* blind_times = nullptr);

// Velocities that reproduce the trajectory exactly under motion_prior, plus
// Gaussian noise. The first control has zero velocity.
std::vector<OdometryControl> generate_odometry(const Trajectory& trajectory, double velocity_std,
                                               double yaw_rate_std, std::uint64_t seed);

Scenario make_scenario(const ScenarioConfig& config);

}  // namespace rffslam::sim
