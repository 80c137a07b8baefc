#include "rffslam/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rffslam/errors.hpp"
#include "rffslam/random.hpp"
#include "rffslam/smoothing_spline.hpp"

namespace rffslam::sim {
namespace {

// splitmix64 finalizer; gives each generator stage its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kTrajectory = 1, kLandmarks = 2, kMeasurements = 3, kOdometry = 4 };

int sample_count(const TrajectoryConfig& config) {
  return static_cast<int>(std::llround(config.duration / config.cadence));
}

bool inside(double v, double lo, double hi) { return v >= lo && v <= hi; }

}  // namespace

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("ScenarioConfig: " + what); };
  if (num_landmarks < 1) fail("num_landmarks must be >= 1");
  if (!(trajectory.duration > 0.0)) fail("duration must be positive");
  if (!(trajectory.cadence > 0.0)) fail("cadence must be positive");
  if (sample_count(trajectory) < 2) fail("duration must span at least two samples");
  if (!(trajectory.world_size > 0.0)) fail("world_size must be positive");
  if (!(trajectory.max_speed > 0.0)) fail("max_speed must be positive");
  if (!(trajectory.waypoint_interval > 0.0)) fail("waypoint_interval must be positive");
  if (!(range_noise_std >= 0.0) || !(bearing_noise_std >= 0.0)) fail("noise stds must be >= 0");
  if (!(min_range_sigma > 0.0) || !(min_bearing_sigma > 0.0)) fail("sigma floors must be positive");
  if (!(sensor_max_range >= 0.0)) fail("sensor_max_range must be >= 0");
  if (!(odometry_velocity_std >= 0.0) || !(odometry_yaw_rate_std >= 0.0)) {
    fail("odometry noise stds must be >= 0");
  }
  if (!(landmark_margin >= 0.0)) fail("landmark_margin must be >= 0");
}

Trajectory generate_trajectory(std::uint64_t seed, const TrajectoryConfig& config) {
  if (!(config.duration > 0.0) || !(config.cadence > 0.0) || sample_count(config) < 2) {
    throw InvalidArgument("generate_trajectory: duration and cadence must give >= 2 samples");
  }
  const int n = sample_count(config);
  const double world = config.world_size;
  const double margin = std::min(5.0, 0.1 * world);
  const int num_waypoints =
      static_cast<int>(std::ceil(config.duration / config.waypoint_interval)) + 2;
  const Eigen::Vector2d center(0.5 * world, 0.5 * world);

  Rng rng(derive_seed(seed, kTrajectory));
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> tau, xs, ys;
    Eigen::Vector2d p(rng.uniform(0.3 * world, 0.7 * world), rng.uniform(0.3 * world, 0.7 * world));
    double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    bool ok = true;
    for (int k = 0; k < num_waypoints; ++k) {
      tau.push_back(k * config.waypoint_interval);
      xs.push_back(p(0));
      ys.push_back(p(1));
      const double speed = rng.uniform(0.4, 0.6) * config.max_speed;
      heading += config.turn_std * rng.normal();
      Eigen::Vector2d next =
          p + speed * config.waypoint_interval * Eigen::Vector2d(std::cos(heading), std::sin(heading));
      if (!inside(next(0), margin, world - margin) || !inside(next(1), margin, world - margin)) {
        const Eigen::Vector2d to_center = center - p;
        heading = std::atan2(to_center(1), to_center(0)) + 0.3 * rng.normal();
        next = p + speed * config.waypoint_interval *
                       Eigen::Vector2d(std::cos(heading), std::sin(heading));
      }
      p = next;
    }
    const std::vector<double> unit(tau.size(), 1.0);
    const SmoothingSpline sx(tau, xs, unit, 1.0);
    const SmoothingSpline sy(tau, ys, unit, 1.0);

    Trajectory out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double t = i * config.cadence;
      out[static_cast<std::size_t>(i)] = {t, {sx(t), sy(t), 0.0}};
      const auto& pose = out[static_cast<std::size_t>(i)].pose;
      if (!inside(pose.x, 0.0, world) || !inside(pose.y, 0.0, world)) ok = false;
    }
    for (int i = 0; ok && i + 1 < n; ++i) {
      auto& a = out[static_cast<std::size_t>(i)];
      const auto& b = out[static_cast<std::size_t>(i + 1)];
      const double dx = b.pose.x - a.pose.x;
      const double dy = b.pose.y - a.pose.y;
      const double step = std::hypot(dx, dy);
      if (step / config.cadence > config.max_speed || step < 1e-6) ok = false;
      a.pose.heading = std::atan2(dy, dx);
    }
    if (!ok) continue;
    out.back().pose.heading = out[out.size() - 2].pose.heading;
    for (std::size_t i = 1; ok && i < out.size(); ++i) {
      if (std::abs(wrap_angle(out[i].pose.heading - out[i - 1].pose.heading)) >=
          0.5 * std::numbers::pi) {
        ok = false;
      }
    }
    if (ok) return out;
  }
  throw NumericalFailure("generate_trajectory: no admissible trajectory after 200 draws");
}

std::vector<Landmark2D> generate_landmarks(std::uint64_t seed, int count, const Trajectory& trajectory,
                                           double margin, double world_size) {
  if (count < 1) throw InvalidArgument("generate_landmarks: count must be >= 1");
  if (trajectory.empty()) throw InvalidArgument("generate_landmarks: empty trajectory");
  double lo_x = trajectory.front().pose.x, hi_x = lo_x;
  double lo_y = trajectory.front().pose.y, hi_y = lo_y;
  for (const auto& sp : trajectory) {
    lo_x = std::min(lo_x, sp.pose.x);
    hi_x = std::max(hi_x, sp.pose.x);
    lo_y = std::min(lo_y, sp.pose.y);
    hi_y = std::max(hi_y, sp.pose.y);
  }
  lo_x = std::max(0.0, lo_x - margin);
  lo_y = std::max(0.0, lo_y - margin);
  hi_x = std::min(world_size, hi_x + margin);
  hi_y = std::min(world_size, hi_y + margin);

  Rng rng(derive_seed(seed, kLandmarks));
  std::vector<Landmark2D> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int id = 0; id < count; ++id) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw NumericalFailure("generate_landmarks: cannot place landmark");
      const double x = rng.uniform(lo_x, hi_x);
      const double y = rng.uniform(lo_y, hi_y);
      const bool clear = std::none_of(trajectory.begin(), trajectory.end(), [&](const StampedPose& sp) {
        return std::hypot(sp.pose.x - x, sp.pose.y - y) < 1.0;
      });
      if (clear) {
        out.push_back({id, x, y});
        break;
      }
    }
  }
  return out;
}

std::vector<Measurement> generate_measurements(const Trajectory& trajectory,
                                               const std::vector<Landmark2D>& landmarks,
                                               const ScenarioConfig& config,
                                               std::vector<double>* blind_times) {
  config.validate();
  Rng rng(derive_seed(config.seed, kMeasurements));
  const Eigen::Vector2d sigma(std::max(config.range_noise_std, config.min_range_sigma),
                              std::max(config.bearing_noise_std, config.min_bearing_sigma));
  std::vector<Measurement> out;
  out.reserve(trajectory.size() * landmarks.size());
  for (const auto& sp : trajectory) {
    bool any = false;
    for (const auto& lm : landmarks) {
      const double n_range = rng.normal();
      const double n_bearing = rng.normal();
      const auto rb = predict_range_bearing(sp.pose.x, sp.pose.y, sp.pose.heading, lm.x, lm.y);
      if (config.sensor_max_range > 0.0 && rb.range > config.sensor_max_range) continue;
      any = true;
      const double range = rb.range + config.range_noise_std * n_range;
      const double bearing = wrap_angle(rb.bearing + config.bearing_noise_std * n_bearing);
      Measurement z;
      z.time = sp.time;
      z.landmark_id = lm.id;
      z.kind = config.kind;
      switch (config.kind) {
        case MeasurementKind::kRange:
          z.value = {range, 0.0};
          z.noise_std = {sigma(0), 0.0};
          break;
        case MeasurementKind::kBearing:
          z.value = {bearing, 0.0};
          z.noise_std = {sigma(1), 0.0};
          break;
        case MeasurementKind::kRangeBearing:
          z.value = {range, bearing};
          z.noise_std = sigma;
          break;
      }
      out.push_back(z);
    }
    if (!any && blind_times != nullptr) blind_times->push_back(sp.time);
  }
  return out;
}

std::vector<OdometryControl> generate_odometry(const Trajectory& trajectory, double velocity_std,
                                               double yaw_rate_std, std::uint64_t seed) {
  std::vector<OdometryControl> out;
  if (trajectory.empty()) return out;
  Rng rng(derive_seed(seed, kOdometry));
  out.reserve(trajectory.size());
  out.push_back({trajectory.front().time, 0.0, 0.0});
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    const double dt = b.time - a.time;
    if (!(dt > 0.0)) throw InvalidArgument("generate_odometry: times must be strictly increasing");
    const double v = std::hypot(b.pose.x - a.pose.x, b.pose.y - a.pose.y) / dt;
    const double w = wrap_angle(b.pose.heading - a.pose.heading) / dt;
    const double nv = rng.normal();
    const double nw = rng.normal();
    out.push_back({b.time, v + velocity_std * nv, w + yaw_rate_std * nw});
  }
  return out;
}

Scenario make_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario s;
  s.config = config;
  s.ground_truth = generate_trajectory(config.seed, config.trajectory);
  s.landmarks = generate_landmarks(config.seed, config.num_landmarks, s.ground_truth,
                                   config.landmark_margin, config.trajectory.world_size);
  s.measurements = generate_measurements(s.ground_truth, s.landmarks, config, &s.blind_times);
  s.odometry = generate_odometry(s.ground_truth, config.odometry_velocity_std,
                                 config.odometry_yaw_rate_std, config.seed);
  return s;
}

}  // namespace rffslam::sim
