#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rffslam/observation.hpp"
#include "rffslam/trajectory.hpp"

namespace rffslam::eval {

// Rigid transform in SE(3).
struct Pose3D {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose3D inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
  Pose3D operator*(const Pose3D& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
};

// z = 0, roll = pitch = 0, yaw = heading.
Pose3D lift_to_se3(const Pose2D& pose);

// Geodesic angle of a rotation matrix, in [0, pi].
double rotation_angle(const Eigen::Matrix3d& rotation);

// Poses are associated by index; timestamps must agree within this.
inline constexpr double kTimeTolerance = 1e-6;

// Pairs every estimated pose with the ground-truth pose stamped within
// kTimeTolerance of it. Throws InvalidArgument if an estimated pose has no
// partner or nothing matches.
std::pair<Trajectory, Trajectory> associate(const Trajectory& estimate,
                                            const Trajectory& ground_truth);

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> translation;  // m
  std::vector<double> rotation;     // rad
  double translation_rms = 0.0;
  double rotation_rms = 0.0;
};

// Absolute pose error e_i = P_i^{-1} P_hat_i, RMS over N poses.
// Throws InvalidArgument on length or timestamp mismatch, or empty input.
ErrorSeries ape(const Trajectory& estimate, const Trajectory& ground_truth);

// Relative pose error e_i = (P_{i-1}^{-1} P_i)^{-1} (P_hat_{i-1}^{-1} P_hat_i),
// RMS over the N - 1 consecutive pairs. Needs >= 2 poses.
ErrorSeries rpe(const Trajectory& estimate, const Trajectory& ground_truth);

struct EvalReport {
  double ape_trans = 0.0;
  double ape_rot = 0.0;
  double rpe_trans = 0.0;
  double rpe_rot = 0.0;
  ErrorSeries ape_series;
  ErrorSeries rpe_series;
};

EvalReport evaluate(const Trajectory& estimate, const Trajectory& ground_truth);

// Normalized errors |est - gt| / |gt| over stacked coordinates.
struct RelativeErrors {
  double position = 0.0;
  double rotation = 0.0;
  std::optional<double> landmarks;
};

// Landmarks are matched by id; every ground-truth landmark must be estimated.
RelativeErrors relative_errors(const Trajectory& estimate, const Trajectory& ground_truth,
                               std::span<const Landmark2D> estimated_landmarks = {},
                               std::span<const Landmark2D> true_landmarks = {});

// {"ape_trans", "ape_rot", "rpe_trans", "rpe_rot", "num_poses"} plus extra
// fields from `relative` when given. Shortest round-trip doubles.
std::string report_to_json(const EvalReport& report,
                           const std::optional<RelativeErrors>& relative = std::nullopt);

// index,time,ape_trans,ape_rot,rpe_trans,rpe_rot; the RPE columns are empty
// on the first row.
std::string report_series_csv(const EvalReport& report);

}  // namespace rffslam::eval
