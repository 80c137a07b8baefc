#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace rffslam {

// Planar robot state (x, y, heading). Heading is kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Eigen::Vector3d vector() const { return {x, y, heading}; }
  static Pose2D from_vector(const Eigen::Vector3d& v);

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

using LandmarkId = std::int64_t;

struct Landmark2D {
  LandmarkId id = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Landmark2D&, const Landmark2D&) = default;
};

// Gaussian prior on one landmark position.
struct LandmarkPrior {
  LandmarkId id = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

  friend bool operator==(const LandmarkPrior&, const LandmarkPrior&) = default;
};

enum class MeasurementKind { kRange, kBearing, kRangeBearing };

std::string_view to_string(MeasurementKind kind);
// Accepts "range", "bearing", "range_bearing". Throws InvalidArgument otherwise.
MeasurementKind parse_measurement_kind(std::string_view text);
// 1 for range or bearing, 2 for range_bearing.
int measurement_dim(MeasurementKind kind);

// A single timestamped observation of one landmark.
//
// `value` and `noise_std` use their first measurement_dim(kind) rows; for
// range_bearing the order is (range, bearing). The noise covariance is
// diag(noise_std^2).
struct Measurement {
  double time = 0.0;
  LandmarkId landmark_id = 0;
  MeasurementKind kind = MeasurementKind::kRangeBearing;
  Eigen::Vector2d value = Eigen::Vector2d::Zero();
  Eigen::Vector2d noise_std = Eigen::Vector2d::Ones();

  int dim() const { return measurement_dim(kind); }
  Eigen::MatrixXd noise_cov() const;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

// Wraps to (-pi, pi]; -pi maps to +pi. Throws InvalidArgument on non-finite input.
double wrap_angle(double theta);

// Ranges below this are treated as coincident pose and landmark.
inline constexpr double kMinRange = 1e-9;

// Full range/bearing prediction and its 2 x 5 Jacobian. Columns are
// d/dx, d/dy, d/dheading, d/dlandmark_x, d/dlandmark_y.
struct RangeBearing {
  double range = 0.0;
  double bearing = 0.0;
  Eigen::Matrix<double, 2, 5> jacobian;
};

// Throws DegenerateGeometry when the landmark is within kMinRange of the pose.
// The bearing is wrapped.
RangeBearing predict_range_bearing(double x, double y, double heading, double landmark_x,
                                   double landmark_y);

Eigen::VectorXd observe(const Pose2D& pose, const Landmark2D& landmark, MeasurementKind kind);
// Rows selected by kind, 5 columns as in RangeBearing::jacobian.
Eigen::MatrixXd observe_jacobian(const Pose2D& pose, const Landmark2D& landmark,
                                 MeasurementKind kind);

// z - h with the bearing component wrapped. `predicted` is the full
// (range, bearing) pair; rows are selected by kind.
Eigen::Vector2d measurement_residual(const Measurement& z, double predicted_range,
                                     double predicted_bearing);

}  // namespace rffslam
