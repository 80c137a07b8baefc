#include "rffslam/observation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rffslam/errors.hpp"

namespace rffslam {

Pose2D Pose2D::from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), wrap_angle(v(2))}; }

std::string_view to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::kRange:
      return "range";
    case MeasurementKind::kBearing:
      return "bearing";
    case MeasurementKind::kRangeBearing:
      return "range_bearing";
  }
  return "unknown";
}

MeasurementKind parse_measurement_kind(std::string_view text) {
  if (text == "range") return MeasurementKind::kRange;
  if (text == "bearing") return MeasurementKind::kBearing;
  if (text == "range_bearing") return MeasurementKind::kRangeBearing;
  throw InvalidArgument("unknown measurement kind '" + std::string(text) + "'");
}

int measurement_dim(MeasurementKind kind) {
  return kind == MeasurementKind::kRangeBearing ? 2 : 1;
}

Eigen::MatrixXd Measurement::noise_cov() const {
  const int n = dim();
  return noise_std.head(n).array().square().matrix().asDiagonal();
}

double wrap_angle(double theta) {
  if (!std::isfinite(theta)) throw InvalidArgument("wrap_angle: non-finite angle");
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (theta > -kPi && theta <= kPi) return theta;
  double r = std::fmod(theta + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

RangeBearing predict_range_bearing(double x, double y, double heading, double landmark_x,
                                   double landmark_y) {
  const double dx = landmark_x - x;
  const double dy = landmark_y - y;
  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (!(r >= kMinRange)) {
    throw DegenerateGeometry("range/bearing undefined: landmark coincides with pose (range " +
                             std::to_string(r) + ")");
  }
  RangeBearing out;
  out.range = r;
  out.bearing = wrap_angle(std::atan2(dy, dx) - heading);
  out.jacobian << -dx / r, -dy / r, 0.0, dx / r, dy / r,  //
      dy / r2, -dx / r2, -1.0, -dy / r2, dx / r2;
  return out;
}

Eigen::VectorXd observe(const Pose2D& pose, const Landmark2D& landmark, MeasurementKind kind) {
  const auto rb = predict_range_bearing(pose.x, pose.y, pose.heading, landmark.x, landmark.y);
  switch (kind) {
    case MeasurementKind::kRange:
      return Eigen::VectorXd::Constant(1, rb.range);
    case MeasurementKind::kBearing:
      return Eigen::VectorXd::Constant(1, rb.bearing);
    case MeasurementKind::kRangeBearing:
      return Eigen::Vector2d(rb.range, rb.bearing);
  }
  return {};
}

Eigen::MatrixXd observe_jacobian(const Pose2D& pose, const Landmark2D& landmark,
                                 MeasurementKind kind) {
  const auto rb = predict_range_bearing(pose.x, pose.y, pose.heading, landmark.x, landmark.y);
  switch (kind) {
    case MeasurementKind::kRange:
      return rb.jacobian.topRows<1>();
    case MeasurementKind::kBearing:
      return rb.jacobian.bottomRows<1>();
    case MeasurementKind::kRangeBearing:
      return rb.jacobian;
  }
  return {};
}

Eigen::Vector2d measurement_residual(const Measurement& z, double predicted_range,
                                     double predicted_bearing) {
  switch (z.kind) {
    case MeasurementKind::kRange:
      return {z.value(0) - predicted_range, 0.0};
    case MeasurementKind::kBearing:
      return {wrap_angle(z.value(0) - predicted_bearing), 0.0};
    case MeasurementKind::kRangeBearing:
      return {z.value(0) - predicted_range, wrap_angle(z.value(1) - predicted_bearing)};
  }
  return Eigen::Vector2d::Zero();
}

}  // namespace rffslam
