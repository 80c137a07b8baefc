#include "rffslam/eval.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rffslam/errors.hpp"
#include "rffslam/io.hpp"

namespace rffslam::eval {
namespace {

void check_aligned(const Trajectory& estimate, const Trajectory& ground_truth) {
  if (estimate.size() != ground_truth.size()) {
    throw InvalidArgument("trajectory length mismatch: estimate has " +
                          std::to_string(estimate.size()) + " poses, ground truth " +
                          std::to_string(ground_truth.size()));
  }
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (std::abs(estimate[i].time - ground_truth[i].time) > kTimeTolerance) {
      throw InvalidArgument("timestamp mismatch at index " + std::to_string(i) + ": " +
                            std::to_string(estimate[i].time) + " vs " +
                            std::to_string(ground_truth[i].time));
    }
  }
}

double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

void push_error(ErrorSeries& series, double time, const Pose3D& error) {
  series.times.push_back(time);
  series.translation.push_back(error.translation.norm());
  series.rotation.push_back(rotation_angle(error.rotation));
}

void finish(ErrorSeries& series) {
  series.translation_rms = rms(series.translation);
  series.rotation_rms = rms(series.rotation);
}

}  // namespace

Pose3D lift_to_se3(const Pose2D& pose) {
  Pose3D out;
  out.rotation = Eigen::AngleAxisd(pose.heading, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  out.translation = Eigen::Vector3d(pose.x, pose.y, 0.0);
  return out;
}

double rotation_angle(const Eigen::Matrix3d& r) {
  // atan2 of the sine and cosine parts stays accurate near 0 and pi.
  const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_part = 0.5 * axis.norm();
  const double cos_part = 0.5 * (r.trace() - 1.0);
  return std::atan2(sin_part, cos_part);
}

std::pair<Trajectory, Trajectory> associate(const Trajectory& estimate,
                                            const Trajectory& ground_truth) {
  std::pair<Trajectory, Trajectory> out;
  std::size_t j = 0;
  for (const auto& e : estimate) {
    while (j < ground_truth.size() && ground_truth[j].time < e.time - kTimeTolerance) ++j;
    if (j == ground_truth.size() || std::abs(ground_truth[j].time - e.time) > kTimeTolerance) {
      throw InvalidArgument("no ground-truth pose within " + std::to_string(kTimeTolerance) +
                            " s of estimate time " + std::to_string(e.time));
    }
    out.first.push_back(e);
    out.second.push_back(ground_truth[j]);
  }
  if (out.first.empty()) throw InvalidArgument("associate: empty estimate");
  return out;
}

ErrorSeries ape(const Trajectory& estimate, const Trajectory& ground_truth) {
  check_aligned(estimate, ground_truth);
  if (estimate.empty()) throw InvalidArgument("ape: empty trajectories");
  ErrorSeries out;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const Pose3D error =
        lift_to_se3(ground_truth[i].pose).inverse() * lift_to_se3(estimate[i].pose);
    push_error(out, ground_truth[i].time, error);
  }
  finish(out);
  return out;
}

ErrorSeries rpe(const Trajectory& estimate, const Trajectory& ground_truth) {
  check_aligned(estimate, ground_truth);
  if (estimate.size() < 2) throw InvalidArgument("rpe: need at least 2 aligned poses");
  ErrorSeries out;
  for (std::size_t i = 1; i < estimate.size(); ++i) {
    const Pose3D delta_true =
        lift_to_se3(ground_truth[i - 1].pose).inverse() * lift_to_se3(ground_truth[i].pose);
    const Pose3D delta_est =
        lift_to_se3(estimate[i - 1].pose).inverse() * lift_to_se3(estimate[i].pose);
    push_error(out, ground_truth[i].time, delta_true.inverse() * delta_est);
  }
  finish(out);
  return out;
}

EvalReport evaluate(const Trajectory& estimate, const Trajectory& ground_truth) {
  EvalReport report;
  report.ape_series = ape(estimate, ground_truth);
  report.ape_trans = report.ape_series.translation_rms;
  report.ape_rot = report.ape_series.rotation_rms;
  if (estimate.size() >= 2) {
    report.rpe_series = rpe(estimate, ground_truth);
    report.rpe_trans = report.rpe_series.translation_rms;
    report.rpe_rot = report.rpe_series.rotation_rms;
  }
  return report;
}

RelativeErrors relative_errors(const Trajectory& estimate, const Trajectory& ground_truth,
                               std::span<const Landmark2D> estimated_landmarks,
                               std::span<const Landmark2D> true_landmarks) {
  check_aligned(estimate, ground_truth);
  double dp = 0.0, np = 0.0, dr = 0.0, nr = 0.0;
  const auto true_headings = unwrap_headings(ground_truth);
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const auto& e = estimate[i].pose;
    const auto& g = ground_truth[i].pose;
    dp += (e.x - g.x) * (e.x - g.x) + (e.y - g.y) * (e.y - g.y);
    np += g.x * g.x + g.y * g.y;
    const double dh = wrap_angle(e.heading - g.heading);
    dr += dh * dh;
    nr += true_headings[i] * true_headings[i];
  }
  RelativeErrors out;
  out.position = np > 0.0 ? std::sqrt(dp / np) : std::sqrt(dp);
  out.rotation = nr > 0.0 ? std::sqrt(dr / nr) : std::sqrt(dr);
  if (!true_landmarks.empty()) {
    std::map<LandmarkId, const Landmark2D*> by_id;
    for (const auto& l : estimated_landmarks) by_id[l.id] = &l;
    double dl = 0.0, nl = 0.0;
    for (const auto& t : true_landmarks) {
      const auto it = by_id.find(t.id);
      if (it == by_id.end()) {
        throw InvalidArgument("relative_errors: landmark " + std::to_string(t.id) + " not estimated");
      }
      dl += std::pow(it->second->x - t.x, 2) + std::pow(it->second->y - t.y, 2);
      nl += t.x * t.x + t.y * t.y;
    }
    out.landmarks = nl > 0.0 ? std::sqrt(dl / nl) : std::sqrt(dl);
  }
  return out;
}

std::string report_to_json(const EvalReport& report, const std::optional<RelativeErrors>& relative) {
  nlohmann::ordered_json j;
  j["ape_trans"] = report.ape_trans;
  j["ape_rot"] = report.ape_rot;
  j["rpe_trans"] = report.rpe_trans;
  j["rpe_rot"] = report.rpe_rot;
  j["num_poses"] = report.ape_series.times.size();
  if (relative) {
    j["relative_position"] = relative->position;
    j["relative_rotation"] = relative->rotation;
    if (relative->landmarks) j["relative_landmarks"] = *relative->landmarks;
  }
  return j.dump(2) + "\n";
}

std::string report_series_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "index,time,ape_trans,ape_rot,rpe_trans,rpe_rot\n";
  const auto& a = report.ape_series;
  const auto& r = report.rpe_series;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    out << i << ',' << io::format_double(a.times[i]) << ',' << io::format_double(a.translation[i])
        << ',' << io::format_double(a.rotation[i]) << ',';
    if (i >= 1 && i - 1 < r.times.size()) {
      out << io::format_double(r.translation[i - 1]) << ',' << io::format_double(r.rotation[i - 1]);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace rffslam::eval
