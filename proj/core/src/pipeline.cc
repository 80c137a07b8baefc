#include "rffslam/pipeline.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "rffslam/errors.hpp"

namespace rffslam {
namespace {

PriorMeanFn linear_prior(Trajectory trajectory) {
  auto shared = std::make_shared<const Trajectory>(std::move(trajectory));
  return [shared](double t) { return interpolate_linear(*shared, t); };
}

PriorMeanFn constant_prior(const Pose2D& pose) {
  return [pose](double) { return pose; };
}

}  // namespace

PriorKind parse_prior_kind(std::string_view text) {
  if (text == "motion") return PriorKind::kMotion;
  if (text == "spline") return PriorKind::kSpline;
  throw InvalidArgument("unknown prior '" + std::string(text) + "' (expected motion or spline)");
}

std::string_view to_string(PriorKind kind) {
  return kind == PriorKind::kMotion ? "motion" : "spline";
}

IncrementalEstimator::IncrementalEstimator(const EstimatorConfig& config,
                                           std::vector<OdometryControl> odometry,
                                           const Pose2D& initial_pose, double time_origin)
    : config_(config), odometry_(std::move(odometry)) {
  config_.solver.validate();
  if (config_.prior == PriorKind::kMotion && odometry_.size() < 2) {
    throw ValidationError("the motion prior needs odometry (at least 2 controls)");
  }
  model_ = StateModel::from_config(config_.solver, time_origin);
  state_ = WeightState(model_.num_features(), {}, config_.solver.weight_prior_variance);
  prior_ = odometry_.size() >= 2 ? linear_prior(integrate_odometry(initial_pose, odometry_))
                                 : constant_prior(initial_pose);
}

int IncrementalEstimator::incremental_update(std::span<const Measurement> new_measurements,
                                             int batch_size) {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  int updates = 0;
  for (const auto& z : new_measurements) {
    if (!measurements_.empty() && z.time < measurements_.back().time) {
      throw ValidationError("measurements must arrive in time order");
    }
    measurements_.push_back(z);
    if (++pending_ == static_cast<std::size_t>(batch_size)) {
      run_update();
      ++updates;
    }
  }
  return updates;
}

bool IncrementalEstimator::flush() {
  if (pending_ == 0) return false;
  run_update();
  return true;
}

void IncrementalEstimator::refine() {
  if (log_.empty()) throw InvalidArgument("refine: no update has run yet");
  refresh_due_ = true;
  run_update();
}

Trajectory IncrementalEstimator::estimate_at(std::span<const double> times) const {
  Trajectory out;
  out.reserve(times.size());
  for (double t : times) out.push_back({t, estimate(t)});
  return out;
}

void IncrementalEstimator::refresh_prior() {
  const double horizon = measurements_.empty() ? -INFINITY : problem_->times().back();
  if (config_.prior == PriorKind::kMotion) {
    const PriorMeanFn current = [this](double t) { return estimate(t); };
    prior_ = linear_prior(refresh_motion_prior(current, odometry_, horizon));
  } else {
    const Trajectory fit = problem_->trajectory(state_);
    if (fit.size() >= 4) {
      const auto residuals = problem_->residual_norms(state_);
      prior_ = [spline = std::make_shared<const SplineTrajectory>(
                    spline_prior(fit, residuals, config_.spline))](double t) { return (*spline)(t); };
    } else {
      // Too few points for a spline: keep the estimate itself as the prior.
      prior_ = linear_prior(fit);
    }
  }
  state_.reset_weights();
}

void IncrementalEstimator::run_update() {
  if (refresh_due_) refresh_prior();

  std::set<LandmarkId> fresh;
  for (const auto& z : measurements_) {
    if (!state_.landmark_index(z.landmark_id)) fresh.insert(z.landmark_id);
  }
  if (!fresh.empty()) {
    std::vector<Measurement> seen;
    for (const auto& z : measurements_) {
      if (fresh.count(z.landmark_id)) seen.push_back(z);
    }
    const PriorMeanFn guess = [this](double t) { return estimate(t); };
    for (const auto& prior :
         initialize_landmarks(seen, guess, config_.solver.landmark_prior_variance)) {
      state_.add_landmark(prior);
    }
  }

  problem_.emplace(measurements_, model_, prior_, state_);
  UpdateResult result = update_state(state_, *problem_, config_.solver);
  state_ = std::move(result.state);
  log_.push_back({static_cast<int>(log_.size()), measurements_.size(), measurements_.back().time,
                  std::move(result.report)});
  pending_ = 0;
  refresh_due_ = true;
}

std::vector<Measurement> select_measurements(std::span<const Measurement> measurements,
                                             MeasurementKind kind) {
  std::vector<Measurement> out;
  for (const auto& z : measurements) {
    if (z.kind == kind) {
      out.push_back(z);
    } else if (z.kind == MeasurementKind::kRangeBearing) {
      const int row = kind == MeasurementKind::kRange ? 0 : 1;
      Measurement part = z;
      part.kind = kind;
      part.value = {z.value(row), 0.0};
      part.noise_std = {z.noise_std(row), 0.0};
      out.push_back(part);
    }
  }
  return out;
}

PipelineResult run_pipeline(const io::Dataset& dataset, const PipelineConfig& config) {
  if (config.batch_size < 0) throw InvalidArgument("batch_size must be >= 0");
  if (config.spline_refinements < 0) throw InvalidArgument("spline_refinements must be >= 0");
  std::vector<Measurement> measurements =
      config.kind_filter ? select_measurements(dataset.measurements, *config.kind_filter)
                         : dataset.measurements;
  if (measurements.empty()) throw ValidationError("no measurements to estimate from");
  std::stable_sort(measurements.begin(), measurements.end(),
                   [](const Measurement& a, const Measurement& b) { return a.time < b.time; });

  const double t_first = measurements.front().time;
  const double t_last = measurements.back().time;
  double time_origin = t_first;
  if (!dataset.odometry.empty()) time_origin = std::min(time_origin, dataset.odometry.front().time);

  Pose2D initial;
  if (!dataset.ground_truth.empty()) {
    const double t0 = dataset.odometry.empty() ? t_first : dataset.odometry.front().time;
    initial = interpolate_linear(dataset.ground_truth, t0);
  }

  IncrementalEstimator estimator(config.estimator, dataset.odometry, initial, time_origin);
  const int batch = config.batch_size == 0 ? static_cast<int>(measurements.size()) : config.batch_size;
  estimator.incremental_update(measurements, batch);
  estimator.flush();
  if (config.estimator.prior == PriorKind::kSpline) {
    for (int i = 0; i < config.spline_refinements; ++i) estimator.refine();
  }

  std::vector<double> times;
  constexpr double kSlack = 1e-9;
  for (const auto& s : dataset.ground_truth) {
    if (s.time >= t_first - kSlack && s.time <= t_last + kSlack) times.push_back(s.time);
  }
  if (times.empty()) {
    for (const auto& z : measurements) {
      if (times.empty() || z.time != times.back()) times.push_back(z.time);
    }
  }

  PipelineResult result;
  result.trajectory = estimator.estimate_at(times);
  result.headings_from_motion =
      std::all_of(measurements.begin(), measurements.end(),
                  [](const Measurement& z) { return z.kind == MeasurementKind::kRange; });
  if (result.headings_from_motion && result.trajectory.size() >= 2) {
    result.trajectory = heading_from_motion(result.trajectory);
  }
  result.landmarks = estimator.state().landmarks();
  result.state = estimator.state();
  result.model = estimator.model();
  result.updates = estimator.log();
  result.final_objective = estimator.objective();
  return result;
}

}  // namespace rffslam
