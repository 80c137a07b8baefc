#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rffslam/estimator.hpp"
#include "rffslam/io.hpp"
#include "rffslam/priors.hpp"

namespace rffslam {

enum class PriorKind { kMotion, kSpline };

// "motion" or "spline".
PriorKind parse_prior_kind(std::string_view text);
std::string_view to_string(PriorKind kind);

struct EstimatorConfig {
  SolverConfig solver;
  PriorKind prior = PriorKind::kMotion;
  SplinePriorConfig spline;
};

struct UpdateLog {
  int update = 0;
  std::size_t num_measurements = 0;
  double last_time = 0.0;
  ConvergenceReport report;
};

// Online estimator over a growing measurement set.
//
// Each update runs update_state over every measurement received so far.
// Before the next update the prior mean is refreshed from the current
// estimate (motion: odometry chained from the estimate; spline: smoothing
// spline through the estimate at measurement times) and the weights are reset
// to zero, so they again describe a correction to the prior mean. Landmarks
// seen for the first time are initialized from the current estimate.
class IncrementalEstimator {
 public:
  // prior == kMotion needs odometry (ValidationError otherwise). Without
  // odometry the spline prior starts from a constant pose.
  IncrementalEstimator(const EstimatorConfig& config, std::vector<OdometryControl> odometry,
                       const Pose2D& initial_pose, double time_origin);

  // Appends time-ordered measurements and runs an update each time batch_size
  // new ones have accumulated. Returns the number of updates run.
  int incremental_update(std::span<const Measurement> new_measurements, int batch_size);
  // Updates over measurements not yet included; false if there were none.
  bool flush();
  // Refreshes the prior from the current estimate and updates again.
  void refine();

  const WeightState& state() const { return state_; }
  const StateModel& model() const { return model_; }
  const PriorMeanFn& prior_mean() const { return prior_; }
  const std::vector<Measurement>& measurements() const { return measurements_; }
  const std::vector<UpdateLog>& log() const { return log_; }
  std::size_t pending() const { return pending_; }

  Pose2D estimate(double t) const { return interpolate_state(state_, model_, prior_, t); }
  Trajectory estimate_at(std::span<const double> times) const;
  // MAP objective after the last update (0 before any).
  double objective() const { return log_.empty() ? 0.0 : log_.back().report.final_objective; }

 private:
  void run_update();
  void refresh_prior();

  EstimatorConfig config_;
  std::vector<OdometryControl> odometry_;
  StateModel model_;
  WeightState state_;
  PriorMeanFn prior_;
  std::vector<Measurement> measurements_;
  std::optional<MeasurementProblem> problem_;
  std::vector<UpdateLog> log_;
  std::size_t pending_ = 0;
  bool refresh_due_ = false;
};

// Keeps measurements usable as `kind`: same-kind ones as they are, and the
// matching component of range_bearing ones.
std::vector<Measurement> select_measurements(std::span<const Measurement> measurements,
                                             MeasurementKind kind);

struct PipelineConfig {
  EstimatorConfig estimator;
  // Measurements per update; 0 puts everything in one batch.
  int batch_size = 0;
  std::optional<MeasurementKind> kind_filter;
  // Extra refresh-and-update passes after the last batch with the spline prior.
  int spline_refinements = 1;
};

struct PipelineResult {
  // At ground-truth times inside the measurement span when ground truth is
  // present, else at the distinct measurement times.
  Trajectory trajectory;
  std::vector<Landmark2D> landmarks;
  WeightState state;
  StateModel model;
  std::vector<UpdateLog> updates;
  double final_objective = 0.0;
  // Set for range-only data, whose output headings come from the direction of travel.
  bool headings_from_motion = false;
};

// Starts from the first ground-truth pose when available (origin otherwise).
// Throws ValidationError when the prior needs odometry the dataset lacks or
// no measurements remain after filtering.
PipelineResult run_pipeline(const io::Dataset& dataset, const PipelineConfig& config);

}  // namespace rffslam
