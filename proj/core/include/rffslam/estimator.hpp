#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "rffslam/features.hpp"
#include "rffslam/observation.hpp"
#include "rffslam/priors.hpp"
#include "rffslam/trajectory.hpp"

namespace rffslam {

// x, y, heading.
inline constexpr int kStateDim = 3;

// In floating point, CG on these systems routinely needs several times the
// dimension to reach 1e-8 at small damping.
inline constexpr int kDefaultCgIterationsPerUnknown = 10;

struct SolverConfig {
  int num_features = 100;
  double lengthscale = 3.0;
  // Feature inputs are (t - time_origin) * time_scale.
  double time_scale = 1.0;
  std::uint64_t seed = 0;

  // K_m = weight_prior_variance * I, L = landmark_prior_variance * I.
  double weight_prior_variance = 1.0;
  double landmark_prior_variance = 1e4;

  double lm_lambda_init = 1e-3;
  double lm_up = 10.0;
  double lm_down = 0.1;
  // Stop when the relative objective decrease of an accepted step is below this.
  double tolerance = 1e-6;
  // Counts every LM trial, accepted or rejected.
  int max_iterations = 50;

  double cg_tolerance = 1e-8;
  // 0 selects kDefaultCgIterationsPerUnknown times the system dimension.
  int cg_max_iter = 0;

  // Throws InvalidArgument on any out-of-range field.
  void validate() const;
};

// Feature bases for the three state coordinates and the time transform that
// feeds them.
struct StateModel {
  std::array<FeatureBasis, kStateDim> bases;
  double time_origin = 0.0;
  double time_scale = 1.0;

  // Same (D, lengthscale, seed) basis for every coordinate.
  static StateModel from_config(const SolverConfig& config, double time_origin = 0.0);

  int num_features() const { return bases[0].num_features(); }
  double feature_time(double t) const { return (t - time_origin) * time_scale; }
};

// Stacked parameter vector b = [b^(1) b^(2) b^(3) l] with its Gaussian prior
// N(mu, P), P = diag(K_1, K_2, K_3, L). Weight prior means are zero; the
// landmark prior is block diagonal with one 2 x 2 block per landmark.
class WeightState {
 public:
  WeightState() = default;
  // Weights start at zero and landmarks at their prior means.
  WeightState(int num_features, std::span<const LandmarkPrior> landmarks,
              double weight_prior_variance = 1.0);

  int num_features() const { return num_features_; }
  int num_landmarks() const { return static_cast<int>(landmark_ids_.size()); }
  Eigen::Index size() const { return values_.size(); }
  Eigen::Index landmark_offset() const { return Eigen::Index{kStateDim} * num_features_; }

  const Eigen::VectorXd& values() const { return values_; }
  // Replaces the parameter vector; size must match.
  void set_values(const Eigen::VectorXd& values);
  const Eigen::VectorXd& prior_mean() const { return prior_mean_; }

  auto weights(int m) const { return values_.segment(Eigen::Index{m} * num_features_, num_features_); }
  auto weights(int m) { return values_.segment(Eigen::Index{m} * num_features_, num_features_); }
  Eigen::Vector2d landmark(int index) const {
    return values_.segment<2>(landmark_offset() + 2 * index);
  }

  const std::vector<LandmarkId>& landmark_ids() const { return landmark_ids_; }
  std::optional<int> landmark_index(LandmarkId id) const;
  std::vector<Landmark2D> landmarks() const;
  LandmarkPrior landmark_prior(int index) const;

  const Eigen::MatrixXd& weight_prior_cov(int m) const { return priors_->weight_cov[m]; }
  // Throws InvalidArgument unless K is D x D symmetric positive definite.
  void set_weight_prior_cov(int m, const Eigen::MatrixXd& cov);

  // Appends a landmark with value = prior mean. Throws on duplicate id or
  // non-SPD covariance.
  void add_landmark(const LandmarkPrior& prior);
  // Sets every weight block to zero (its prior mean).
  void reset_weights();

  // P^{-1} v.
  Eigen::VectorXd apply_prior_precision(const Eigen::VectorXd& v) const;
  // diag(P^{-1}).
  Eigen::VectorXd prior_precision_diagonal() const;
  // (b - mu)^T P^{-1} (b - mu).
  double prior_objective() const;

  friend bool operator==(const WeightState& a, const WeightState& b);

 private:
  struct PriorBlocks {
    std::array<Eigen::MatrixXd, kStateDim> weight_cov;
    std::array<Eigen::MatrixXd, kStateDim> weight_precision;
    std::vector<Eigen::Matrix2d> landmark_cov;
    std::vector<Eigen::Matrix2d> landmark_precision;
  };

  PriorBlocks& mutable_priors();

  int num_features_ = 0;
  Eigen::VectorXd values_;
  Eigen::VectorXd prior_mean_;
  std::vector<LandmarkId> landmark_ids_;
  std::unordered_map<LandmarkId, int> landmark_index_;
  // Shared with LinearizedSystem snapshots; copied before mutation.
  std::shared_ptr<const PriorBlocks> priors_ = std::make_shared<PriorBlocks>();

  friend class LinearizedSystem;
  friend class MeasurementProblem;
};

// x(t) = mu_x(t) + [phi_1(t).b^(1), phi_2(t).b^(2), phi_3(t).b^(3)], heading wrapped.
Pose2D interpolate_state(const WeightState& state, const StateModel& model,
                         const PriorMeanFn& prior_mean, double t);

namespace detail {
struct ProblemData;
}

// Gauss-Newton normal equations of the MAP objective at a linearization
// point b:
//
//   A = sum_i Phi_i^T H_i^T R_i^{-1} H_i Phi_i + P^{-1}
//   g = sum_i Phi_i^T H_i^T R_i^{-1} (z_i - h(Phi_i b)) + P^{-1} (mu - b)
//
// A is never formed. apply() runs one pass over the measurements at O(T D d + N)
// for T distinct measurement times. The sign of the prior term in g is the
// one that decreases the objective.
class LinearizedSystem {
 public:
  Eigen::Index size() const { return rhs_.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  // MAP objective at the linearization point.
  double objective() const { return objective_; }

 private:
  friend class MeasurementProblem;

  std::shared_ptr<const detail::ProblemData> data_;
  std::shared_ptr<const WeightState::PriorBlocks> priors_;
  int num_features_ = 0;
  // Whitened 2 x 5 Jacobian per measurement; unused rows are zero.
  std::vector<Eigen::Matrix<double, 2, 5>> jacobians_;
  Eigen::VectorXd diagonal_;
  Eigen::VectorXd rhs_;
  double objective_ = 0.0;
};

// A fixed set of measurements prepared for repeated linearization: the prior
// mean and the feature vectors at every distinct measurement time are
// evaluated once. The state passed to objective()/linearize() must hold every
// referenced landmark with the same landmark order as at construction.
class MeasurementProblem {
 public:
  // Throws InvalidArgument for unknown landmark ids or non-positive noise.
  MeasurementProblem(std::span<const Measurement> measurements, const StateModel& model,
                     const PriorMeanFn& prior_mean, const WeightState& layout);

  // sum_i |z_i - h(Phi_i b)|^2_{R_i} + |b - mu|^2_P, with |v|^2_R = v^T R^{-1} v.
  double objective(const WeightState& state) const;
  LinearizedSystem linearize(const WeightState& state) const;

  // Distinct measurement times, ascending.
  const std::vector<double>& times() const;
  // Estimated poses at times().
  Trajectory trajectory(const WeightState& state) const;
  // Per time: sqrt of the summed squared whitened residuals of its measurements.
  std::vector<double> residual_norms(const WeightState& state) const;

  std::size_t num_measurements() const;

 private:
  std::shared_ptr<const detail::ProblemData> data_;
};

// Convenience: build a MeasurementProblem and linearize once.
LinearizedSystem assemble_system(const WeightState& state, std::span<const Measurement> measurements,
                                 const StateModel& model, const PriorMeanFn& prior_mean);

double map_objective(const WeightState& state, std::span<const Measurement> measurements,
                     const StateModel& model, const PriorMeanFn& prior_mean);

struct LmStep {
  Eigen::VectorXd delta;
  int cg_iterations = 0;
  double relative_residual = 0.0;
};

// Solves (A + lambda diag(A)) delta = g by Jacobi-preconditioned conjugate
// gradients using only apply() and diagonal(). Stops once
// |residual| <= cg_tolerance |g|. cg_max_iter = 0 means
// kDefaultCgIterationsPerUnknown times the system size.
// Throws NumericalFailure carrying the achieved relative residual if the
// iteration cap is hit, InvalidArgument if lambda < 0.
LmStep lm_solve(const LinearizedSystem& system, double lambda, double cg_tolerance = 1e-8,
                int cg_max_iter = 0);

struct IterationLog {
  int iteration = 0;
  double lambda = 0.0;
  double objective = 0.0;  // objective after the iteration (unchanged if rejected)
  double trial_objective = 0.0;
  bool accepted = false;
  int cg_iterations = 0;
};

struct ConvergenceReport {
  int iterations = 0;
  int accepted_steps = 0;
  bool converged = false;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double final_lambda = 0.0;
  std::vector<IterationLog> log;
};

struct UpdateResult {
  WeightState state;
  ConvergenceReport report;
};

// Levenberg-Marquardt over the MAP objective. A trial step is accepted when
// it strictly lowers the objective (lambda *= lm_down), otherwise rejected
// (lambda *= lm_up). Stops when an accepted step changes the objective by a
// relative amount below `tolerance`, when the step vanishes, or after
// max_iterations trials; the last case is reported, not thrown.
UpdateResult update_state(const WeightState& state, std::span<const Measurement> measurements,
                          const StateModel& model, const PriorMeanFn& prior_mean,
                          const SolverConfig& config);

// Same loop over a prepared problem.
UpdateResult update_state(const WeightState& state, const MeasurementProblem& problem,
                          const SolverConfig& config);

// Landmark prior means from a trajectory guess.
//
// range_bearing: mean of the back-projections of all observations.
// bearing: least-squares intersection of the bearing rays.
// range: Gauss-Newton range fix, multi-start around the observing poses.
// Mixed or ill-conditioned cases fall back to back-projection along the
// first bearing (or along the robot heading at the first range).
// Covariance is prior_variance * I.
std::vector<LandmarkPrior> initialize_landmarks(std::span<const Measurement> measurements,
                                                const PriorMeanFn& trajectory_guess,
                                                double prior_variance);

// Heading at t_i from the direction of travel to t_{i+1}; the last point
// copies the previous heading. Throws InvalidArgument for < 2 points.
Trajectory heading_from_motion(const Trajectory& trajectory);

}  // namespace rffslam
