#include "rffslam/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "rffslam/errors.hpp"

namespace rffslam {

namespace detail {

struct ProblemData {
  StateModel model;
  int num_features = 0;
  int num_landmarks = 0;
  Eigen::Index state_size = 0;
  std::vector<double> times;
  // Rows are phi_m at times[k].
  std::array<Eigen::MatrixXd, kStateDim> features;
  // Rows are mu_x(times[k]) with unwrapped-agnostic heading.
  Eigen::MatrixXd prior_poses;

  struct Entry {
    int time = 0;
    int landmark = 0;
    MeasurementKind kind = MeasurementKind::kRangeBearing;
    Eigen::Vector2d value = Eigen::Vector2d::Zero();
    // 1 / sigma for the active rows, 0 elsewhere.
    Eigen::Vector2d inv_std = Eigen::Vector2d::Zero();
  };
  std::vector<Entry> entries;

  // T x 3 estimated poses for the parameter vector `b`.
  Eigen::MatrixXd poses(const Eigen::VectorXd& b) const {
    Eigen::MatrixXd out = prior_poses;
    for (int m = 0; m < kStateDim; ++m) {
      out.col(m).noalias() += features[m] * b.segment(Eigen::Index{m} * num_features, num_features);
    }
    return out;
  }

  Eigen::Vector2d landmark(const Eigen::VectorXd& b, int index) const {
    return b.segment<2>(Eigen::Index{kStateDim} * num_features + 2 * index);
  }
};

}  // namespace detail

namespace {

using Entry = detail::ProblemData::Entry;

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  if (m.isDiagonal(0.0)) {
    return m.diagonal().cwiseInverse().asDiagonal();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

// Whitened residual rows for one measurement (unused row zero).
Eigen::Vector2d whitened_residual(const Entry& e, const RangeBearing& rb) {
  Measurement z;
  z.kind = e.kind;
  z.value = e.value;
  return measurement_residual(z, rb.range, rb.bearing).cwiseProduct(e.inv_std);
}

// Whitened Jacobian rows for one measurement (unused row zero).
Eigen::Matrix<double, 2, 5> whitened_jacobian(const Entry& e, const RangeBearing& rb) {
  Eigen::Matrix<double, 2, 5> j = Eigen::Matrix<double, 2, 5>::Zero();
  switch (e.kind) {
    case MeasurementKind::kRange:
      j.row(0) = e.inv_std(0) * rb.jacobian.row(0);
      break;
    case MeasurementKind::kBearing:
      j.row(0) = e.inv_std(0) * rb.jacobian.row(1);
      break;
    case MeasurementKind::kRangeBearing:
      j.row(0) = e.inv_std(0) * rb.jacobian.row(0);
      j.row(1) = e.inv_std(1) * rb.jacobian.row(1);
      break;
  }
  return j;
}

RangeBearing predict(const Eigen::MatrixXd& poses, const Eigen::Vector2d& landmark, int time) {
  return predict_range_bearing(poses(time, 0), poses(time, 1), poses(time, 2), landmark(0),
                               landmark(1));
}

}  // namespace

// ---------------------------------------------------------------------------
// SolverConfig / StateModel

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("SolverConfig: " + what); };
  if (num_features < 2 || num_features % 2 != 0) fail("num_features must be even and >= 2");
  if (!(lengthscale > 0.0)) fail("lengthscale must be positive");
  if (!(time_scale > 0.0)) fail("time_scale must be positive");
  if (!(weight_prior_variance > 0.0)) fail("weight_prior_variance must be positive");
  if (!(landmark_prior_variance > 0.0)) fail("landmark_prior_variance must be positive");
  if (!(lm_lambda_init > 0.0)) fail("lm_lambda_init must be positive");
  if (!(lm_up > 1.0)) fail("lm_up must exceed 1");
  if (!(lm_down > 0.0 && lm_down < 1.0)) fail("lm_down must lie in (0, 1)");
  if (!(tolerance > 0.0)) fail("tolerance must be positive");
  if (max_iterations < 1) fail("max_iterations must be positive");
  if (!(cg_tolerance > 0.0)) fail("cg_tolerance must be positive");
  if (cg_max_iter < 0) fail("cg_max_iter must be non-negative");
}

StateModel StateModel::from_config(const SolverConfig& config, double time_origin) {
  StateModel model;
  const FeatureBasis basis =
      sample_frequencies(config.num_features, config.lengthscale, 1, config.seed);
  model.bases = {basis, basis, basis};
  model.time_origin = time_origin;
  model.time_scale = config.time_scale;
  return model;
}

// ---------------------------------------------------------------------------
// WeightState

WeightState::WeightState(int num_features, std::span<const LandmarkPrior> landmarks,
                         double weight_prior_variance)
    : num_features_(num_features) {
  if (num_features < 2) throw InvalidArgument("WeightState: num_features must be >= 2");
  if (!(weight_prior_variance > 0.0)) {
    throw InvalidArgument("WeightState: weight prior variance must be positive");
  }
  const Eigen::Index n = landmark_offset();
  values_ = Eigen::VectorXd::Zero(n);
  prior_mean_ = Eigen::VectorXd::Zero(n);
  auto blocks = std::make_shared<PriorBlocks>();
  for (int m = 0; m < kStateDim; ++m) {
    blocks->weight_cov[m] = weight_prior_variance * Eigen::MatrixXd::Identity(num_features, num_features);
    blocks->weight_precision[m] =
        (1.0 / weight_prior_variance) * Eigen::MatrixXd::Identity(num_features, num_features);
  }
  priors_ = std::move(blocks);
  for (const auto& prior : landmarks) add_landmark(prior);
}

void WeightState::set_values(const Eigen::VectorXd& values) {
  if (values.size() != values_.size()) {
    throw InvalidArgument("WeightState::set_values: expected " + std::to_string(values_.size()) +
                          " entries, got " + std::to_string(values.size()));
  }
  values_ = values;
}

std::optional<int> WeightState::landmark_index(LandmarkId id) const {
  const auto it = landmark_index_.find(id);
  if (it == landmark_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Landmark2D> WeightState::landmarks() const {
  std::vector<Landmark2D> out;
  out.reserve(landmark_ids_.size());
  for (int j = 0; j < num_landmarks(); ++j) {
    const Eigen::Vector2d l = landmark(j);
    out.push_back({landmark_ids_[static_cast<std::size_t>(j)], l(0), l(1)});
  }
  return out;
}

LandmarkPrior WeightState::landmark_prior(int index) const {
  return {landmark_ids_.at(static_cast<std::size_t>(index)),
          prior_mean_.segment<2>(landmark_offset() + 2 * index),
          priors_->landmark_cov.at(static_cast<std::size_t>(index))};
}

WeightState::PriorBlocks& WeightState::mutable_priors() {
  if (priors_.use_count() == 1) return const_cast<PriorBlocks&>(*priors_);
  auto copy = std::make_shared<PriorBlocks>(*priors_);
  PriorBlocks& ref = *copy;
  priors_ = std::move(copy);
  return ref;
}

void WeightState::set_weight_prior_cov(int m, const Eigen::MatrixXd& cov) {
  if (m < 0 || m >= kStateDim) throw InvalidArgument("set_weight_prior_cov: bad block index");
  if (cov.rows() != num_features_ || !is_spd(cov)) {
    throw InvalidArgument("set_weight_prior_cov: covariance must be D x D symmetric positive definite");
  }
  auto& blocks = mutable_priors();
  blocks.weight_cov[m] = cov;
  blocks.weight_precision[m] = spd_inverse(cov);
}

void WeightState::add_landmark(const LandmarkPrior& prior) {
  if (landmark_index_.contains(prior.id)) {
    throw InvalidArgument("WeightState: duplicate landmark id " + std::to_string(prior.id));
  }
  if (!is_spd(prior.cov) || !prior.mean.allFinite()) {
    throw InvalidArgument("WeightState: landmark " + std::to_string(prior.id) +
                          " prior covariance must be symmetric positive definite");
  }
  const Eigen::Index old = values_.size();
  values_.conservativeResize(old + 2);
  prior_mean_.conservativeResize(old + 2);
  values_.segment<2>(old) = prior.mean;
  prior_mean_.segment<2>(old) = prior.mean;
  landmark_index_.emplace(prior.id, num_landmarks());
  landmark_ids_.push_back(prior.id);
  auto& blocks = mutable_priors();
  blocks.landmark_cov.push_back(prior.cov);
  blocks.landmark_precision.push_back(spd_inverse(prior.cov));
}

void WeightState::reset_weights() { values_.head(landmark_offset()).setZero(); }

Eigen::VectorXd WeightState::apply_prior_precision(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (int m = 0; m < kStateDim; ++m) {
    const Eigen::Index off = Eigen::Index{m} * num_features_;
    out.segment(off, num_features_).noalias() =
        priors_->weight_precision[m] * v.segment(off, num_features_);
  }
  for (int j = 0; j < num_landmarks(); ++j) {
    const Eigen::Index off = landmark_offset() + 2 * j;
    out.segment<2>(off) = priors_->landmark_precision[static_cast<std::size_t>(j)] * v.segment<2>(off);
  }
  return out;
}

Eigen::VectorXd WeightState::prior_precision_diagonal() const {
  Eigen::VectorXd out(values_.size());
  for (int m = 0; m < kStateDim; ++m) {
    out.segment(Eigen::Index{m} * num_features_, num_features_) = priors_->weight_precision[m].diagonal();
  }
  for (int j = 0; j < num_landmarks(); ++j) {
    out.segment<2>(landmark_offset() + 2 * j) =
        priors_->landmark_precision[static_cast<std::size_t>(j)].diagonal();
  }
  return out;
}

double WeightState::prior_objective() const {
  const Eigen::VectorXd diff = values_ - prior_mean_;
  return diff.dot(apply_prior_precision(diff));
}

bool operator==(const WeightState& a, const WeightState& b) {
  if (a.num_features_ != b.num_features_ || a.landmark_ids_ != b.landmark_ids_) return false;
  if (a.values_ != b.values_ || a.prior_mean_ != b.prior_mean_) return false;
  for (int m = 0; m < kStateDim; ++m) {
    if (a.priors_->weight_cov[m] != b.priors_->weight_cov[m]) return false;
  }
  return a.priors_->landmark_cov == b.priors_->landmark_cov;
}

// ---------------------------------------------------------------------------

Pose2D interpolate_state(const WeightState& state, const StateModel& model,
                         const PriorMeanFn& prior_mean, double t) {
  if (!std::isfinite(t)) throw InvalidArgument("interpolate_state: non-finite time");
  if (model.num_features() != state.num_features()) {
    throw InvalidArgument("interpolate_state: basis size does not match state");
  }
  Eigen::Vector3d pose = prior_mean(t).vector();
  const double ft = model.feature_time(t);
  Eigen::VectorXd phi(state.num_features());
  for (int m = 0; m < kStateDim; ++m) {
    model.bases[m].map_into(ft, phi);
    pose(m) += phi.dot(state.weights(m));
  }
  return Pose2D::from_vector(pose);
}

// ---------------------------------------------------------------------------
// MeasurementProblem

MeasurementProblem::MeasurementProblem(std::span<const Measurement> measurements,
                                       const StateModel& model, const PriorMeanFn& prior_mean,
                                       const WeightState& layout) {
  if (model.num_features() != layout.num_features()) {
    throw InvalidArgument("MeasurementProblem: basis size does not match state");
  }
  auto data = std::make_shared<detail::ProblemData>();
  data->model = model;
  data->num_features = layout.num_features();
  data->num_landmarks = layout.num_landmarks();
  data->state_size = layout.size();

  for (const auto& z : measurements) {
    if (!std::isfinite(z.time)) throw InvalidArgument("MeasurementProblem: non-finite time");
    data->times.push_back(z.time);
  }
  std::sort(data->times.begin(), data->times.end());
  data->times.erase(std::unique(data->times.begin(), data->times.end()), data->times.end());

  const auto num_times = static_cast<Eigen::Index>(data->times.size());
  const int d = data->num_features;
  data->prior_poses.resize(num_times, kStateDim);
  for (int m = 0; m < kStateDim; ++m) data->features[m].resize(num_times, d);
  Eigen::VectorXd phi(d);
  for (Eigen::Index k = 0; k < num_times; ++k) {
    const double t = data->times[static_cast<std::size_t>(k)];
    data->prior_poses.row(k) = prior_mean(t).vector().transpose();
    const double ft = model.feature_time(t);
    for (int m = 0; m < kStateDim; ++m) {
      model.bases[m].map_into(ft, phi);
      data->features[m].row(k) = phi.transpose();
    }
  }

  data->entries.reserve(measurements.size());
  for (const auto& z : measurements) {
    const auto index = layout.landmark_index(z.landmark_id);
    if (!index) {
      throw InvalidArgument("measurement at t=" + std::to_string(z.time) +
                            " references unknown landmark id " + std::to_string(z.landmark_id));
    }
    Entry e;
    e.time = static_cast<int>(std::lower_bound(data->times.begin(), data->times.end(), z.time) -
                              data->times.begin());
    e.landmark = *index;
    e.kind = z.kind;
    e.value = z.value;
    for (int r = 0; r < z.dim(); ++r) {
      if (!(z.noise_std(r) > 0.0) || !std::isfinite(z.noise_std(r))) {
        throw InvalidArgument("measurement at t=" + std::to_string(z.time) +
                              ": noise covariance must be positive definite");
      }
      e.inv_std(r) = 1.0 / z.noise_std(r);
    }
    data->entries.push_back(e);
  }
  data_ = std::move(data);
}

const std::vector<double>& MeasurementProblem::times() const { return data_->times; }

std::size_t MeasurementProblem::num_measurements() const { return data_->entries.size(); }

double MeasurementProblem::objective(const WeightState& state) const {
  const Eigen::MatrixXd poses = data_->poses(state.values());
  double total = 0.0;
  for (const auto& e : data_->entries) {
    const auto rb = predict(poses, data_->landmark(state.values(), e.landmark), e.time);
    total += whitened_residual(e, rb).squaredNorm();
  }
  return total + state.prior_objective();
}

std::vector<double> MeasurementProblem::residual_norms(const WeightState& state) const {
  const Eigen::MatrixXd poses = data_->poses(state.values());
  std::vector<double> sq(data_->times.size(), 0.0);
  for (const auto& e : data_->entries) {
    const auto rb = predict(poses, data_->landmark(state.values(), e.landmark), e.time);
    sq[static_cast<std::size_t>(e.time)] += whitened_residual(e, rb).squaredNorm();
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

Trajectory MeasurementProblem::trajectory(const WeightState& state) const {
  const Eigen::MatrixXd poses = data_->poses(state.values());
  Trajectory out;
  out.reserve(data_->times.size());
  for (std::size_t k = 0; k < data_->times.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    out.push_back({data_->times[k], Pose2D::from_vector(poses.row(row).transpose())});
  }
  return out;
}

LinearizedSystem MeasurementProblem::linearize(const WeightState& state) const {
  if (state.size() != data_->state_size) {
    throw InvalidArgument("linearize: state layout differs from the problem layout");
  }
  const auto& data = *data_;
  const int d = data.num_features;
  const auto num_times = static_cast<Eigen::Index>(data.times.size());
  const Eigen::Index offset = state.landmark_offset();

  LinearizedSystem sys;
  sys.data_ = data_;
  sys.priors_ = state.priors_;
  sys.num_features_ = d;
  sys.jacobians_.reserve(data.entries.size());

  const Eigen::MatrixXd poses = data.poses(state.values());
  Eigen::MatrixXd pose_grad = Eigen::MatrixXd::Zero(num_times, kStateDim);
  Eigen::MatrixXd pose_curv = Eigen::MatrixXd::Zero(num_times, kStateDim);
  sys.rhs_ = Eigen::VectorXd::Zero(state.size());
  sys.diagonal_ = Eigen::VectorXd::Zero(state.size());
  double data_term = 0.0;

  for (const auto& e : data.entries) {
    const auto rb = predict(poses, data.landmark(state.values(), e.landmark), e.time);
    const Eigen::Vector2d r = whitened_residual(e, rb);
    const Eigen::Matrix<double, 2, 5> j = whitened_jacobian(e, rb);
    data_term += r.squaredNorm();
    pose_grad.row(e.time) += (j.leftCols<3>().transpose() * r).transpose();
    pose_curv.row(e.time) += j.leftCols<3>().colwise().squaredNorm();
    const Eigen::Index l = offset + 2 * e.landmark;
    sys.rhs_.segment<2>(l) += j.rightCols<2>().transpose() * r;
    sys.diagonal_.segment<2>(l) += j.rightCols<2>().colwise().squaredNorm().transpose();
    sys.jacobians_.push_back(j);
  }
  for (int m = 0; m < kStateDim; ++m) {
    const Eigen::Index off = Eigen::Index{m} * d;
    sys.rhs_.segment(off, d).noalias() = data.features[m].transpose() * pose_grad.col(m);
    sys.diagonal_.segment(off, d).noalias() =
        data.features[m].array().square().matrix().transpose() * pose_curv.col(m);
  }
  const Eigen::VectorXd prior_diff = state.prior_mean() - state.values();
  const Eigen::VectorXd prior_pull = state.apply_prior_precision(prior_diff);
  sys.rhs_ += prior_pull;
  sys.diagonal_ += state.prior_precision_diagonal();
  sys.objective_ = data_term + prior_diff.dot(prior_pull);
  return sys;
}

// ---------------------------------------------------------------------------
// LinearizedSystem

Eigen::VectorXd LinearizedSystem::apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out;
  apply(v, out);
  return out;
}

void LinearizedSystem::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  if (v.size() != size()) throw InvalidArgument("LinearizedSystem::apply: size mismatch");
  const auto& data = *data_;
  const int d = num_features_;
  const Eigen::Index offset = Eigen::Index{kStateDim} * d;
  const auto num_times = static_cast<Eigen::Index>(data.times.size());

  // Pose perturbation at every time: column m is Phi_m v_m.
  Eigen::MatrixXd pose_delta(num_times, kStateDim);
  for (int m = 0; m < kStateDim; ++m) {
    pose_delta.col(m).noalias() = data.features[m] * v.segment(Eigen::Index{m} * d, d);
  }

  out = Eigen::VectorXd::Zero(size());
  Eigen::MatrixXd pose_adj = Eigen::MatrixXd::Zero(num_times, kStateDim);
  for (std::size_t i = 0; i < data.entries.size(); ++i) {
    const auto& e = data.entries[i];
    const auto& j = jacobians_[i];
    const Eigen::Index l = offset + 2 * e.landmark;
    const Eigen::Vector2d y =
        j.leftCols<3>() * pose_delta.row(e.time).transpose() + j.rightCols<2>() * v.segment<2>(l);
    pose_adj.row(e.time) += (j.leftCols<3>().transpose() * y).transpose();
    out.segment<2>(l) += j.rightCols<2>().transpose() * y;
  }
  for (int m = 0; m < kStateDim; ++m) {
    out.segment(Eigen::Index{m} * d, d).noalias() = data.features[m].transpose() * pose_adj.col(m);
  }

  const auto& priors = *priors_;
  for (int m = 0; m < kStateDim; ++m) {
    const Eigen::Index off = Eigen::Index{m} * d;
    out.segment(off, d).noalias() += priors.weight_precision[m] * v.segment(off, d);
  }
  for (std::size_t j = 0; j < priors.landmark_precision.size(); ++j) {
    const Eigen::Index l = offset + 2 * static_cast<Eigen::Index>(j);
    out.segment<2>(l) += priors.landmark_precision[j] * v.segment<2>(l);
  }
}

LinearizedSystem assemble_system(const WeightState& state, std::span<const Measurement> measurements,
                                 const StateModel& model, const PriorMeanFn& prior_mean) {
  return MeasurementProblem(measurements, model, prior_mean, state).linearize(state);
}

double map_objective(const WeightState& state, std::span<const Measurement> measurements,
                     const StateModel& model, const PriorMeanFn& prior_mean) {
  return MeasurementProblem(measurements, model, prior_mean, state).objective(state);
}

// ---------------------------------------------------------------------------
// Solver

LmStep lm_solve(const LinearizedSystem& system, double lambda, double cg_tolerance,
                int cg_max_iter) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lm_solve: lambda must be non-negative");
  const Eigen::Index n = system.size();
  LmStep step;
  step.delta = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd& g = system.rhs();
  const double g_norm = g.norm();
  if (g_norm == 0.0) return step;

  const Eigen::VectorXd damped_diag = (1.0 + lambda) * system.diagonal();
  if ((damped_diag.array() <= 0.0).any()) {
    throw NumericalFailure("lm_solve: system diagonal is not positive");
  }
  const Eigen::VectorXd inv_diag = damped_diag.cwiseInverse();
  const int max_iter = cg_max_iter > 0 ? cg_max_iter : kDefaultCgIterationsPerUnknown * static_cast<int>(n);

  Eigen::VectorXd r = g;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap;
  double rz = r.dot(z);
  double rel = 1.0;
  for (int k = 1; k <= max_iter; ++k) {
    system.apply(p, ap);
    ap += lambda * system.diagonal().cwiseProduct(p);
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      throw NumericalFailure("lm_solve: operator not positive definite along search direction", rel);
    }
    const double alpha = rz / curvature;
    step.delta += alpha * p;
    r -= alpha * ap;
    rel = r.norm() / g_norm;
    step.cg_iterations = k;
    step.relative_residual = rel;
    if (rel <= cg_tolerance) return step;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw NumericalFailure("lm_solve: conjugate gradients did not converge in " +
                             std::to_string(max_iter) + " iterations (relative residual " +
                             std::to_string(rel) + ")",
                         rel);
}

namespace {

double trial_objective(const MeasurementProblem& problem, const WeightState& state) {
  try {
    const double f = problem.objective(state);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  } catch (const DegenerateGeometry&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

UpdateResult update_state(const WeightState& state, const MeasurementProblem& problem,
                          const SolverConfig& config) {
  config.validate();
  UpdateResult result{state, {}};
  auto& report = result.report;
  WeightState& current = result.state;

  double objective = problem.objective(current);
  report.initial_objective = objective;
  double lambda = config.lm_lambda_init;
  std::optional<LinearizedSystem> system;

  for (int n = 1; n <= config.max_iterations; ++n) {
    if (!system) system = problem.linearize(current);
    report.iterations = n;
    if (system->rhs().norm() == 0.0) {
      report.converged = true;
      break;
    }
    const LmStep step = lm_solve(*system, lambda, config.cg_tolerance, config.cg_max_iter);

    WeightState trial = current;
    trial.set_values(current.values() + step.delta);
    const double trial_f = trial_objective(problem, trial);

    IterationLog entry{n, lambda, objective, trial_f, false, step.cg_iterations};
    if (trial_f < objective) {
      const double relative_change = (objective - trial_f) / objective;
      current = std::move(trial);
      objective = trial_f;
      system.reset();
      ++report.accepted_steps;
      entry.accepted = true;
      entry.objective = objective;
      lambda = std::max(lambda * config.lm_down, 1e-12);
      report.log.push_back(entry);
      if (relative_change < config.tolerance) {
        report.converged = true;
        break;
      }
    } else {
      report.log.push_back(entry);
      lambda *= config.lm_up;
      // A vanishing step that still fails to decrease the objective means we
      // sit at a minimum to working precision.
      const double scale = 1.0 + current.values().norm();
      if (step.delta.norm() <= 1e-12 * scale || lambda > 1e16) {
        report.converged = true;
        break;
      }
    }
  }
  report.final_objective = objective;
  report.final_lambda = lambda;
  return result;
}

UpdateResult update_state(const WeightState& state, std::span<const Measurement> measurements,
                          const StateModel& model, const PriorMeanFn& prior_mean,
                          const SolverConfig& config) {
  return update_state(state, MeasurementProblem(measurements, model, prior_mean, state), config);
}

// ---------------------------------------------------------------------------
// Landmark initialization

namespace {

Eigen::Vector2d ray(double heading, double bearing) {
  return {std::cos(heading + bearing), std::sin(heading + bearing)};
}

std::optional<Eigen::Vector2d> intersect_rays(const std::vector<Eigen::Vector2d>& origins,
                                              const std::vector<Eigen::Vector2d>& directions) {
  if (origins.size() < 2) return std::nullopt;
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const Eigen::Vector2d n(-directions[i](1), directions[i](0));
    normal += n * n.transpose();
    rhs += n * n.dot(origins[i]);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal);
  if (eig.eigenvalues()(0) < 1e-6 * eig.eigenvalues()(1)) return std::nullopt;
  const Eigen::Vector2d point = normal.ldlt().solve(rhs);
  // The point must lie in front of most rays.
  int in_front = 0;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    if ((point - origins[i]).dot(directions[i]) > 0.0) ++in_front;
  }
  if (2 * in_front <= static_cast<int>(origins.size())) return std::nullopt;
  return point;
}

double range_cost(const std::vector<Eigen::Vector2d>& centers, const std::vector<double>& ranges,
                  const Eigen::Vector2d& point) {
  double cost = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double e = (point - centers[i]).norm() - ranges[i];
    cost += e * e;
  }
  return cost;
}

// Gauss-Newton on the range residuals with step halving.
Eigen::Vector2d refine_range_fix(const std::vector<Eigen::Vector2d>& centers,
                                 const std::vector<double>& ranges, Eigen::Vector2d point) {
  double cost = range_cost(centers, ranges, point);
  for (int it = 0; it < 50; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Eigen::Vector2d diff = point - centers[i];
      const double r = diff.norm();
      if (r < kMinRange) continue;
      const Eigen::Vector2d j = diff / r;
      jtj += j * j.transpose();
      jtr += j * (ranges[i] - r);
    }
    Eigen::Vector2d delta = (jtj + 1e-9 * Eigen::Matrix2d::Identity()).ldlt().solve(jtr);
    if (!delta.allFinite()) break;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::Vector2d trial = point + delta;
      const double trial_cost = range_cost(centers, ranges, trial);
      if (trial_cost < cost) {
        point = trial;
        cost = trial_cost;
        improved = true;
        break;
      }
      delta *= 0.5;
    }
    if (!improved || delta.norm() < 1e-10) break;
  }
  return point;
}

// Least-squares fix from ranges to known centers. Near-collinear centers make
// the problem multimodal (mirror images), so several starts are refined and the
// cheapest kept: the linearized solution and rings at the measured range
// around the first, middle and last centers.
std::optional<Eigen::Vector2d> multilaterate(const std::vector<Eigen::Vector2d>& centers,
                                             const std::vector<double>& ranges) {
  if (centers.size() < 3) return std::nullopt;
  std::vector<Eigen::Vector2d> starts;

  Eigen::MatrixXd a(static_cast<Eigen::Index>(centers.size() - 1), 2);
  Eigen::VectorXd b(a.rows());
  for (std::size_t i = 1; i < centers.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i - 1);
    a.row(row) = 2.0 * (centers[i] - centers[0]).transpose();
    b(row) = ranges[0] * ranges[0] - ranges[i] * ranges[i] + centers[i].squaredNorm() -
             centers[0].squaredNorm();
  }
  const Eigen::Matrix2d normal = a.transpose() * a;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal);
  if (eig.eigenvalues()(0) > 1e-8 * eig.eigenvalues()(1)) {
    const Eigen::Vector2d linear = normal.ldlt().solve(a.transpose() * b);
    if (linear.allFinite()) starts.push_back(linear);
  }
  constexpr int kRingStarts = 12;
  for (const std::size_t k : {std::size_t{0}, centers.size() / 2, centers.size() - 1}) {
    for (int j = 0; j < kRingStarts; ++j) {
      const double angle = 2.0 * std::numbers::pi * j / kRingStarts;
      starts.push_back(centers[k] + ranges[k] * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
    }
  }

  std::optional<Eigen::Vector2d> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    const Eigen::Vector2d point = refine_range_fix(centers, ranges, start);
    const double cost = range_cost(centers, ranges, point);
    if (point.allFinite() && cost < best_cost) {
      best = point;
      best_cost = cost;
    }
  }
  return best;
}

}  // namespace

std::vector<LandmarkPrior> initialize_landmarks(std::span<const Measurement> measurements,
                                                const PriorMeanFn& trajectory_guess,
                                                double prior_variance) {
  if (!(prior_variance > 0.0)) {
    throw InvalidArgument("initialize_landmarks: prior variance must be positive");
  }
  std::map<LandmarkId, std::vector<const Measurement*>> by_id;
  for (const auto& z : measurements) by_id[z.landmark_id].push_back(&z);

  constexpr double kDefaultDepth = 10.0;
  std::vector<LandmarkPrior> out;
  out.reserve(by_id.size());
  for (const auto& [id, zs] : by_id) {
    std::vector<Eigen::Vector2d> back_projections, origins, directions, centers;
    std::vector<double> ranges;
    for (const Measurement* z : zs) {
      const Pose2D pose = trajectory_guess(z->time);
      const Eigen::Vector2d origin(pose.x, pose.y);
      switch (z->kind) {
        case MeasurementKind::kRangeBearing:
          back_projections.push_back(origin + z->value(0) * ray(pose.heading, z->value(1)));
          break;
        case MeasurementKind::kBearing:
          origins.push_back(origin);
          directions.push_back(ray(pose.heading, z->value(0)));
          break;
        case MeasurementKind::kRange:
          centers.push_back(origin);
          ranges.push_back(z->value(0));
          break;
      }
    }

    std::optional<Eigen::Vector2d> mean;
    if (!back_projections.empty()) {
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      for (const auto& p : back_projections) sum += p;
      mean = sum / static_cast<double>(back_projections.size());
    } else if (!origins.empty()) {
      mean = intersect_rays(origins, directions);
      if (!mean) mean = origins.front() + kDefaultDepth * directions.front();
    } else {
      mean = multilaterate(centers, ranges);
      if (!mean) {
        const Pose2D pose = trajectory_guess(zs.front()->time);
        mean = centers.front() + ranges.front() * ray(pose.heading, 0.0);
      }
    }
    out.push_back({id, *mean, prior_variance * Eigen::Matrix2d::Identity()});
  }
  return out;
}

Trajectory heading_from_motion(const Trajectory& trajectory) {
  if (trajectory.size() < 2) {
    throw InvalidArgument("heading_from_motion: need at least 2 trajectory points");
  }
  Trajectory out = trajectory;
  std::optional<double> last;
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    const double dx = trajectory[i + 1].pose.x - trajectory[i].pose.x;
    const double dy = trajectory[i + 1].pose.y - trajectory[i].pose.y;
    if (std::hypot(dx, dy) > 1e-12) {
      last = wrap_angle(std::atan2(dy, dx));
    }
    out[i].pose.heading = last.value_or(0.0);
  }
  // Leading stationary points take the first observed direction.
  if (last) {
    std::optional<double> first;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      const double dx = trajectory[i + 1].pose.x - trajectory[i].pose.x;
      const double dy = trajectory[i + 1].pose.y - trajectory[i].pose.y;
      if (std::hypot(dx, dy) > 1e-12) {
        first = out[i].pose.heading;
        break;
      }
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      const double dx = trajectory[i + 1].pose.x - trajectory[i].pose.x;
      const double dy = trajectory[i + 1].pose.y - trajectory[i].pose.y;
      if (std::hypot(dx, dy) > 1e-12) break;
      out[i].pose.heading = *first;
    }
  }
  out.back().pose.heading = out[out.size() - 2].pose.heading;
  return out;
}

}  // namespace rffslam
