#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace rffslam::oracle {

double rbf(double x, double y, double lengthscale) {
  const double d = (x - y) / lengthscale;
  return std::exp(-0.5 * d * d);
}

Eigen::VectorXd feature_vector(const Eigen::MatrixXd& frequencies, double t) {
  const auto half = frequencies.rows();
  Eigen::VectorXd phi(2 * half);
  const double scale = std::sqrt(1.0 / static_cast<double>(half));
  for (Eigen::Index j = 0; j < half; ++j) {
    phi(2 * j) = scale * std::cos(frequencies(j, 0) * t);
    phi(2 * j + 1) = scale * std::sin(frequencies(j, 0) * t);
  }
  return phi;
}

double wrap(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

Eigen::Vector2d range_bearing(const Eigen::Vector3d& pose, const Eigen::Vector2d& landmark) {
  const double dx = landmark.x() - pose.x();
  const double dy = landmark.y() - pose.y();
  return {std::hypot(dx, dy), wrap(std::atan2(dy, dx) - pose.z())};
}

Eigen::Matrix<double, 2, 5> range_bearing_jacobian(const Eigen::Vector3d& pose,
                                                    const Eigen::Vector2d& landmark) {
  const double dx = landmark.x() - pose.x();
  const double dy = landmark.y() - pose.y();
  const double q = dx * dx + dy * dy;
  const double r = std::sqrt(q);
  Eigen::Matrix<double, 2, 5> J;
  J << -dx / r, -dy / r, 0.0, dx / r, dy / r,
       dy / q, -dx / q, -1.0, -dy / q, dx / q;
  return J;
}

Eigen::MatrixXd whitening(const Measurement& m) {
  switch (m.kind) {
    case MeasurementKind::kRange: {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(1, 2);
      W(0, 0) = 1.0 / m.noise_std(0);
      return W;
    }
    case MeasurementKind::kBearing: {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(1, 2);
      W(0, 1) = 1.0 / m.noise_std(0);
      return W;
    }
    case MeasurementKind::kRangeBearing:
      break;
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
  W(0, 0) = 1.0 / m.noise_std(0);
  W(1, 1) = 1.0 / m.noise_std(1);
  return W;
}

namespace {

Eigen::Vector2d measured(const Measurement& m) {
  switch (m.kind) {
    case MeasurementKind::kRange:
      return {m.value(0), 0.0};
    case MeasurementKind::kBearing:
      return {0.0, m.value(0)};
    case MeasurementKind::kRangeBearing:
      break;
  }
  return m.value;
}

// 5 x n map from parameters to (x, y, heading correction, lx, ly).
Eigen::MatrixXd selector(const WeightState& state, const StateModel& model, const Measurement& m) {
  const int D = state.num_features();
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(5, state.size());
  const double tau = model.feature_time(m.time);
  for (int d = 0; d < 3; ++d) {
    Phi.block(d, Eigen::Index{d} * D, 1, D) = feature_vector(model.bases[d].frequencies(), tau).transpose();
  }
  const int k = *state.landmark_index(m.landmark_id);
  Phi(3, state.landmark_offset() + 2 * k) = 1.0;
  Phi(4, state.landmark_offset() + 2 * k + 1) = 1.0;
  return Phi;
}

Eigen::MatrixXd prior_precision(const WeightState& state) {
  const int D = state.num_features();
  const Eigen::Index n = state.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d < 3; ++d) cov.block(Eigen::Index{d} * D, Eigen::Index{d} * D, D, D) = state.weight_prior_cov(d);
  for (int k = 0; k < state.num_landmarks(); ++k) {
    cov.block<2, 2>(state.landmark_offset() + 2 * k, state.landmark_offset() + 2 * k) =
        state.landmark_prior(k).cov;
  }
  return cov.inverse();
}

}  // namespace

DenseSystem dense_system(const WeightState& state, std::span<const Measurement> measurements,
                         const StateModel& model, const PriorMeanFn& prior_mean) {
  DenseSystem out;
  out.prior_precision = prior_precision(state);
  out.A = out.prior_precision;
  const Eigen::VectorXd diff = state.prior_mean() - state.values();
  out.g = out.prior_precision * diff;
  out.objective = diff.dot(out.prior_precision * diff);
  for (const auto& m : measurements) {
    const Eigen::MatrixXd Phi = selector(state, model, m);
    const Eigen::VectorXd y = Phi * state.values();
    const Pose2D mu = prior_mean(m.time);
    const Eigen::Vector3d pose(mu.x + y(0), mu.y + y(1), mu.heading + y(2));
    const Eigen::Vector2d h = range_bearing(pose, y.tail<2>());
    Eigen::Vector2d r = measured(m) - h;
    r(1) = wrap(r(1));
    const Eigen::MatrixXd W = whitening(m);
    const Eigen::MatrixXd J = W * range_bearing_jacobian(pose, y.tail<2>()) * Phi;
    const Eigen::VectorXd wr = W * r;
    out.A += J.transpose() * J;
    out.g += J.transpose() * wr;
    out.objective += wr.squaredNorm();
  }
  return out;
}

double dense_objective(const WeightState& state, const Eigen::VectorXd& values,
                       std::span<const Measurement> measurements, const StateModel& model,
                       const PriorMeanFn& prior_mean) {
  WeightState copy = state;
  copy.set_values(values);
  return dense_system(copy, measurements, model, prior_mean).objective;
}

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = f(probe);
    probe(i) = x(i) - step;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

Eigen::MatrixXd central_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const Eigen::VectorXd up = f(probe);
    probe(i) = x(i) - step;
    const Eigen::VectorXd down = f(probe);
    probe(i) = x(i);
    J.col(i) = (up - down) / (2.0 * step);
  }
  return J;
}

namespace {

Eigen::Matrix4d homogeneous(const Pose2D& p) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  const double c = std::cos(p.heading), s = std::sin(p.heading);
  T(0, 0) = c;
  T(0, 1) = -s;
  T(1, 0) = s;
  T(1, 1) = c;
  T(0, 3) = p.x;
  T(1, 3) = p.y;
  return T;
}

// The error transforms here are rotations about z.
double angle_of(const Eigen::Matrix4d& T) { return std::abs(std::atan2(T(1, 0), T(0, 0))); }

}  // namespace

Metrics direct_metrics(const Trajectory& estimate, const Trajectory& ground_truth) {
  Metrics m;
  const std::size_t n = estimate.size();
  double at = 0, ar = 0, rt = 0, rr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Matrix4d e = homogeneous(ground_truth[i].pose).inverse() * homogeneous(estimate[i].pose);
    at += e.block<3, 1>(0, 3).squaredNorm();
    ar += std::pow(angle_of(e), 2);
    if (i == 0) continue;
    const Eigen::Matrix4d d_gt =
        homogeneous(ground_truth[i - 1].pose).inverse() * homogeneous(ground_truth[i].pose);
    const Eigen::Matrix4d d_est =
        homogeneous(estimate[i - 1].pose).inverse() * homogeneous(estimate[i].pose);
    const Eigen::Matrix4d r = d_gt.inverse() * d_est;
    rt += r.block<3, 1>(0, 3).squaredNorm();
    rr += std::pow(angle_of(r), 2);
  }
  m.ape_trans = std::sqrt(at / n);
  m.ape_rot = std::sqrt(ar / n);
  if (n > 1) {
    m.rpe_trans = std::sqrt(rt / (n - 1));
    m.rpe_rot = std::sqrt(rr / (n - 1));
  }
  return m;
}

Instance random_instance(std::uint64_t seed, const InstanceOptions& options) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(gen); };

  SolverConfig config;
  config.num_features = options.num_features;
  config.lengthscale = uniform(1.0, 4.0);
  config.seed = seed;
  config.time_scale = uniform(0.5, 1.5);

  Instance inst;
  inst.model = StateModel::from_config(config, uniform(-1.0, 1.0));
  const double speed = uniform(1.0, 2.0);
  const double swing = uniform(0.0, 1.0);
  inst.prior = [speed, swing](double t) {
    return Pose2D{speed * t - 10.0, swing * std::sin(t), 0.3 * std::cos(0.5 * t)};
  };

  std::vector<LandmarkPrior> priors;
  std::vector<Eigen::Vector2d> truth;
  for (int k = 0; k < options.num_landmarks; ++k) {
    const double side = (k % 2 == 0) ? 1.0 : -1.0;
    const Eigen::Vector2d p(uniform(-15.0, 15.0), side * uniform(6.0, 20.0));
    truth.push_back(p);
    LandmarkPrior prior;
    prior.id = 100 + 7 * k;
    prior.mean = p + Eigen::Vector2d(normal(gen), normal(gen));
    const double a = uniform(0.5, 3.0), b = uniform(0.5, 3.0);
    const double c = uniform(-0.4, 0.4) * std::sqrt(a * b);
    prior.cov << a, c, c, b;
    priors.push_back(prior);
  }
  inst.state = WeightState(options.num_features, priors, uniform(0.5, 2.0));
  if (options.dense_weight_prior) {
    for (int d = 0; d < 3; ++d) {
      Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(options.num_features, options.num_features,
                                                       [&] { return normal(gen); });
      inst.state.set_weight_prior_cov(
          d, B * B.transpose() / options.num_features +
                 Eigen::MatrixXd::Identity(options.num_features, options.num_features));
    }
  }
  Eigen::VectorXd values = inst.state.values();
  for (Eigen::Index i = 0; i < inst.state.landmark_offset(); ++i) values(i) = options.weight_scale * normal(gen);
  for (int k = 0; k < options.num_landmarks; ++k) {
    values.segment<2>(inst.state.landmark_offset() + 2 * k) =
        truth[k] + 0.3 * Eigen::Vector2d(normal(gen), normal(gen));
  }
  inst.state.set_values(values);

  const MeasurementKind kinds[] = {MeasurementKind::kRange, MeasurementKind::kBearing,
                                   MeasurementKind::kRangeBearing};
  for (int i = 0; i < options.num_measurements; ++i) {
    Measurement m;
    m.time = uniform(0.0, 10.0);
    const int k = static_cast<int>(gen() % static_cast<std::uint64_t>(options.num_landmarks));
    m.landmark_id = priors[k].id;
    m.kind = options.mixed_kinds ? kinds[gen() % 3] : MeasurementKind::kRangeBearing;
    const Pose2D mu = inst.prior(m.time);
    const Eigen::Vector2d rb = range_bearing(Eigen::Vector3d(mu.x, mu.y, mu.heading), truth[k]);
    const double range_sigma = uniform(0.1, 1.0), bearing_sigma = uniform(0.01, 0.1);
    switch (m.kind) {
      case MeasurementKind::kRange:
        m.value = {rb(0) + range_sigma * normal(gen), 0.0};
        m.noise_std = {range_sigma, 0.0};
        break;
      case MeasurementKind::kBearing:
        m.value = {wrap(rb(1) + bearing_sigma * normal(gen)), 0.0};
        m.noise_std = {bearing_sigma, 0.0};
        break;
      case MeasurementKind::kRangeBearing:
        m.value = {rb(0) + range_sigma * normal(gen), wrap(rb(1) + bearing_sigma * normal(gen))};
        m.noise_std = {range_sigma, bearing_sigma};
        break;
    }
    inst.measurements.push_back(m);
  }
  std::sort(inst.measurements.begin(), inst.measurements.end(),
            [](const Measurement& a, const Measurement& b) { return a.time < b.time; });
  return inst;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace rffslam::oracle
