#include "rffslam/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rffslam/errors.hpp"

namespace rffslam::gp {
namespace {

void check_dataset(const Dataset& data) {
  if (data.inputs.rows() != data.outputs.size()) {
    throw InvalidArgument("gp: inputs and outputs have different lengths");
  }
  if (!(data.noise_variance >= 0.0)) {
    throw InvalidArgument("gp: noise variance must be non-negative");
  }
}

Eigen::LLT<Eigen::MatrixXd> factor_covariance(const Eigen::MatrixXd& k, double noise_variance) {
  const Eigen::Index n = k.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  if (noise_variance > 0.0) {
    constexpr std::array<double, 3> kJitter = {1e-10, 1e-8, 1e-6};
    for (double jitter : kJitter) {
      llt.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) return llt;
    }
  }
  throw NumericalFailure("exact_posterior: kernel matrix is not positive definite (" +
                         std::to_string(n) + " points, noise variance " +
                         std::to_string(noise_variance) + "); duplicate noiseless inputs?");
}

}  // namespace

Posterior exact_posterior(const Dataset& data, const Kernel& kernel, const MeanFunction& mean_fn,
                          const Eigen::VectorXd& query) {
  check_dataset(data);
  const Eigen::Index n = data.inputs.rows();
  const double prior_var = kernel(query, query);
  if (n == 0) return {mean_fn(query), prior_var};

  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd k_star(n);
  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = data.inputs.row(i).transpose();
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(xi, data.inputs.row(j).transpose());
    }
    k(i, i) += data.noise_variance;
    k_star(i) = kernel(query, xi);
    centered(i) = data.outputs(i) - mean_fn(xi);
  }

  const auto llt = factor_covariance(k, data.noise_variance);
  const Eigen::VectorXd alpha = llt.solve(centered);
  const Eigen::VectorXd half = llt.matrixL().solve(k_star);
  return {mean_fn(query) + k_star.dot(alpha), std::max(0.0, prior_var - half.squaredNorm())};
}

Eigen::VectorXd woodbury_apply(const Eigen::MatrixXd& features, double noise_variance,
                               const Eigen::VectorXd& v) {
  if (!(noise_variance > 0.0)) {
    throw InvalidArgument("woodbury_apply: noise variance must be positive");
  }
  if (features.rows() != v.size()) {
    throw InvalidArgument("woodbury_apply: feature matrix rows do not match vector length");
  }
  Eigen::MatrixXd inner = features.transpose() * features;
  inner.diagonal().array() += noise_variance;
  const Eigen::VectorXd projected = features.transpose() * v;
  const Eigen::VectorXd correction = features * inner.llt().solve(projected);
  return (v - correction) / noise_variance;
}

Posterior weight_space_posterior(const Dataset& data, const FeatureBasis& basis,
                                 const MeanFunction& mean_fn, const Eigen::VectorXd& query) {
  check_dataset(data);
  const Eigen::VectorXd phi_star = basis.map(query);
  const Eigen::Index n = data.inputs.rows();
  if (n == 0) return {mean_fn(query), phi_star.squaredNorm()};
  if (!(data.noise_variance > 0.0)) {
    throw InvalidArgument("weight_space_posterior: noise variance must be positive");
  }

  const Eigen::MatrixXd psi = basis.map_rows(data.inputs);
  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered(i) = data.outputs(i) - mean_fn(data.inputs.row(i).transpose());
  }
  // Posterior over weights: precision (Psi^T Psi + s I) / s.
  Eigen::MatrixXd inner = psi.transpose() * psi;
  inner.diagonal().array() += data.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("weight_space_posterior: inner system not positive definite");
  }
  const Eigen::VectorXd weights = llt.solve(psi.transpose() * centered);
  const double variance = data.noise_variance * phi_star.dot(llt.solve(phi_star));
  return {mean_fn(query) + phi_star.dot(weights), std::max(0.0, variance)};
}

}  // namespace rffslam::gp
