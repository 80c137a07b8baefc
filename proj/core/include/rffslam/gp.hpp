#pragma once

#include <functional>

#include <Eigen/Dense>

#include "rffslam/features.hpp"

namespace rffslam::gp {

// Reference GP regression used to validate the feature-space machinery on
// small problems. Nothing in the estimator depends on it.

using Kernel = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using MeanFunction = std::function<double(const Eigen::VectorXd&)>;

struct Dataset {
  Eigen::MatrixXd inputs;   // N x d
  Eigen::VectorXd outputs;  // N
  double noise_variance = 0.0;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Closed-form conditional mean and variance at `query`.
//
// K = K_f + noise_variance * I is factored by Cholesky. When noise_variance > 0
// and the factorization fails for round-off reasons, diagonal jitter is
// escalated 1e-10, 1e-8, 1e-6. A noiseless singular K (duplicate inputs)
// is not regularized: it raises NumericalFailure.
Posterior exact_posterior(const Dataset& data, const Kernel& kernel, const MeanFunction& mean_fn,
                          const Eigen::VectorXd& query);

// (Psi Psi^T + noise_variance I)^{-1} v through the D x D inner system:
//
//   (1/s) [v - Psi (s I_D + Psi^T Psi)^{-1} Psi^T v],   s = noise_variance.
//
// O(N D^2). Throws InvalidArgument if noise_variance <= 0 or shapes disagree.
Eigen::VectorXd woodbury_apply(const Eigen::MatrixXd& features, double noise_variance,
                               const Eigen::VectorXd& v);

// Weight-space view of the GP whose kernel is basis.approx_kernel: Bayesian
// linear regression on phi(x) with weights ~ N(0, I).
Posterior weight_space_posterior(const Dataset& data, const FeatureBasis& basis,
                                 const MeanFunction& mean_fn, const Eigen::VectorXd& query);

}  // namespace rffslam::gp
