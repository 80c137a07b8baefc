#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace rffslam {

// Random Fourier feature basis for the RBF kernel
//
//   k(x, y) = exp(-|x - y|^2 / (2 lengthscale^2)).
//
// Frequencies are drawn i.i.d. from N(0, I / lengthscale^2), the spectral
// density of the kernel. Each frequency contributes a cos/sin pair, so the
// feature map
//
//   phi(x) = sqrt(2 / D) [cos(w_1.x), sin(w_1.x), ..., cos(w_{D/2}.x), sin(w_{D/2}.x)]
//
// has unit norm for every input and phi(x).phi(y) -> k(x, y) as D grows.
class FeatureBasis {
 public:
  FeatureBasis() = default;
  // Takes ownership of precomputed frequencies (rows = D/2, cols = input dim).
  FeatureBasis(Eigen::MatrixXd frequencies, double lengthscale, std::uint64_t seed);

  int num_features() const { return static_cast<int>(2 * frequencies_.rows()); }
  int input_dim() const { return static_cast<int>(frequencies_.cols()); }
  double lengthscale() const { return lengthscale_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& frequencies() const { return frequencies_; }

  // Feature vector of length D.
  Eigen::VectorXd map(const Eigen::VectorXd& input) const;
  // Scalar-input shortcut for time-indexed bases (input_dim() == 1).
  Eigen::VectorXd map(double t) const;
  // Writes phi(t) into `out` (size D) without allocating.
  void map_into(double t, Eigen::Ref<Eigen::VectorXd> out) const;

  // N x D matrix whose rows are phi(inputs.row(i)).
  Eigen::MatrixXd map_rows(const Eigen::MatrixXd& inputs) const;

  // phi(x).phi(y)
  double approx_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  friend bool operator==(const FeatureBasis&, const FeatureBasis&) = default;

 private:
  Eigen::MatrixXd frequencies_;
  double lengthscale_ = 1.0;
  std::uint64_t seed_ = 0;
};

// Draws num_features / 2 frequencies from N(0, I / lengthscale^2) using Rng(seed).
// Throws InvalidArgument for odd or non-positive num_features, lengthscale <= 0,
// or input_dim < 1.
FeatureBasis sample_frequencies(int num_features, double lengthscale, int input_dim,
                                std::uint64_t seed);

// Closed-form RBF kernel with unit signal variance.
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lengthscale);

}  // namespace rffslam
