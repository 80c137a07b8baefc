#include "rffslam/features.hpp"

#include <cmath>
#include <string>

#include "rffslam/errors.hpp"
#include "rffslam/random.hpp"

namespace rffslam {

FeatureBasis::FeatureBasis(Eigen::MatrixXd frequencies, double lengthscale, std::uint64_t seed)
    : frequencies_(std::move(frequencies)), lengthscale_(lengthscale), seed_(seed) {
  if (frequencies_.rows() < 1 || frequencies_.cols() < 1) {
    throw InvalidArgument("FeatureBasis: frequency matrix must be non-empty");
  }
  if (!(lengthscale_ > 0.0)) {
    throw InvalidArgument("FeatureBasis: lengthscale must be positive");
  }
}

Eigen::VectorXd FeatureBasis::map(const Eigen::VectorXd& input) const {
  if (input.size() != frequencies_.cols()) {
    throw InvalidArgument("feature_map: input has dimension " + std::to_string(input.size()) +
                          ", basis expects " + std::to_string(frequencies_.cols()));
  }
  const Eigen::VectorXd projections = frequencies_ * input;
  const double scale = std::sqrt(2.0 / static_cast<double>(num_features()));
  Eigen::VectorXd out(num_features());
  for (Eigen::Index j = 0; j < projections.size(); ++j) {
    out(2 * j) = scale * std::cos(projections(j));
    out(2 * j + 1) = scale * std::sin(projections(j));
  }
  return out;
}

Eigen::VectorXd FeatureBasis::map(double t) const {
  Eigen::VectorXd out(num_features());
  map_into(t, out);
  return out;
}

void FeatureBasis::map_into(double t, Eigen::Ref<Eigen::VectorXd> out) const {
  if (frequencies_.cols() != 1) {
    throw InvalidArgument("feature_map: scalar input given to a basis of dimension " +
                          std::to_string(frequencies_.cols()));
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(num_features()));
  for (Eigen::Index j = 0; j < frequencies_.rows(); ++j) {
    const double arg = frequencies_(j, 0) * t;
    out(2 * j) = scale * std::cos(arg);
    out(2 * j + 1) = scale * std::sin(arg);
  }
}

Eigen::MatrixXd FeatureBasis::map_rows(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd out(inputs.rows(), num_features());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    out.row(i) = map(Eigen::VectorXd(inputs.row(i).transpose())).transpose();
  }
  return out;
}

double FeatureBasis::approx_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return map(x).dot(map(y));
}

FeatureBasis sample_frequencies(int num_features, double lengthscale, int input_dim,
                                std::uint64_t seed) {
  if (num_features < 2 || num_features % 2 != 0) {
    throw InvalidArgument("sample_frequencies: num_features must be even and >= 2, got " +
                          std::to_string(num_features));
  }
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InvalidArgument("sample_frequencies: lengthscale must be positive");
  }
  if (input_dim < 1) {
    throw InvalidArgument("sample_frequencies: input_dim must be >= 1");
  }
  Rng rng(seed);
  Eigen::MatrixXd frequencies(num_features / 2, input_dim);
  for (Eigen::Index i = 0; i < frequencies.rows(); ++i) {
    for (Eigen::Index k = 0; k < frequencies.cols(); ++k) {
      frequencies(i, k) = rng.normal() / lengthscale;
    }
  }
  return FeatureBasis(std::move(frequencies), lengthscale, seed);
}

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lengthscale) {
  if (x.size() != y.size()) throw InvalidArgument("rbf_kernel: dimension mismatch");
  return std::exp(-0.5 * (x - y).squaredNorm() / (lengthscale * lengthscale));
}

}  // namespace rffslam
