#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rffslam/errors.hpp"
#include "rffslam/features.hpp"
#include "rffslam/gp.hpp"

namespace rffslam {
namespace {

gp::Kernel rbf_of(double lengthscale) {
  return [lengthscale](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return rbf_kernel(a, b, lengthscale);
  };
}

const gp::MeanFunction kZeroMean = [](const Eigen::VectorXd&) { return 0.0; };

TEST(ExactPosterior, NoDataReturnsPrior) {
  gp::Dataset data{Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), 0.1};
  const auto mean = [](const Eigen::VectorXd& x) { return 2.0 * x(0); };
  const auto post = gp::exact_posterior(data, rbf_of(1.0), mean, Eigen::VectorXd::Constant(1, 1.5));
  EXPECT_DOUBLE_EQ(post.mean, 3.0);
  EXPECT_DOUBLE_EQ(post.variance, 1.0);
}

TEST(ExactPosterior, InterpolatesSinglePoint) {
  gp::Dataset data{Eigen::MatrixXd::Constant(1, 1, 0.4), Eigen::VectorXd::Constant(1, 1.7), 1e-12};
  const auto post =
      gp::exact_posterior(data, rbf_of(1.0), kZeroMean, Eigen::VectorXd::Constant(1, 0.4));
  EXPECT_NEAR(post.mean, 1.7, 1e-6);
}

TEST(ExactPosterior, VarianceContracts) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0, 1);
  gp::Dataset data{Eigen::MatrixXd(8, 1), Eigen::VectorXd(8), 0.05};
  for (int i = 0; i < 8; ++i) {
    data.inputs(i, 0) = i * 0.7;
    data.outputs(i) = n(gen);
  }
  for (double q = -2.0; q < 8.0; q += 0.3) {
    const auto post = gp::exact_posterior(data, rbf_of(1.0), kZeroMean, Eigen::VectorXd::Constant(1, q));
    EXPECT_GE(post.variance, 0.0);
    EXPECT_LE(post.variance, 1.0 + 1e-10);
  }
}

TEST(ExactPosterior, DuplicateInputsWithoutNoiseFail) {
  gp::Dataset data{Eigen::MatrixXd::Constant(2, 1, 1.0), Eigen::VectorXd::Ones(2), 0.0};
  EXPECT_THROW(gp::exact_posterior(data, rbf_of(1.0), kZeroMean, Eigen::VectorXd::Zero(1)),
               NumericalFailure);
}

TEST(Woodbury, ZeroFeatures) {
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
  EXPECT_LT((gp::woodbury_apply(Eigen::MatrixXd::Zero(5, 3), 0.5, v) - v / 0.5).norm(), 1e-15);
}

TEST(Woodbury, ZeroVector) {
  const Eigen::MatrixXd Psi = Eigen::MatrixXd::Random(6, 3);
  EXPECT_EQ(gp::woodbury_apply(Psi, 0.3, Eigen::VectorXd::Zero(6)).norm(), 0.0);
}

TEST(Woodbury, RejectsZeroNoise) {
  EXPECT_THROW(gp::woodbury_apply(Eigen::MatrixXd::Ones(3, 2), 0.0, Eigen::VectorXd::Ones(3)),
               InvalidArgument);
}

TEST(Woodbury, MatchesDenseInverseAndRoundTrips) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd Psi = Eigen::MatrixXd::NullaryExpr(50, 10, [&] { return n(gen); });
    const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(50, [&] { return n(gen); });
    const double noise = 0.1 + 0.2 * trial;
    const Eigen::MatrixXd K = Psi * Psi.transpose() + noise * Eigen::MatrixXd::Identity(50, 50);
    const Eigen::VectorXd expected = K.ldlt().solve(v);
    const Eigen::VectorXd got = gp::woodbury_apply(Psi, noise, v);
    EXPECT_LT(oracle::relative_error(got, expected), 1e-8);
    EXPECT_LT(oracle::relative_error(K * got, v), 1e-8);
  }
}

TEST(WeightSpace, AgreesWithFunctionSpace) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 5; ++trial) {
    const FeatureBasis basis = sample_frequencies(40, 3.0, 1, trial);
    gp::Dataset data{Eigen::MatrixXd(50, 1), Eigen::VectorXd(50), 0.1};
    for (int i = 0; i < 50; ++i) {
      data.inputs(i, 0) = u(gen);
      data.outputs(i) = std::sin(data.inputs(i, 0)) + 0.3 * n(gen);
    }
    const auto mean = [](const Eigen::VectorXd& x) { return 0.1 * x(0); };
    const gp::Kernel approx = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return basis.approx_kernel(a, b);
    };
    for (double q = -1.0; q < 11.0; q += 0.5) {
      const Eigen::VectorXd query = Eigen::VectorXd::Constant(1, q);
      const auto ws = gp::weight_space_posterior(data, basis, mean, query);
      const auto fs = gp::exact_posterior(data, approx, mean, query);
      EXPECT_NEAR(ws.mean, fs.mean, 1e-8 * std::max(1.0, std::abs(fs.mean)));
      EXPECT_NEAR(ws.variance, fs.variance, 1e-8 * std::max(1.0, std::abs(fs.variance)));
    }
  }
}

}  // namespace
}  // namespace rffslam
