#include "rffslam/smoothing_spline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>

#include "rffslam/errors.hpp"

namespace rffslam {
namespace {

// Weighted least-squares line through the data, the p -> 0 limit.
void fit_line(const std::vector<double>& t, const std::vector<double>& y,
              const std::vector<double>& w, Eigen::VectorXd& values) {
  double sw = 0.0, st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sw += w[i];
    st += w[i] * t[i];
    sy += w[i] * y[i];
  }
  const double t_mean = st / sw;
  const double y_mean = sy / sw;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += w[i] * (t[i] - t_mean) * (t[i] - t_mean);
    sty += w[i] * (t[i] - t_mean) * (y[i] - y_mean);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  values.resize(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    values(static_cast<Eigen::Index>(i)) = y_mean + slope * (t[i] - t_mean);
  }
}

}  // namespace

SmoothingSpline::SmoothingSpline(std::vector<double> sites, const std::vector<double>& values,
                                 const std::vector<double>& weights, double smoothing)
    : sites_(std::move(sites)) {
  const std::size_t n = sites_.size();
  if (n < 2) throw InvalidArgument("SmoothingSpline: need at least 2 sites");
  if (values.size() != n || weights.size() != n) {
    throw InvalidArgument("SmoothingSpline: sites, values and weights differ in length");
  }
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) {
    throw InvalidArgument("SmoothingSpline: smoothing parameter must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw InvalidArgument("SmoothingSpline: weights must be positive");
    if (i > 0 && !(sites_[i] > sites_[i - 1])) {
      throw InvalidArgument("SmoothingSpline: sites must be strictly increasing");
    }
  }

  const auto ni = static_cast<Eigen::Index>(n);
  second_diff_ = Eigen::VectorXd::Zero(ni);
  if (smoothing == 0.0 || n == 2) {
    fit_line(sites_, values, weights, values_);
    if (n == 2 && smoothing > 0.0) {
      values_ = Eigen::Map<const Eigen::VectorXd>(values.data(), ni);
    }
    return;
  }

  // Interior second derivatives c solve (p R + (1 - p) Q^T W^{-1} Q) c = p Q^T y,
  // then s(t_i) = y - ((1 - p) / p) W^{-1} Q c. R is the (n-2) tridiagonal
  // Gram matrix of the hat functions, Q the n x (n-2) second-difference operator.
  const Eigen::Index m = ni - 2;
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = sites_[i + 1] - sites_[i];

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> q_entries;
  std::vector<Triplet> r_entries;
  q_entries.reserve(3 * static_cast<std::size_t>(m));
  r_entries.reserve(3 * static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h0 = h[static_cast<std::size_t>(j)];
    const double h1 = h[static_cast<std::size_t>(j + 1)];
    q_entries.emplace_back(j, j, 1.0 / h0);
    q_entries.emplace_back(j + 1, j, -1.0 / h0 - 1.0 / h1);
    q_entries.emplace_back(j + 2, j, 1.0 / h1);
    r_entries.emplace_back(j, j, (h0 + h1) / 3.0);
    if (j + 1 < m) {
      r_entries.emplace_back(j, j + 1, h1 / 6.0);
      r_entries.emplace_back(j + 1, j, h1 / 6.0);
    }
  }
  Eigen::SparseMatrix<double> q(ni, m);
  Eigen::SparseMatrix<double> r(m, m);
  q.setFromTriplets(q_entries.begin(), q_entries.end());
  r.setFromTriplets(r_entries.begin(), r_entries.end());

  Eigen::VectorXd inv_w(ni);
  for (Eigen::Index i = 0; i < ni; ++i) inv_w(i) = 1.0 / weights[static_cast<std::size_t>(i)];
  const Eigen::Map<const Eigen::VectorXd> y(values.data(), ni);

  const double p = smoothing;
  Eigen::SparseMatrix<double> system =
      p * r + (1.0 - p) * Eigen::SparseMatrix<double>(q.transpose() * inv_w.asDiagonal() * q);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("SmoothingSpline: banded system factorization failed");
  }
  const Eigen::VectorXd c = solver.solve(p * (q.transpose() * y));
  values_ = y - ((1.0 - p) / p) * inv_w.cwiseProduct(q * c);
  second_diff_.segment(1, m) = c;
}

std::size_t SmoothingSpline::interval(double t) const {
  const auto it = std::upper_bound(sites_.begin(), sites_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(sites_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, sites_.size() - 2);
}

double SmoothingSpline::operator()(double t) const {
  if (t < sites_.front()) return values_(0) + derivative(sites_.front()) * (t - sites_.front());
  if (t > sites_.back()) {
    return values_(values_.size() - 1) + derivative(sites_.back()) * (t - sites_.back());
  }
  const std::size_t i = interval(t);
  const auto ii = static_cast<Eigen::Index>(i);
  const double h = sites_[i + 1] - sites_[i];
  const double a = (sites_[i + 1] - t) / h;
  const double b = 1.0 - a;
  return a * values_(ii) + b * values_(ii + 1) +
         ((a * a * a - a) * second_diff_(ii) + (b * b * b - b) * second_diff_(ii + 1)) * h * h /
             6.0;
}

double SmoothingSpline::derivative(double t) const {
  const double tc = std::clamp(t, sites_.front(), sites_.back());
  const std::size_t i = interval(tc);
  const auto ii = static_cast<Eigen::Index>(i);
  const double h = sites_[i + 1] - sites_[i];
  const double a = (sites_[i + 1] - tc) / h;
  const double b = 1.0 - a;
  return (values_(ii + 1) - values_(ii)) / h +
         (-(3.0 * a * a - 1.0) * second_diff_(ii) + (3.0 * b * b - 1.0) * second_diff_(ii + 1)) *
             h / 6.0;
}

double SmoothingSpline::second_derivative(double t) const {
  if (t < sites_.front() || t > sites_.back()) return 0.0;
  const std::size_t i = interval(t);
  const auto ii = static_cast<Eigen::Index>(i);
  const double h = sites_[i + 1] - sites_[i];
  const double a = (sites_[i + 1] - t) / h;
  return a * second_diff_(ii) + (1.0 - a) * second_diff_(ii + 1);
}

}  // namespace rffslam
