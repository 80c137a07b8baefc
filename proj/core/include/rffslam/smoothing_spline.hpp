#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rffslam {

// Weighted cubic smoothing spline in De Boor's parameterization. Minimizes
//
//   p * sum_i w_i (y_i - s(t_i))^2 + (1 - p) * integral s''(t)^2 dt
//
// over natural cubic splines with knots at the data sites. p = 1 interpolates,
// p = 0 gives the weighted least-squares line. Outside the knot span the
// spline continues linearly.
class SmoothingSpline {
 public:
  // Requires >= 2 strictly increasing sites, positive weights, p in [0, 1].
  SmoothingSpline(std::vector<double> sites, const std::vector<double>& values,
                  const std::vector<double>& weights, double smoothing);

  double operator()(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  // Spline values at the sites.
  const Eigen::VectorXd& knot_values() const { return values_; }

 private:
  std::size_t interval(double t) const;

  std::vector<double> sites_;
  Eigen::VectorXd values_;       // s(t_i)
  Eigen::VectorXd second_diff_;  // s''(t_i), zero at both ends
};

}  // namespace rffslam
