#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "rffslam/errors.hpp"
#include "rffslam/eval.hpp"

namespace rffslam {
namespace {

constexpr double kPi = std::numbers::pi;

Trajectory random_trajectory(std::uint64_t seed, int n) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Trajectory out;
  Pose2D p{u(gen), u(gen), u(gen)};
  for (int i = 0; i < n; ++i) {
    p = {p.x + u(gen), p.y + u(gen), wrap_angle(p.heading + 0.5 * u(gen))};
    out.push_back({0.1 * i, p});
  }
  return out;
}

Trajectory perturbed(const Trajectory& t, std::uint64_t seed, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  Trajectory out = t;
  for (auto& p : out) p.pose = {p.pose.x + n(gen), p.pose.y + n(gen), wrap_angle(p.pose.heading + n(gen))};
  return out;
}

// Left-multiplies every pose by one planar rigid transform.
Trajectory moved(const Trajectory& t, double angle, double tx, double ty) {
  Trajectory out = t;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& p : out) {
    p.pose = {c * p.pose.x - s * p.pose.y + tx, s * p.pose.x + c * p.pose.y + ty,
              wrap_angle(p.pose.heading + angle)};
  }
  return out;
}

TEST(LiftToSe3, IdentityAndQuarterTurn) {
  const eval::Pose3D id = eval::lift_to_se3({0, 0, 0});
  EXPECT_EQ(id.rotation, Eigen::Matrix3d::Identity());
  EXPECT_EQ(id.translation, Eigen::Vector3d::Zero());
  const eval::Pose3D q = eval::lift_to_se3({1, 2, kPi / 2});
  EXPECT_EQ(q.translation, Eigen::Vector3d(1, 2, 0));
  EXPECT_LT((q.rotation * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(), 1e-15);
  EXPECT_NEAR((q.rotation.transpose() * q.rotation - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-10);
  EXPECT_NEAR(q.rotation.determinant(), 1.0, 1e-10);
}

TEST(LiftToSe3, Homomorphism) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Pose2D a{u(gen), u(gen), wrap_angle(u(gen))}, b{u(gen), u(gen), wrap_angle(u(gen))};
    const Pose2D ab{a.x + std::cos(a.heading) * b.x - std::sin(a.heading) * b.y,
                    a.y + std::sin(a.heading) * b.x + std::cos(a.heading) * b.y,
                    wrap_angle(a.heading + b.heading)};
    const eval::Pose3D lhs = eval::lift_to_se3(ab), rhs = eval::lift_to_se3(a) * eval::lift_to_se3(b);
    EXPECT_LT((lhs.rotation - rhs.rotation).norm(), 1e-10);
    EXPECT_LT((lhs.translation - rhs.translation).norm(), 1e-10);
  }
}

TEST(RotationAngle, PureZRotations) {
  for (double theta = -10.0; theta < 10.0; theta += 0.173) {
    const Eigen::Matrix3d R = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    EXPECT_NEAR(eval::rotation_angle(R), std::abs(wrap_angle(theta)), 1e-10);
  }
  EXPECT_NEAR(eval::rotation_angle(Eigen::AngleAxisd(kPi, Eigen::Vector3d::UnitZ()).toRotationMatrix()), kPi, 1e-12);
}

TEST(Ape, IdenticalIsZero) {
  const Trajectory t = random_trajectory(1, 30);
  const eval::EvalReport r = eval::evaluate(t, t);
  EXPECT_LE(r.ape_trans, 1e-12);
  EXPECT_LE(r.ape_rot, 1e-12);
  EXPECT_LE(r.rpe_trans, 1e-12);
  EXPECT_LE(r.rpe_rot, 1e-12);
}

TEST(Ape, UnitShiftIsOneMetre) {
  const Trajectory gt = random_trajectory(2, 40);
  Trajectory est = gt;
  for (auto& p : est) p.pose.x += 1.0;
  const eval::ErrorSeries e = eval::ape(est, gt);
  EXPECT_NEAR(e.translation_rms, 1.0, 1e-12);
  EXPECT_EQ(e.rotation_rms, 0.0);
  for (double v : e.translation) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ApeRpe, MatchDirectFormula) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory gt = random_trajectory(seed, 50);
    const Trajectory est = perturbed(gt, seed + 100, 0.3);
    const eval::EvalReport r = eval::evaluate(est, gt);
    const oracle::Metrics m = oracle::direct_metrics(est, gt);
    EXPECT_NEAR(r.ape_trans, m.ape_trans, 1e-10);
    EXPECT_NEAR(r.ape_rot, m.ape_rot, 1e-10);
    EXPECT_NEAR(r.rpe_trans, m.rpe_trans, 1e-10);
    EXPECT_NEAR(r.rpe_rot, m.rpe_rot, 1e-10);
  }
}

TEST(Rpe, InvariantUnderGlobalRigidMotion) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Trajectory gt = random_trajectory(seed, 30);
    const Trajectory est = perturbed(gt, seed + 7, 0.2);
    const double angle = u(gen), tx = u(gen), ty = u(gen);
    const eval::ErrorSeries a = eval::rpe(est, gt);
    const eval::ErrorSeries b = eval::rpe(moved(est, angle, tx, ty), gt);
    EXPECT_NEAR(a.translation_rms, b.translation_rms, 1e-10);
    EXPECT_NEAR(a.rotation_rms, b.rotation_rms, 1e-10);
    const eval::ErrorSeries z = eval::rpe(moved(gt, angle, tx, ty), gt);
    EXPECT_LE(z.translation_rms, 1e-10);
    EXPECT_LE(z.rotation_rms, 1e-10);
  }
}

TEST(Rpe, SingleCorruptedPoseIsLocal) {
  const Trajectory gt = random_trajectory(5, 20);
  Trajectory est = gt;
  const std::size_t k = 9;
  est[k].pose.x += 0.5;
  est[k].pose.heading = wrap_angle(est[k].pose.heading + 0.2);
  const eval::ErrorSeries e = eval::rpe(est, gt);
  ASSERT_EQ(e.translation.size(), 19u);
  // Series entry j compares poses j and j + 1.
  for (std::size_t j = 0; j < e.translation.size(); ++j) {
    const bool touched = j + 1 == k || j == k;
    EXPECT_EQ(e.translation[j] > 1e-12, touched) << j;
  }
}

TEST(Series, RmsAndRanges) {
  const Trajectory gt = random_trajectory(6, 25);
  const Trajectory est = perturbed(gt, 60, 2.0);
  const eval::EvalReport r = eval::evaluate(est, gt);
  ASSERT_EQ(r.ape_series.translation.size(), 25u);
  ASSERT_EQ(r.rpe_series.translation.size(), 24u);
  double sq = 0.0;
  for (double v : r.ape_series.translation) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / 25), r.ape_trans, 1e-12);
  sq = 0.0;
  for (double v : r.rpe_series.rotation) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / 24), r.rpe_rot, 1e-12);
  for (const auto* series : {&r.ape_series, &r.rpe_series}) {
    for (double v : series->rotation) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, kPi);
    }
  }
}

TEST(Ape, Errors) {
  const Trajectory gt = random_trajectory(7, 10);
  Trajectory shorter(gt.begin(), gt.end() - 1);
  EXPECT_THROW(eval::ape(shorter, gt), InvalidArgument);
  Trajectory shifted = gt;
  shifted[3].time += 1e-3;
  EXPECT_THROW(eval::ape(shifted, gt), InvalidArgument);
  EXPECT_THROW(eval::ape({}, {}), InvalidArgument);
  EXPECT_THROW(eval::rpe(Trajectory(gt.begin(), gt.begin() + 1), Trajectory(gt.begin(), gt.begin() + 1)),
               InvalidArgument);
}

TEST(Associate, MatchesWithinTolerance) {
  const Trajectory gt = random_trajectory(8, 20);
  Trajectory est;
  for (std::size_t i = 3; i < 15; i += 2) est.push_back({gt[i].time + 5e-7, gt[i].pose});
  const auto [e, g] = eval::associate(est, gt);
  ASSERT_EQ(e.size(), g.size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], gt[3 + 2 * i]);
  est.push_back({100.0, {}});
  EXPECT_THROW(eval::associate(est, gt), InvalidArgument);
}

TEST(RelativeErrors, Definitions) {
  Trajectory gt, est;
  for (int i = 0; i < 4; ++i) {
    gt.push_back({double(i), {3.0, 4.0, 1.0}});
    est.push_back({double(i), {3.0, 4.0 + 0.5, 1.1}});
  }
  const std::vector<Landmark2D> true_lm{{1, 6.0, 8.0}, {2, 0.0, 0.0}};
  const std::vector<Landmark2D> est_lm{{2, 0.0, 0.0}, {1, 6.0, 9.0}};
  const auto r = eval::relative_errors(est, gt, est_lm, true_lm);
  EXPECT_NEAR(r.position, 0.1, 1e-12);
  EXPECT_NEAR(r.rotation, 0.1, 1e-12);
  ASSERT_TRUE(r.landmarks.has_value());
  EXPECT_NEAR(*r.landmarks, 0.1, 1e-12);
  EXPECT_THROW(eval::relative_errors(est, gt, std::vector<Landmark2D>{{1, 0, 0}}, true_lm), InvalidArgument);
}

TEST(Report, JsonAndCsv) {
  const Trajectory gt = random_trajectory(9, 5);
  const eval::EvalReport r = eval::evaluate(perturbed(gt, 1, 0.1), gt);
  const auto j = nlohmann::json::parse(eval::report_to_json(r));
  for (const char* key : {"ape_trans", "ape_rot", "rpe_trans", "rpe_rot"}) {
    ASSERT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["ape_trans"].get<double>(), r.ape_trans);
  EXPECT_EQ(j["num_poses"].get<int>(), 5);
  const std::string csv = eval::report_series_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,time,ape_trans,ape_rot,rpe_trans,rpe_rot");
}

}  // namespace
}  // namespace rffslam
