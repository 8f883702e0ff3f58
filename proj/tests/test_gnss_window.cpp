#include "relnav/gnss_window.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>

#include "relnav/geometry.hpp"
#include "relnav/mapgraph.hpp"

namespace {

using relnav::geometry::Transform;
using relnav::gnss::fit_window;
using relnav::gnss::GnssErrorEstimate;
using relnav::gnss::RegressionFit;
using relnav::gnss::WindowConfig;
using relnav::mapgraph::TeachGraph;
using relnav::mapgraph::UtmPoint;
using relnav::mapgraph::VertexId;

constexpr double kPi = std::numbers::pi;

/// Fixes along a straight constant-velocity track.
std::vector<UtmPoint> straight_track(int n, double dt, double speed, double heading,
                                     Eigen::Vector2d start, double t0) {
  std::vector<UtmPoint> points;
  const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));
  for (int i = 0; i < n; ++i) {
    const double t = t0 + i * dt;
    const Eigen::Vector2d p = start + speed * (t - t0) * dir;
    points.push_back({t, p.x(), p.y()});
  }
  return points;
}

std::vector<UtmPoint> shifted(std::vector<UtmPoint> points, double de, double dn,
                              double dt = 0.0) {
  for (UtmPoint& p : points) {
    p.t += dt;
    p.easting += de;
    p.northing += dn;
  }
  return points;
}

RegressionFit line_fit(Eigen::Vector2d position, Eigen::Vector2d velocity,
                       double t_mean = 0.0) {
  RegressionFit fit;
  fit.t_mean = t_mean;
  fit.position = position;
  fit.velocity = velocity;
  fit.inlier_count = 5;
  return fit;
}

/// Pose of a vehicle that has travelled arc length s counter-clockwise around
/// a circle of the given radius, starting at the origin heading +x.
Transform circle_pose(double s, double radius) {
  const double psi = s / radius;
  const Eigen::Vector3d position(radius * std::sin(psi), radius * (1.0 - std::cos(psi)),
                                 0.0);
  return Transform(relnav::geometry::so3_exp(Eigen::Vector3d(0, 0, psi)), position);
}

UtmPoint circle_fix(double t, double speed, double radius) {
  const Transform pose = circle_pose(t * speed, radius);
  return {t, pose.translation().x(), pose.translation().y()};
}

/// Teach graph driving counter-clockwise around a circle at 1 m/s: keyframes
/// every 0.5 m, fixes every 0.1 s.
TeachGraph circle_graph(int keyframes, double radius) {
  const double speed = 1.0;
  const Eigen::Matrix<double, 6, 6> cov = 1e-4 * Eigen::Matrix<double, 6, 6>::Identity();
  TeachGraph graph;
  graph.add_teach_vertex(0.0, Transform(), cov, {circle_fix(0.0, speed, radius)}, {});
  for (int i = 1; i < keyframes; ++i) {
    const double t = 0.5 * i;
    const Transform delta = circle_pose(t * speed, radius).inverse() *
                            circle_pose(0.5 * (i - 1) * speed, radius);
    std::vector<UtmPoint> fixes;
    for (int j = 4; j >= 0; --j) fixes.push_back(circle_fix(t - 0.1 * j, speed, radius));
    graph.add_teach_vertex(t, delta, cov, fixes, {});
  }
  return graph;
}

TEST(FitWindow, RecoversAConstantVelocityTrackExactly) {
  const std::vector<UtmPoint> points = {{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
  const auto fit = fit_window(points);
  ASSERT_TRUE(fit.has_value());
  EXPECT_DOUBLE_EQ(fit->t_mean, 1.0);
  EXPECT_DOUBLE_EQ(fit->position.x(), 1.0);
  EXPECT_DOUBLE_EQ(fit->position.y(), 0.0);
  EXPECT_DOUBLE_EQ(fit->velocity.x(), 1.0);
  EXPECT_DOUBLE_EQ(fit->velocity.y(), 0.0);
  EXPECT_EQ(fit->inlier_count, 3);
  EXPECT_NEAR(fit->residual_rms, 0.0, 1e-12);
}

TEST(FitWindow, NorthboundTrackPutsTheSlopeInNorthing) {
  const std::vector<UtmPoint> points = {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}};
  const auto fit = fit_window(points);
  ASSERT_TRUE(fit.has_value());
  EXPECT_DOUBLE_EQ(fit->velocity.x(), 0.0);
  EXPECT_DOUBLE_EQ(fit->velocity.y(), 1.0);
}

TEST(FitWindow, MatchesTheNormalEquationsOnNoisyData) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<UtmPoint> points;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.1 * i;
    points.push_back({t, 3.0 + 1.7 * t + noise(rng), -2.0 + 0.4 * t + noise(rng)});
  }

  // Closed-form simple-regression slopes and means, computed independently.
  double st = 0, se = 0, sn = 0;
  for (const auto& p : points) {
    st += p.t;
    se += p.easting;
    sn += p.northing;
  }
  const double n = 50.0, tm = st / n, em = se / n, nm = sn / n;
  double stt = 0, ste = 0, stn = 0;
  for (const auto& p : points) {
    stt += (p.t - tm) * (p.t - tm);
    ste += (p.t - tm) * (p.easting - em);
    stn += (p.t - tm) * (p.northing - nm);
  }

  const auto fit = fit_window(points);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->t_mean, tm, 1e-12);
  EXPECT_NEAR(fit->position.x(), em, 1e-12);
  EXPECT_NEAR(fit->position.y(), nm, 1e-12);
  EXPECT_NEAR(fit->velocity.x(), ste / stt, 1e-12);
  EXPECT_NEAR(fit->velocity.y(), stn / stt, 1e-12);
}

TEST(FitWindow, ReportsTheRootMeanSquareMisfit) {
  // Symmetric residuals about a flat line: fit is northing = 0, each point
  // misses by exactly 1.
  const std::vector<UtmPoint> points = {{0, 0, 1}, {1, 1, -1}, {2, 2, -1}, {3, 3, 1}};
  const auto fit = fit_window(points);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->residual_rms, 1.0, 1e-12);
}

TEST(FitWindow, RejectsASingleInstant) {
  const std::vector<UtmPoint> same_time = {{1.0, 0, 0}, {1.0, 1, 1}, {1.0, 2, 2}};
  EXPECT_FALSE(fit_window(same_time).has_value());
  EXPECT_FALSE(fit_window({{0, 0, 0}}).has_value());
  EXPECT_FALSE(fit_window({}).has_value());
}

TEST(Extrapolate, EvaluatesTheFittedLine) {
  const auto fit = fit_window({{0, 0, 0}, {1, 1, 0}, {2, 2, 0}});
  ASSERT_TRUE(fit.has_value());
  const Eigen::Vector2d at3 = relnav::gnss::extrapolate(*fit, 3.0);
  EXPECT_DOUBLE_EQ(at3.x(), 3.0);
  EXPECT_DOUBLE_EQ(at3.y(), 0.0);
  // At the mean time the line passes through the mean position.
  const Eigen::Vector2d at_mean = relnav::gnss::extrapolate(*fit, fit->t_mean);
  EXPECT_DOUBLE_EQ(at_mean.x(), fit->position.x());
  EXPECT_DOUBLE_EQ(at_mean.y(), fit->position.y());
}

TEST(Extrapolate, MatchesTheLineFormulaOnRandomFits) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const RegressionFit fit =
        line_fit(Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(u(rng), u(rng)), u(rng));
    const double t = u(rng);
    const Eigen::Vector2d expected = fit.position + fit.velocity * (t - fit.t_mean);
    EXPECT_NEAR((relnav::gnss::extrapolate(fit, t) - expected).norm(), 0.0, 1e-12);
  }
}

TEST(Heading, FollowsTheVelocityDirection) {
  const WindowConfig config;
  EXPECT_DOUBLE_EQ(relnav::gnss::heading(line_fit({0, 0}, {1, 0}), config).value(), 0.0);
  EXPECT_DOUBLE_EQ(relnav::gnss::heading(line_fit({0, 0}, {0, 1}), config).value(),
                   kPi / 2);
}

TEST(Heading, UndefinedBelowTheSpeedGate) {
  WindowConfig config;
  config.min_speed = 0.05;
  EXPECT_FALSE(relnav::gnss::heading(line_fit({0, 0}, {0.01, 0}), config).has_value());
}

TEST(RansacFilter, KeepsExactlyCollinearDataUntouched) {
  const std::vector<UtmPoint> points = straight_track(10, 0.1, 1.0, 0.3, {5, 5}, 0.0);
  const auto kept = relnav::gnss::ransac_filter(points, WindowConfig{});
  ASSERT_TRUE(kept.has_value());
  ASSERT_EQ(kept->size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ((*kept)[i].t, points[i].t);
    EXPECT_EQ((*kept)[i].easting, points[i].easting);
    EXPECT_EQ((*kept)[i].northing, points[i].northing);
  }
  // Idempotent: filtering the consensus returns it unchanged.
  const auto again = relnav::gnss::ransac_filter(*kept, WindowConfig{});
  ASSERT_TRUE(again.has_value());
  EXPECT_EQ(again->size(), kept->size());
}

TEST(RansacFilter, DropsASingleGrossOutlier) {
  std::vector<UtmPoint> points = straight_track(10, 0.1, 1.0, 0.0, {0, 0}, 0.0);
  points[4].northing += 5.0;  // multipath-style jump
  const auto kept = relnav::gnss::ransac_filter(points, WindowConfig{});
  ASSERT_TRUE(kept.has_value());
  EXPECT_EQ(kept->size(), 9u);
  for (const UtmPoint& p : *kept) EXPECT_LT(std::abs(p.northing), 0.01);
}

TEST(RansacFilter, DropsAnOutlierDisplacedAlongTheTrack) {
  // Spatially this fix sits exactly on the line of travel, but 5 m ahead of
  // where the receiver was at that instant, so it is off the constant-velocity
  // track and would corrupt the velocity estimate if kept.
  std::vector<UtmPoint> points = straight_track(10, 0.1, 1.0, 0.0, {0, 0}, 0.0);
  const double outlier_t = points[4].t;
  points[4].easting += 5.0;
  const auto kept = relnav::gnss::ransac_filter(points, WindowConfig{});
  ASSERT_TRUE(kept.has_value());
  EXPECT_EQ(kept->size(), 9u);
  for (const UtmPoint& p : *kept) EXPECT_NE(p.t, outlier_t);
}

TEST(RansacFilter, MatchesAnExhaustivePairSearchOracle) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<UtmPoint> points;
  for (int i = 0; i < 9; ++i) {
    points.push_back({0.1 * i, 0.1 * i + noise(rng), noise(rng)});
  }
  points[2].northing += 3.0;
  points[5].northing -= 4.0;
  points[7].northing += 2.5;

  WindowConfig config;
  // Largest consensus over every distinct pair hypothesis, found exhaustively.
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].t == points[j].t) continue;
      const double dt = points[j].t - points[i].t;
      const double vx = (points[j].easting - points[i].easting) / dt;
      const double vy = (points[j].northing - points[i].northing) / dt;
      std::size_t count = 0;
      for (const UtmPoint& p : points) {
        const double ex = points[i].easting + vx * (p.t - points[i].t);
        const double ny = points[i].northing + vy * (p.t - points[i].t);
        if (std::hypot(p.easting - ex, p.northing - ny) <= config.ransac_threshold) ++count;
      }
      best = std::max(best, count);
    }
  }
  ASSERT_EQ(best, 6u);  // all nine minus the three planted outliers

  const auto kept = relnav::gnss::ransac_filter(points, config);
  ASSERT_TRUE(kept.has_value());
  EXPECT_EQ(kept->size(), best);
  for (const UtmPoint& p : *kept) EXPECT_LT(std::abs(p.northing), 0.5);
}

TEST(RansacFilter, ConsensusPrefersTheMajorityTrack) {
  // Seven fixes on one track, three on a parallel track 2 m away.
  std::vector<UtmPoint> points;
  for (int i = 0; i < 10; ++i) {
    const double offset = (i % 3 == 2) ? 2.0 : 0.0;
    points.push_back({0.1 * i, 0.1 * i, offset});
  }
  const auto kept = relnav::gnss::ransac_filter(points, WindowConfig{});
  ASSERT_TRUE(kept.has_value());
  EXPECT_EQ(kept->size(), 7u);
  for (const UtmPoint& p : *kept) EXPECT_EQ(p.northing, 0.0);
}

TEST(RansacFilter, RejectsWindowsBelowMinPoints) {
  WindowConfig config;
  config.min_points = 5;
  const std::vector<UtmPoint> four = straight_track(4, 0.1, 1.0, 0.0, {0, 0}, 0.0);
  EXPECT_FALSE(relnav::gnss::ransac_filter(four, config).has_value());
}

TEST(RansacFilter, DeterministicForAFixedSeed) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.03);
  std::vector<UtmPoint> points;
  for (int i = 0; i < 12; ++i) {
    points.push_back({0.1 * i, 0.1 * i + noise(rng), noise(rng)});
  }
  points[3].easting += 2.0;
  points[9].northing -= 3.0;

  WindowConfig config;
  config.ransac_seed = 99;
  const auto first = relnav::gnss::ransac_filter(points, config);
  const auto second = relnav::gnss::ransac_filter(points, config);
  ASSERT_TRUE(first.has_value());
  ASSERT_TRUE(second.has_value());
  ASSERT_EQ(first->size(), second->size());
  for (std::size_t i = 0; i < first->size(); ++i) {
    EXPECT_EQ((*first)[i].t, (*second)[i].t);
    EXPECT_EQ((*first)[i].easting, (*second)[i].easting);
  }
}

TEST(RansacFilter, ThrowsOnUnorderedInput) {
  std::vector<UtmPoint> points = straight_track(6, 0.1, 1.0, 0.0, {0, 0}, 0.0);
  std::swap(points[1], points[4]);
  EXPECT_THROW(relnav::gnss::ransac_filter(points, WindowConfig{}), std::invalid_argument);
}

TEST(PlanarError, ForwardOffsetWithAlignedHeadings) {
  // Map extrapolates to (10,5), query to (9,5), both heading east: the map
  // point sits one metre straight ahead.
  const auto estimate = relnav::gnss::planar_error(
      line_fit({10, 5}, {1, 0}), 0.0, line_fit({9, 5}, {1, 0}), 0.0, WindowConfig{});
  ASSERT_TRUE(estimate.has_value());
  EXPECT_NEAR((estimate->r_mq_q - Eigen::Vector3d(1, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(relnav::geometry::planar_rotation_angle(estimate->transform), 0.0,
              1e-12);
  EXPECT_DOUBLE_EQ(estimate->theta_q, 0.0);
  EXPECT_DOUBLE_EQ(estimate->theta_m, 0.0);
}

TEST(PlanarError, GlobalForwardOffsetBecomesLateralWhenHeadingNorth) {
  // Both tracks head +y; the map point sits 1 m east of the query point,
  // which is one metre to the vehicle's right.
  const auto estimate = relnav::gnss::planar_error(
      line_fit({1, 0}, {0, 1}), 0.0, line_fit({0, 0}, {0, 1}), 0.0, WindowConfig{});
  ASSERT_TRUE(estimate.has_value());
  EXPECT_NEAR((estimate->r_mq_q - Eigen::Vector3d(0, -1, 0)).norm(), 0.0, 1e-12);
}

TEST(PlanarError, MatchesARotateThenSubtractOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Vector2d qp(u(rng), u(rng));
    const Eigen::Vector2d mp(u(rng), u(rng));
    const double tq = angle(rng);
    const double tm = angle(rng);
    const auto estimate = relnav::gnss::planar_error(
        line_fit(mp, {std::cos(tm), std::sin(tm)}), 0.0,
        line_fit(qp, {std::cos(tq), std::sin(tq)}), 0.0, WindowConfig{});
    ASSERT_TRUE(estimate.has_value());

    const Eigen::Rotation2D<double> into_query(-tq);
    const Eigen::Vector2d expected = into_query * (mp - qp);
    EXPECT_NEAR((estimate->r_mq_q.head<2>() - expected).norm(), 0.0, 1e-12);
    const double expected_turn = relnav::geometry::wrap_angle(tq - tm);
    EXPECT_NEAR(relnav::geometry::planar_rotation_angle(estimate->transform),
                expected_turn, 1e-12);
  }
}

TEST(PlanarError, StaysExactlyPlanar) {
  const auto estimate = relnav::gnss::planar_error(
      line_fit({3, 4}, {1, 1}), 2.0, line_fit({-1, 2}, {1, -0.5}), 7.0, WindowConfig{});
  ASSERT_TRUE(estimate.has_value());
  EXPECT_EQ(estimate->transform.translation().z(), 0.0);
  EXPECT_EQ(estimate->r_mq_q.z(), 0.0);
  const Eigen::Matrix3d r = estimate->transform.rotation();
  EXPECT_EQ(r(2, 2), 1.0);
  EXPECT_EQ(r(0, 2), 0.0);
  EXPECT_EQ(r(1, 2), 0.0);
  EXPECT_EQ(r(2, 0), 0.0);
  EXPECT_EQ(r(2, 1), 0.0);
}

TEST(PlanarError, UndefinedWhenEitherTrackIsTooSlow) {
  const WindowConfig config;
  EXPECT_FALSE(relnav::gnss::planar_error(line_fit({0, 0}, {0.001, 0}), 0.0,
                                          line_fit({1, 0}, {1, 0}), 0.0, config)
                   .has_value());
  EXPECT_FALSE(relnav::gnss::planar_error(line_fit({0, 0}, {1, 0}), 0.0,
                                          line_fit({1, 0}, {0.001, 0}), 0.0, config)
                   .has_value());
}

TEST(PlanarError, CovarianceEncodesWhatGnssObserves) {
  WindowConfig config;
  config.sigma_xy = 0.05;
  config.sigma_yaw = 0.02;
  config.sigma_weak = 1e4;
  const auto estimate = relnav::gnss::planar_error(line_fit({1, 0}, {1, 0}), 0.0,
                                                   line_fit({0, 0}, {1, 0}), 0.0, config);
  ASSERT_TRUE(estimate.has_value());
  const auto& cov = estimate->covariance;
  EXPECT_DOUBLE_EQ(cov(0, 0), 0.05 * 0.05);
  EXPECT_DOUBLE_EQ(cov(1, 1), 0.05 * 0.05);
  EXPECT_DOUBLE_EQ(cov(2, 2), 1e8);
  EXPECT_DOUBLE_EQ(cov(3, 3), 1e8);
  EXPECT_DOUBLE_EQ(cov(4, 4), 1e8);
  EXPECT_DOUBLE_EQ(cov(5, 5), 0.02 * 0.02);
  EXPECT_EQ((cov - Eigen::Matrix<double, 6, 6>(cov.diagonal().asDiagonal())).norm(), 0.0);
}

TEST(PlanarError, SharedConstantBiasCancels) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> bias(-1e5, 1e5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<UtmPoint> map_pts =
        straight_track(8, 0.1, 1.3, 0.4, {u(rng), u(rng)}, 0.0);
    const std::vector<UtmPoint> query_pts =
        straight_track(8, 0.1, 1.3, 0.45, {u(rng), u(rng)}, 50.0);
    const double de = bias(rng), dn = bias(rng);

    const auto base = relnav::gnss::planar_error(*fit_window(map_pts), 0.4,
                                                 *fit_window(query_pts), 50.4,
                                                 WindowConfig{});
    const auto offset = relnav::gnss::planar_error(
        *fit_window(shifted(map_pts, de, dn)), 0.4,
        *fit_window(shifted(query_pts, de, dn)), 50.4, WindowConfig{});
    ASSERT_TRUE(base.has_value());
    ASSERT_TRUE(offset.has_value());
    EXPECT_LT((base->r_mq_q - offset->r_mq_q).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(
        std::abs(relnav::geometry::planar_rotation_angle(base->transform) -
                 relnav::geometry::planar_rotation_angle(offset->transform)),
        1e-9);
  }
}

TEST(PlanarError, TimeOriginShiftLeavesPredictionsUnchanged) {
  const std::vector<UtmPoint> points = straight_track(9, 0.1, 1.1, 0.7, {3, -2}, 10.0);
  const double shift = 1e6;
  const auto base = fit_window(points);
  const auto moved = fit_window(shifted(points, 0, 0, shift));
  ASSERT_TRUE(base.has_value());
  ASSERT_TRUE(moved.has_value());
  for (double t : {10.0, 10.4, 10.9, 11.5}) {
    const Eigen::Vector2d a = relnav::gnss::extrapolate(*base, t);
    const Eigen::Vector2d b = relnav::gnss::extrapolate(*moved, t + shift);
    EXPECT_LT((a - b).norm(), 1e-9);
  }
}

TEST(PlanarError, RotatingTheWorldFrameChangesNothing) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const std::vector<UtmPoint> map_pts = straight_track(8, 0.1, 1.0, 0.2, {4, 1}, 0.0);
  const std::vector<UtmPoint> query_pts =
      straight_track(8, 0.1, 1.0, 0.3, {4.2, 0.8}, 30.0);
  const auto base = relnav::gnss::planar_error(*fit_window(map_pts), 0.35,
                                               *fit_window(query_pts), 30.35,
                                               WindowConfig{});
  ASSERT_TRUE(base.has_value());

  for (int trial = 0; trial < 10; ++trial) {
    const double phi = angle(rng);
    const Eigen::Rotation2D<double> rot(phi);
    const Eigen::Vector2d pivot(100.0 * trial, -50.0);
    auto rotate_all = [&](std::vector<UtmPoint> pts) {
      for (UtmPoint& p : pts) {
        const Eigen::Vector2d q =
            rot * (Eigen::Vector2d(p.easting, p.northing) - pivot) + pivot;
        p.easting = q.x();
        p.northing = q.y();
      }
      return pts;
    };
    const auto turned = relnav::gnss::planar_error(
        *fit_window(rotate_all(map_pts)), 0.35, *fit_window(rotate_all(query_pts)), 30.35,
        WindowConfig{});
    ASSERT_TRUE(turned.has_value());
    EXPECT_LT((base->r_mq_q - turned->r_mq_q).norm(), 1e-9);
    EXPECT_LT(
        std::abs(relnav::geometry::planar_rotation_angle(base->transform) -
                 relnav::geometry::planar_rotation_angle(turned->transform)),
        1e-9);
  }
}

TEST(GnssFactor, RetracingTheMapGivesIdentity) {
  const TeachGraph graph = circle_graph(30, 50.0);
  // A perfect retrace carries the teach fixes of the last stretch, bitwise:
  // the live window recalls the same keyframes the map window will.
  const std::size_t match = 20;
  const double t_match = graph.keyframe(match).t;
  const std::vector<UtmPoint> query =
      relnav::mapgraph::recall_trailing_window(graph, match, 1.0);

  const auto estimate =
      relnav::gnss::gnss_factor(graph, VertexId{0, 20}, query, t_match, WindowConfig{});
  ASSERT_TRUE(estimate.has_value());
  EXPECT_LT(estimate->transform.translation().norm(), 1e-9);
  EXPECT_LT(
      std::abs(relnav::geometry::planar_rotation_angle(estimate->transform)),
      1e-9);
}

TEST(GnssFactor, ReadsALateralDisplacementDirectly) {
  // Straight teach path east; the repeat drives 0.2 m to its left (north).
  const Eigen::Matrix<double, 6, 6> cov = 1e-4 * Eigen::Matrix<double, 6, 6>::Identity();
  TeachGraph graph;
  graph.add_teach_vertex(0.0, Transform(), cov, {{0.0, 0.0, 0.0}}, {});
  const Transform step(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-0.5, 0, 0));
  for (int i = 1; i <= 20; ++i) {
    const double t = 0.5 * i;
    std::vector<UtmPoint> fixes;
    for (int j = 4; j >= 0; --j) fixes.push_back({t - 0.1 * j, t - 0.1 * j, 0.0});
    graph.add_teach_vertex(t, step, cov, fixes, {});
  }

  std::vector<UtmPoint> query;
  for (int j = 10; j >= 0; --j) query.push_back({5.0 - 0.1 * j, 5.0 - 0.1 * j, 0.2});
  const auto estimate =
      relnav::gnss::gnss_factor(graph, VertexId{0, 10}, query, 5.0, WindowConfig{});
  ASSERT_TRUE(estimate.has_value());
  const auto offsets = relnav::geometry::path_offsets(estimate->transform);
  EXPECT_NEAR(offsets.lateral, 0.2, 1e-9);
  EXPECT_NEAR(offsets.heading, 0.0, 1e-9);
}

TEST(GnssFactor, MapWindowTrailsTheMatchedVertex) {
  // On a tight circle a trailing window and a centered window hold visibly
  // different fixes; the factor must reproduce the trailing construction.
  const double radius = 5.0;
  const TeachGraph graph = circle_graph(30, radius);
  const std::size_t match = 20;
  const double t_match = graph.keyframe(match).t;
  const std::vector<UtmPoint> query =
      relnav::mapgraph::recall_trailing_window(graph, match, 1.0);

  WindowConfig config;
  const auto estimate = relnav::gnss::gnss_factor(
      graph, VertexId{0, static_cast<int>(match)}, query, t_match, config);
  ASSERT_TRUE(estimate.has_value());

  const auto query_fit = fit_window(*relnav::gnss::ransac_filter(query, config));
  ASSERT_TRUE(query_fit.has_value());
  const auto trailing_fit = fit_window(*relnav::gnss::ransac_filter(
      relnav::mapgraph::recall_trailing_window(graph, match, 2.0 * config.half_width),
      config));
  ASSERT_TRUE(trailing_fit.has_value());
  const auto trailing =
      relnav::gnss::planar_error(*trailing_fit, t_match, *query_fit, t_match, config);
  ASSERT_TRUE(trailing.has_value());
  EXPECT_LT((estimate->transform.translation() - trailing->transform.translation()).norm(),
            1e-12);

  const auto centered_fit = fit_window(*relnav::gnss::ransac_filter(
      relnav::mapgraph::recall_map_window(graph, match, config.half_width), config));
  ASSERT_TRUE(centered_fit.has_value());
  const auto centered =
      relnav::gnss::planar_error(*centered_fit, t_match, *query_fit, t_match, config);
  ASSERT_TRUE(centered.has_value());
  EXPECT_GT((estimate->transform.translation() - centered->transform.translation()).norm(),
            1e-4);
}

TEST(GnssFactor, AbsentWhenTheQueryWindowIsTooThin) {
  const TeachGraph graph = circle_graph(30, 50.0);
  const double t_match = graph.keyframe(20).t;
  std::vector<UtmPoint> query;
  for (int j = 3; j >= 0; --j) query.push_back(circle_fix(t_match - 0.1 * j, 1.0, 50.0));
  EXPECT_FALSE(
      relnav::gnss::gnss_factor(graph, VertexId{0, 20}, query, t_match, WindowConfig{})
          .has_value());
}

TEST(GnssFactor, AbsentWhenTheMapCarriesNoFixes) {
  // A graph logged with GNSS denied everywhere: vertices but no fixes.
  const Eigen::Matrix<double, 6, 6> cov = 1e-4 * Eigen::Matrix<double, 6, 6>::Identity();
  TeachGraph graph;
  graph.add_teach_vertex(0.0, Transform(), cov, {}, {});
  const Transform step(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-0.5, 0, 0));
  for (int i = 1; i <= 20; ++i) graph.add_teach_vertex(0.5 * i, step, cov, {}, {});

  std::vector<UtmPoint> query;
  for (int j = 10; j >= 0; --j) query.push_back({5.0 - 0.1 * j, 5.0 - 0.1 * j, 0.0});
  EXPECT_FALSE(relnav::gnss::gnss_factor(graph, VertexId{0, 10}, query, 5.0, WindowConfig{})
                   .has_value());
}

TEST(GnssFactor, AbsentBelowTheSpeedGate) {
  // Teach fixes dwell near one spot: plenty of points, no usable direction.
  const Eigen::Matrix<double, 6, 6> cov = 1e-4 * Eigen::Matrix<double, 6, 6>::Identity();
  TeachGraph graph;
  graph.add_teach_vertex(0.0, Transform(), cov, {{0.0, 0.0, 0.0}}, {});
  const Transform step(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-0.5, 0, 0));
  for (int i = 1; i <= 20; ++i) {
    const double t = 0.5 * i;
    std::vector<UtmPoint> fixes;
    for (int j = 4; j >= 0; --j) {
      fixes.push_back({t - 0.1 * j, 0.005 * i - 1e-4 * j, 0.0});  // ~0.01 m/s crawl
    }
    graph.add_teach_vertex(t, step, cov, fixes, {});
  }
  std::vector<UtmPoint> query;
  for (int j = 10; j >= 0; --j) query.push_back({5.0 - 0.1 * j, 5.0 - 0.1 * j, 0.0});
  EXPECT_FALSE(relnav::gnss::gnss_factor(graph, VertexId{0, 10}, query, 5.0, WindowConfig{})
                   .has_value());
}

TEST(GnssFactor, RejectsAVertexOutsideTheGraph) {
  const TeachGraph graph = circle_graph(10, 50.0);
  const std::vector<UtmPoint> query = straight_track(11, 0.1, 1.0, 0.0, {0, 0}, 0.0);
  EXPECT_THROW(
      relnav::gnss::gnss_factor(graph, VertexId{1, 2}, query, 1.0, WindowConfig{}),
      std::invalid_argument);
  EXPECT_THROW(
      relnav::gnss::gnss_factor(graph, VertexId{0, 10}, query, 1.0, WindowConfig{}),
      std::invalid_argument);
  EXPECT_THROW(
      relnav::gnss::gnss_factor(graph, VertexId{0, -1}, query, 1.0, WindowConfig{}),
      std::invalid_argument);
}

}  // namespace
