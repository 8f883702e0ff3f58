#include "relnav/gnss_window.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace relnav {
namespace gnss {
namespace {

void require_time_ordered(const std::vector<UtmPoint>& points) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].t < points[i - 1].t) {
      throw std::invalid_argument("ransac_filter: fixes must be time-ordered");
    }
  }
}

/// Distance from p to where the constant-velocity track through a and b
/// predicts the receiver at p's timestamp. Time matters: a fix near the line
/// in space but displaced along it is off the track, not on it.
double track_distance(const UtmPoint& a, const UtmPoint& b, const UtmPoint& p) {
  const double dt = b.t - a.t;
  const double vx = (b.easting - a.easting) / dt;
  const double vy = (b.northing - a.northing) / dt;
  const double ex = a.easting + vx * (p.t - a.t);
  const double ny = a.northing + vy * (p.t - a.t);
  return std::hypot(p.easting - ex, p.northing - ny);
}

}  // namespace

std::optional<std::vector<UtmPoint>> ransac_filter(const std::vector<UtmPoint>& points,
                                                   const WindowConfig& config) {
  require_time_ordered(points);
  const int n = static_cast<int>(points.size());
  if (n < config.min_points) return std::nullopt;

  std::mt19937_64 rng(config.ransac_seed);
  std::uniform_int_distribution<int> pick_first(0, n - 1);
  std::uniform_int_distribution<int> pick_second(0, n - 2);

  std::vector<char> best_mask;
  int best_count = 0;
  for (int iter = 0; iter < config.ransac_iters; ++iter) {
    const int i = pick_first(rng);
    int j = pick_second(rng);
    if (j >= i) ++j;
    const UtmPoint& a = points[i];
    const UtmPoint& b = points[j];
    if (a.t == b.t) continue;  // no velocity hypothesis from one instant

    std::vector<char> mask(points.size(), 0);
    int count = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (track_distance(a, b, points[k]) <= config.ransac_threshold) {
        mask[k] = 1;
        ++count;
      }
    }
    if (count > best_count) {  // strictly greater keeps the first winner: deterministic
      best_count = count;
      best_mask = std::move(mask);
    }
  }

  if (best_count < config.min_points) return std::nullopt;
  std::vector<UtmPoint> consensus;
  consensus.reserve(best_count);
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (best_mask[k]) consensus.push_back(points[k]);
  }
  return consensus;
}

std::optional<RegressionFit> fit_window(const std::vector<UtmPoint>& points) {
  if (points.size() < 2) return std::nullopt;
  const double n = static_cast<double>(points.size());

  double t_mean = 0.0;
  Eigen::Vector2d p_mean = Eigen::Vector2d::Zero();
  for (const UtmPoint& p : points) {
    t_mean += p.t;
    p_mean += Eigen::Vector2d(p.easting, p.northing);
  }
  t_mean /= n;
  p_mean /= n;

  double stt = 0.0;
  Eigen::Vector2d stp = Eigen::Vector2d::Zero();
  for (const UtmPoint& p : points) {
    const double dt = p.t - t_mean;
    stt += dt * dt;
    stp += dt * (Eigen::Vector2d(p.easting, p.northing) - p_mean);
  }
  if (stt <= 0.0) return std::nullopt;  // a single instant constrains no velocity

  RegressionFit fit;
  fit.t_mean = t_mean;
  fit.position = p_mean;
  fit.velocity = stp / stt;
  fit.inlier_count = static_cast<int>(points.size());

  double sq = 0.0;
  for (const UtmPoint& p : points) {
    const Eigen::Vector2d predicted = fit.position + fit.velocity * (p.t - t_mean);
    sq += (Eigen::Vector2d(p.easting, p.northing) - predicted).squaredNorm();
  }
  fit.residual_rms = std::sqrt(sq / n);
  return fit;
}

Eigen::Vector2d extrapolate(const RegressionFit& fit, double t) {
  return fit.position + fit.velocity * (t - fit.t_mean);
}

std::optional<double> heading(const RegressionFit& fit, const WindowConfig& config) {
  if (fit.velocity.norm() < config.min_speed) return std::nullopt;
  return std::atan2(fit.velocity.y(), fit.velocity.x());
}

std::optional<GnssErrorEstimate> planar_error(const RegressionFit& map_fit, double t_map,
                                              const RegressionFit& query_fit, double t_query,
                                              const WindowConfig& config) {
  const std::optional<double> theta_m = heading(map_fit, config);
  const std::optional<double> theta_q = heading(query_fit, config);
  if (!theta_m || !theta_q) return std::nullopt;

  const Eigen::Vector2d map_pos = extrapolate(map_fit, t_map);
  const Eigen::Vector2d query_pos = extrapolate(query_fit, t_query);
  const Eigen::Vector2d delta = map_pos - query_pos;  // global frame

  // Rotate the global offset into the query frame: rows of Rz(theta_q)
  // transposed applied to delta.
  const double c = std::cos(*theta_q);
  const double s = std::sin(*theta_q);

  GnssErrorEstimate estimate;
  estimate.theta_q = *theta_q;
  estimate.theta_m = *theta_m;
  estimate.r_mq_q =
      Eigen::Vector3d(c * delta.x() + s * delta.y(), -s * delta.x() + c * delta.y(), 0.0);
  const double theta_qm = geometry::wrap_angle(*theta_q - *theta_m);
  estimate.transform =
      geometry::planar_transform(theta_qm, estimate.r_mq_q.head<2>());

  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  cov(0, 0) = config.sigma_xy * config.sigma_xy;
  cov(1, 1) = config.sigma_xy * config.sigma_xy;
  cov(2, 2) = config.sigma_weak * config.sigma_weak;
  cov(3, 3) = config.sigma_weak * config.sigma_weak;
  cov(4, 4) = config.sigma_weak * config.sigma_weak;
  cov(5, 5) = config.sigma_yaw * config.sigma_yaw;
  estimate.covariance = cov;
  return estimate;
}

std::optional<GnssErrorEstimate> gnss_factor(const TeachGraph& graph, VertexId matched,
                                             const std::vector<UtmPoint>& query_points,
                                             double t_query, const WindowConfig& config) {
  if (matched.run != 0 || matched.index < 0 ||
      static_cast<std::size_t>(matched.index) >= graph.size()) {
    throw std::invalid_argument("gnss_factor: matched vertex is not in the graph");
  }
  const std::size_t match_index = static_cast<std::size_t>(matched.index);

  // The live window trails the vehicle, so recall the same trailing stretch of
  // the map: matched shapes between the two windows cancel in the comparison.
  const std::vector<UtmPoint> map_points =
      mapgraph::recall_trailing_window(graph, match_index, 2.0 * config.half_width);

  const std::optional<std::vector<UtmPoint>> map_inliers = ransac_filter(map_points, config);
  if (!map_inliers) return std::nullopt;
  const std::optional<std::vector<UtmPoint>> query_inliers =
      ransac_filter(query_points, config);
  if (!query_inliers) return std::nullopt;

  const std::optional<RegressionFit> map_fit = fit_window(*map_inliers);
  if (!map_fit) return std::nullopt;
  const std::optional<RegressionFit> query_fit = fit_window(*query_inliers);
  if (!query_fit) return std::nullopt;

  return planar_error(*map_fit, graph.keyframe(match_index).t, *query_fit, t_query, config);
}

}  // namespace gnss
}  // namespace relnav
