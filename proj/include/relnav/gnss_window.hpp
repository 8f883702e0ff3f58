#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "relnav/geometry.hpp"
#include "relnav/mapgraph.hpp"

namespace relnav {
namespace gnss {

using mapgraph::TeachGraph;
using mapgraph::UtmPoint;
using mapgraph::VertexId;

/// Tuning for window recall, outlier rejection, and the measurement noise
/// attached to the resulting factor.
struct WindowConfig {
  double half_width = 0.5;  ///< m, half extent of a recall window along the path
  int min_points = 5;       ///< fewer surviving fixes than this and no fit is made
  int ransac_iters = 50;
  double ransac_threshold = 0.10;  ///< m, perpendicular distance gating inliers
  double min_speed = 0.05;  ///< m/s, below this the fitted heading is unusable
  double sigma_xy = 0.05;   ///< m, 1-sigma of the planar position measurement
  double sigma_yaw = 2.0 * std::numbers::pi / 180.0;  ///< rad, 1-sigma heading
  double sigma_weak = 1e4;  ///< 1-sigma on the axes GNSS says nothing about
  std::uint64_t ransac_seed = 0;  ///< callers vary this per window for fresh draws
};

/// Least-squares line through a window of fixes, parameterized around the
/// window's mean time so the coefficients stay well conditioned:
/// position(t) = position + velocity * (t - t_mean).
struct RegressionFit {
  double t_mean = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  ///< fitted point at t_mean
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  ///< slopes, m/s
  int inlier_count = 0;     ///< fixes that produced this fit
  double residual_rms = 0;  ///< m, root-mean-square planar misfit of those fixes
};

/// \brief Keeps the largest consensus of fixes lying on one constant-velocity
///        track, rejecting multipath-style outliers.
///
/// Hypotheses are constant-velocity tracks through random pairs of fixes with
/// distinct timestamps; a fix agrees when it sits within ransac_threshold of
/// where the track predicts the receiver at that fix's timestamp, so a gross
/// error along the direction of travel is rejected just like one across it.
/// Returns the winning consensus in time order, or nothing when the input is
/// too small or no consensus reaches min_points. Deterministic for a fixed
/// ransac_seed.
///
/// \throws std::invalid_argument if the input is not time-ordered.
std::optional<std::vector<UtmPoint>> ransac_filter(const std::vector<UtmPoint>& points,
                                                   const WindowConfig& config);

/// \brief Ordinary least squares of easting and northing against time over one
///        window, mean-centered in time and position for conditioning.
///
/// Expects already-filtered fixes; run ransac_filter first when outliers are
/// possible. Returns nothing when fewer than two distinct timestamps remain.
std::optional<RegressionFit> fit_window(const std::vector<UtmPoint>& points);

/// Fitted position at time t, linearly extrapolated beyond the window.
Eigen::Vector2d extrapolate(const RegressionFit& fit, double t);

/// Travel direction of the fitted track, atan2 of the velocity, in (-pi, pi].
/// Nothing when the fitted speed falls below min_speed: a near-stationary
/// track constrains no direction.
std::optional<double> heading(const RegressionFit& fit, const WindowConfig& config);

/// Measurement produced by the GNSS pipeline for the localization solver:
/// an estimate of T_(query,map) with its uncertainty, plus the intermediate
/// quantities it was assembled from. The covariance is diagonal in the order
/// [translation, rotation]: sigma_xy on x and y, sigma_yaw on yaw, sigma_weak
/// on the unobserved z, roll, and pitch.
struct GnssErrorEstimate {
  geometry::Transform transform;  ///< T_(query,map): map frame seen from query
  Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Identity();
  double theta_q = 0.0;  ///< rad, fitted query-track heading in the global frame
  double theta_m = 0.0;  ///< rad, fitted map-track heading in the global frame
  Eigen::Vector3d r_mq_q = Eigen::Vector3d::Zero();  ///< m, map minus query, in query axes
};

/// \brief Combines a map-window fit and a query-window fit into the planar
///        path-tracking error T_(query,map).
///
/// Each fit is extrapolated at its own frame's timestamp; the position
/// difference (map minus query) is rotated into the query frame by the query
/// heading, and the rotation turns by the heading difference. Purely planar:
/// z, roll, and pitch are identically zero. Nothing when either fitted speed
/// falls below min_speed.
std::optional<GnssErrorEstimate> planar_error(const RegressionFit& map_fit, double t_map,
                                              const RegressionFit& query_fit, double t_query,
                                              const WindowConfig& config);

/// \brief End-to-end GNSS factor for one localization event.
///
/// Recalls the map fixes trailing the matched teach vertex over the same
/// stretch of path the query fixes cover (2 * half_width), filters and fits
/// both windows, and combines them through planar_error. The query fit is
/// evaluated at t_query on the repeat clock, the map fit at the matched
/// keyframe's teach time; the two clocks never mix. Returns nothing whenever
/// either window fails to filter or fit or either fitted speed falls below
/// min_speed, which is how GNSS degradation shows up downstream: the factor
/// is simply absent.
///
/// \throws std::invalid_argument if matched is not a vertex of the graph.
std::optional<GnssErrorEstimate> gnss_factor(const TeachGraph& graph, VertexId matched,
                                             const std::vector<UtmPoint>& query_points,
                                             double t_query, const WindowConfig& config);

}  // namespace gnss
}  // namespace relnav
