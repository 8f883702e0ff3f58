#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "relnav/fusion.hpp"
#include "relnav/geometry.hpp"
#include "relnav/gnss_window.hpp"
#include "relnav/mapgraph.hpp"

namespace relnav {
namespace sim {

using mapgraph::Matrix6d;
using mapgraph::TeachGraph;
using mapgraph::UtmPoint;

/// Closed arc-length interval [begin, end] along the path, metres.
struct ArcInterval {
  double begin = 0.0;
  double end = 0.0;
};

/// Proportional path-following gains.
struct ControllerGains {
  double k_lat = 2.0;   ///< 1/m
  double k_head = 4.0;  ///< dimensionless
};

/// Rigid placement of the simulated world inside the UTM plane. GNSS fixes
/// are reported as Rz(rotation) * (p_world + noise + bias) + offset, so moving
/// the world inside the projection must never change any relative estimate.
struct UtmFrame {
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();  ///< m
  double rotation = 0.0;                             ///< rad
};

/// Complete description of one simulated teach-and-repeat experiment.
/// Zones are intervals of sensor availability; outside every gnss_zone no fix
/// is produced, outside every vision_zone no landmark is observed. When a
/// scenario leaves a zone list unset it defaults to the whole path.
struct Scenario {
  std::vector<Eigen::Vector2d> path;  ///< polyline waypoints, m
  double keyframe_spacing = 0.5;      ///< m of travel per keyframe
  double speed = 1.0;                 ///< m/s
  double gnss_rate = 5.0;             ///< Hz
  double gnss_sigma = 0.0;            ///< m, per-axis fix noise
  Eigen::Vector2d gnss_bias = Eigen::Vector2d::Zero();  ///< m, constant offset
  double gnss_outlier_rate = 0.0;     ///< probability per fix
  std::vector<ArcInterval> gnss_zones{{0.0, kWholePath}};
  std::vector<ArcInterval> vision_zones{{0.0, kWholePath}};
  double vo_sigma_trans = 0.0;        ///< m of drift per m travelled
  double vo_sigma_rot = 0.0;          ///< rad of drift per m travelled
  int landmarks_per_keyframe = 0;
  double landmark_sigma = 0.0;        ///< m, per-axis observation noise
  std::vector<double> checkpoints;    ///< arc lengths where true error is read
  double uncertainty_stop_threshold = 1.0;  ///< m^2, on the planar covariance trace
  std::uint64_t seed = 0;

  double control_rate = 20.0;  ///< Hz, substep integration and command rate
  ControllerGains gains;
  double max_rate = 2.0;       ///< rad/s, steering saturation
  UtmFrame utm_frame;
  gnss::WindowConfig window;
  fusion::KernelConfig kernel;
  /// Reweighted least squares crawls linearly once the kernel is active, so
  /// simulated runs get a deeper iteration budget than the bare solver default.
  fusion::SolverConfig solver{.max_iters = 200};

  /// Sentinel zone end meaning "to the end of the path, whatever its length".
  static constexpr double kWholePath = -1.0;
};

/// \brief Checks every scenario invariant, throwing std::invalid_argument that
///        names the offending field, and resolves kWholePath zone sentinels to
///        the actual path length.
void validate(Scenario& scenario);

/// Parses and validates a scenario from its JSON description.
/// \throws std::invalid_argument naming the offending field.
Scenario scenario_from_json(const std::string& text);

/// Canonical JSON for a scenario; parsing it back reproduces the scenario.
std::string scenario_to_json(const Scenario& scenario);

/// Digest of every scenario field except the seed, so one teach map can serve
/// any number of differently-seeded repeat runs but nothing else.
std::uint64_t scenario_hash(const Scenario& scenario);

/// Deterministically derives an independent RNG stream, used to give every
/// run, phase, and recall window its own seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// \brief Arc-length-parameterized planar path built from polyline waypoints.
///
/// Positions interpolate the polyline; the heading field is made continuous
/// by smearing each corner's turn over the segment leading into it, which
/// also defines a piecewise-constant curvature. Queries clamp to [0, length].
class PathModel {
 public:
  /// \throws std::invalid_argument on fewer than two distinct waypoints.
  explicit PathModel(const std::vector<Eigen::Vector2d>& waypoints);

  double length() const { return length_; }
  /// True when the polyline returns to its starting point.
  bool closed() const { return closed_; }
  Eigen::Vector2d position(double s) const;
  double heading(double s) const;
  double curvature(double s) const;
  /// Planar pose: Rz(heading(s)) at position(s), z = 0.
  geometry::Transform pose(double s) const;

 private:
  std::size_t segment_index(double s) const;
  std::vector<Eigen::Vector2d> points_;
  std::vector<double> arc_;        ///< cumulative arc at each waypoint
  std::vector<double> heading_;    ///< heading of each segment
  std::vector<double> curvature_;  ///< turn-per-metre over each segment
  double length_ = 0.0;
  bool closed_ = false;
};

/// Steering command from the estimated path-tracking error: turn toward the
/// path and against heading error, saturated at max_rate. Positive lateral
/// error (vehicle left of path) yields a negative (rightward) rate.
double step_controller(double est_lateral, double est_heading, const ControllerGains& gains,
                       double max_rate);

/// \brief Drives the scenario path once and records the relative map:
///        a keyframe every keyframe_spacing of travel, VO edges with noise
///        proportional to their length, raw GNSS fixes logged verbatim
///        against keyframes inside gnss_zones, and true local landmarks.
///
/// On a closed path the final keyframe, which would coincide with the first,
/// is suppressed.
TeachGraph run_teach(const Scenario& scenario);

/// One repeat keyframe: what the vehicle logged and where it really was.
struct RepeatRow {
  double t = 0.0;           ///< s, repeat clock
  double s = 0.0;           ///< m, matched teach vertex arc length
  double e_lat_true = 0.0;  ///< m, +left of the matched taught pose
  double e_head_true = 0.0; ///< rad, +counter-clockwise of the taught heading
  double e_lat_est = 0.0;
  double e_head_est = 0.0;
  bool used_gnss = false;
  bool used_vision = false;
  double cov_trace = 0.0;  ///< m^2, planar translational covariance trace
  bool stopped = false;    ///< safety stop declared at this keyframe

  // Carried for replay export and evaluation; not part of the log CSV.
  int matched = 0;
  double gnss_error_norm = 0.0;     ///< GNSS residual at the kept pose; NaN when no factor formed
  std::vector<double> cost_history; ///< solver cost per accepted step
  geometry::Transform vo_delta;     ///< measured odometry into this keyframe
  Matrix6d vo_covariance = Matrix6d::Identity();
  std::vector<UtmPoint> fixes;      ///< raw fixes logged since the last keyframe
};

struct RepeatLog {
  std::vector<RepeatRow> rows;
  bool safety_stopped = false;
  double distance_travelled = 0.0;  ///< m, true arc covered before ending
};

/// \brief Retraces the taught path: propagates a noisy-VO pose prior, matches
///        a teach vertex, forms GNSS and landmark factors as the zones allow,
///        localizes, steers, and logs one row per repeat keyframe. Declares a
///        safety stop, a result rather than an error, once the planar
///        covariance trace exceeds uncertainty_stop_threshold.
///
/// \throws std::invalid_argument when the graph was not taught from an
///         equivalent scenario.
RepeatLog run_repeat(const Scenario& scenario, const TeachGraph& graph);

/// Log CSV: header t,s,e_lat_true,e_head_true,e_lat_est,e_head_est,gnss,vision,
/// cov_trace,stopped; one time-ordered row per repeat keyframe; full double
/// precision so rereading reproduces the values bitwise.
std::string to_csv(const RepeatLog& log);

/// Rebuilds the CSV-visible part of a log (replay-export fields stay empty).
/// \throws std::runtime_error naming the offending line.
RepeatLog repeat_log_from_csv(const std::string& text);

/// \brief The localization pipeline of one repeat run, shared by the
///        simulator and by offline replay of recorded logs.
///
/// Keeps the live chain of repeat keyframes (so query windows recall exactly
/// like map windows), the current matched teach vertex, and the running
/// estimate of T_(query,map) with its covariance. Per keyframe, call
/// propagate() with the measured odometry and logged fixes, then localize()
/// with whatever landmark observations exist.
class Localizer {
 public:
  Localizer(const TeachGraph& map, const Scenario& config);

  /// Advances the prior by the measured odometry (ignored on the first call,
  /// which anchors the chain at the path start), logs the fixes against a new
  /// live keyframe, and re-matches. Returns the matched teach vertex index.
  int propagate(double t, const geometry::Transform& vo_delta, const Matrix6d& vo_cov,
                const std::vector<UtmPoint>& fixes);

  struct Result {
    geometry::Transform t_qm;  ///< posterior T_(query,map) for the matched vertex
    Matrix6d covariance = Matrix6d::Identity();
    int matched = 0;
    bool used_gnss = false;
    bool used_vision = false;
    double cov_trace = 0.0;
    double gnss_error_norm = 0.0;  ///< GNSS residual at the kept pose; NaN when no factor formed
    std::vector<double> cost_history;
  };

  /// Forms the GNSS factor from the trailing live window plus the given
  /// landmark factors and solves; with no factor available the VO-propagated
  /// prior stands and its covariance keeps growing.
  Result localize(double t, const std::vector<fusion::LandmarkFactor>& landmarks);

  const TeachGraph& live_chain() const { return live_; }
  int matched() const { return matched_; }

 private:
  const TeachGraph& map_;
  Scenario config_;
  TeachGraph live_;
  geometry::Transform t_qm_;
  Matrix6d cov_ = Matrix6d::Identity();
  int matched_ = 0;
  int keyframe_index_ = 0;
};

// ---------------------------------------------------------------------------
// Offline replay of recorded drives
// ---------------------------------------------------------------------------

/// One recorded keyframe of a drive: the odometry step into it and the raw
/// fixes logged since the previous keyframe, already projected to a planar
/// frame. The first record of a drive carries an identity step.
struct ReplayRecord {
  double t = 0.0;
  geometry::Transform vo_delta;
  std::vector<UtmPoint> fixes;
};

/// Serializes records for one drive. `phase` names the role the file plays
/// ("teach" or "repeat") and is stamped on every row. Full double precision;
/// fixes are written in the planar frame.
std::string replay_to_csv(const std::vector<ReplayRecord>& records, const std::string& phase);

/// \brief Parses a replay CSV, checking that every row carries the expected
///        phase, keyframe times increase, and each fix's time lies inside
///        its keyframe's window (previous time, this time]. Rows whose
///        fix_frame is "geodetic" are projected to UTM in the zone of the
///        file's first geodetic fix.
/// \throws std::runtime_error naming the offending line.
std::vector<ReplayRecord> replay_from_csv(const std::string& text, const std::string& phase);

/// The teach drive as recorded in a graph: one record per keyframe with its
/// privileged-edge odometry and logged fixes. Landmarks do not replay.
std::vector<ReplayRecord> teach_replay_records(const TeachGraph& graph);

/// The repeat drive as logged: one record per row with its measured odometry
/// and the fixes gathered before that keyframe.
std::vector<ReplayRecord> repeat_replay_records(const RepeatLog& log);

/// One keyframe of replayed localization. Only estimates exist here; recorded
/// logs carry no ground truth.
struct ReplayRow {
  double t = 0.0;
  double s = 0.0;  ///< m, matched teach vertex arc length
  double e_lat_est = 0.0;
  double e_head_est = 0.0;
  bool used_gnss = false;
  bool used_vision = false;  ///< always false: landmarks do not replay
  double cov_trace = 0.0;
};

/// \brief Rebuilds the teach graph from its records (edge covariances from
///        the configured odometry model), then drives the localization
///        pipeline over the repeat records: GNSS and odometry only.
///
/// A repeat log exported from a simulated run with vision disabled replays
/// to the simulation's own estimates exactly.
/// \throws std::invalid_argument for empty record lists.
std::vector<ReplayRow> run_replay(const std::vector<ReplayRecord>& teach,
                                  const std::vector<ReplayRecord>& repeat,
                                  const Scenario& config);

/// Replay output CSV: header t,s,e_lat_est,e_head_est,gnss,vision,cov_trace.
std::string replay_rows_to_csv(const std::vector<ReplayRow>& rows);

}  // namespace sim
}  // namespace relnav
