#pragma once

#include <compare>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "relnav/geometry.hpp"

namespace relnav {
namespace mapgraph {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Vertex address: run 0 is the teach pass, repeat passes count from 1.
struct VertexId {
  int run = 0;
  int index = 0;
  auto operator<=>(const VertexId&) const = default;
};

enum class EdgeKind {
  kPrivileged,  ///< teach odometry, the backbone the map is anchored to
  kAutonomous,  ///< repeat odometry
  kSpatial,     ///< live-to-map localization
};

/// Relative constraint between two vertices. The transform maps points
/// expressed in the 'from' frame into the 'to' frame; the covariance is a
/// symmetric positive definite 6x6 on the tangent space.
struct Edge {
  EdgeKind kind = EdgeKind::kPrivileged;
  VertexId from;
  VertexId to;
  geometry::Transform transform;
  Matrix6d covariance = Matrix6d::Identity();
};

/// Raw GNSS fix projected to UTM. Logged against keyframes exactly as
/// received; nothing downstream ever edits or re-references these.
struct UtmPoint {
  double t = 0.0;        ///< s, clock of the run that logged the fix
  double easting = 0.0;  ///< m
  double northing = 0.0; ///< m
};

struct Keyframe {
  VertexId id;
  double t = 0.0;           ///< s
  double arc_length = 0.0;  ///< m of odometry-integrated travel from run start
  std::vector<UtmPoint> gnss;
  std::vector<Eigen::Vector3d> landmarks;  ///< 3D points in this keyframe's frame
};

/// \brief Teach-pass map: ordered keyframes chained by privileged odometry
///        edges, with raw GNSS and landmarks hung off the keyframes.
///
/// There is no global frame anywhere in this structure. Geometry lives only
/// in the relative edges; GNSS is payload, never reconciled against odometry.
class TeachGraph {
 public:
  /// Appends a keyframe. The first call seeds vertex (0, 0) at arc length
  /// zero and ignores vo_delta and vo_cov; later calls append a privileged
  /// edge carrying vo_delta (new-from-previous) and advance the arc length by
  /// the norm of vo_delta's translation.
  ///
  /// \throws std::invalid_argument for a non-increasing timestamp, a vo_cov
  ///         that is not symmetric positive definite, GNSS timestamps outside
  ///         (previous keyframe time, this keyframe time], or GNSS times out
  ///         of order within the batch.
  VertexId add_teach_vertex(double t, const geometry::Transform& vo_delta,
                            const Matrix6d& vo_cov, std::vector<UtmPoint> gnss,
                            std::vector<Eigen::Vector3d> landmarks);

  int size() const { return static_cast<int>(keyframes_.size()); }
  bool empty() const { return keyframes_.empty(); }

  const Keyframe& keyframe(int index) const;
  const std::vector<Keyframe>& keyframes() const { return keyframes_; }

  /// Privileged edge from vertex index to index + 1.
  const Edge& privileged_edge(int index) const;
  const std::vector<Edge>& edges() const { return edges_; }

  /// Total integrated arc length, 0 for an empty or single-vertex graph.
  double total_arc_length() const;

  /// Relative transform T_(to,from) composed along the privileged chain.
  geometry::Transform chain_transform(int from_index, int to_index) const;

 private:
  std::vector<Keyframe> keyframes_;
  std::vector<Edge> edges_;
};

/// \brief Collects the GNSS points of every keyframe within +-half_width of
///        the center keyframe's arc length, time-ordered, truncated at the
///        ends of the graph.
std::vector<UtmPoint> recall_map_window(const TeachGraph& graph, int center_index,
                                        double half_width);

/// \brief Collects the GNSS points of keyframes whose arc length is within
///        width of the end keyframe's arc length, looking backward only:
///        arcs in [end arc - width, end arc]. This is the map-side mirror of
///        a live trailing window ending at the matched keyframe, so both
///        sides of a comparison cover the same stretch of path.
std::vector<UtmPoint> recall_trailing_window(const TeachGraph& graph, int end_index,
                                             double width);

/// \brief Picks the teach vertex nearest to a predicted vehicle pose.
///
/// Searches indices within +-5 of last_match (clamped to the graph), placing
/// each candidate through the privileged chain relative to last_match and
/// comparing against the prior T_(q,last_match), the vehicle pose expressed
/// relative to the last matched vertex. Ties break toward the higher index,
/// preferring forward progress.
int match_vertex(const TeachGraph& graph, const geometry::Transform& prior_q_last,
                 int last_match);

/// Serializes a graph to JSON. An optional scenario hash travels with the
/// graph so a repeat pass can refuse a map built for a different world.
std::string to_json(const TeachGraph& graph, const std::string& scenario_hash = "");

/// Parses and validates a graph serialized by to_json.
/// \throws std::runtime_error naming the offending field on malformed input.
TeachGraph from_json(const std::string& text, std::string* scenario_hash = nullptr);

}  // namespace mapgraph
}  // namespace relnav
