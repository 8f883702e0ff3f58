#include "relnav/mapgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

namespace relnav {
namespace mapgraph {

namespace {

// Slack for comparisons between accumulated arc lengths; keyframe spacings
// sum in floating point and window membership must not flicker at exact
// multiples of the spacing.
constexpr double kArcSlack = 1e-9;

void check_covariance(const Matrix6d& cov, const char* what) {
  if (!cov.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": covariance has non-finite entries");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": covariance is not symmetric");
  }
  Eigen::LLT<Matrix6d> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(what) + ": covariance is not positive definite");
  }
}

}  // namespace

VertexId TeachGraph::add_teach_vertex(double t, const geometry::Transform& vo_delta,
                                      const Matrix6d& vo_cov,
                                      std::vector<UtmPoint> gnss,
                                      std::vector<Eigen::Vector3d> landmarks) {
  const bool first = keyframes_.empty();
  const double prev_t = first ? -std::numeric_limits<double>::infinity()
                              : keyframes_.back().t;
  if (!(t > prev_t)) {
    throw std::invalid_argument("add_teach_vertex: timestamp " + std::to_string(t) +
                                " does not advance past " + std::to_string(prev_t));
  }
  for (std::size_t i = 0; i < gnss.size(); ++i) {
    const double ft = gnss[i].t;
    if (!(ft > prev_t) || !(ft <= t)) {
      throw std::invalid_argument("add_teach_vertex: GNSS fix " + std::to_string(i) +
                                  " at t=" + std::to_string(ft) +
                                  " falls outside the keyframe interval");
    }
    if (i > 0 && ft < gnss[i - 1].t) {
      throw std::invalid_argument("add_teach_vertex: GNSS fixes out of time order at " +
                                  std::to_string(i));
    }
  }

  Keyframe kf;
  kf.id = VertexId{0, static_cast<int>(keyframes_.size())};
  kf.t = t;
  kf.gnss = std::move(gnss);
  kf.landmarks = std::move(landmarks);

  if (first) {
    kf.arc_length = 0.0;
  } else {
    check_covariance(vo_cov, "add_teach_vertex");
    kf.arc_length = keyframes_.back().arc_length + vo_delta.translation().norm();
    Edge edge;
    edge.kind = EdgeKind::kPrivileged;
    edge.from = keyframes_.back().id;
    edge.to = kf.id;
    edge.transform = vo_delta;
    edge.covariance = vo_cov;
    edges_.push_back(edge);
  }
  keyframes_.push_back(std::move(kf));
  return keyframes_.back().id;
}

const Keyframe& TeachGraph::keyframe(int index) const {
  if (index < 0 || index >= size()) {
    throw std::out_of_range("keyframe: index " + std::to_string(index) +
                            " outside graph of size " + std::to_string(size()));
  }
  return keyframes_[static_cast<std::size_t>(index)];
}

const Edge& TeachGraph::privileged_edge(int index) const {
  if (index < 0 || index + 1 >= size()) {
    throw std::out_of_range("privileged_edge: no edge starts at index " +
                            std::to_string(index));
  }
  return edges_[static_cast<std::size_t>(index)];
}

double TeachGraph::total_arc_length() const {
  return keyframes_.empty() ? 0.0 : keyframes_.back().arc_length;
}

geometry::Transform TeachGraph::chain_transform(int from_index, int to_index) const {
  if (from_index < 0 || from_index >= size() || to_index < 0 || to_index >= size()) {
    throw std::out_of_range("chain_transform: endpoint outside graph");
  }
  geometry::Transform result;  // identity
  if (to_index > from_index) {
    // T_(to,from) = T_(to,to-1) ... T_(from+1,from)
    for (int k = from_index; k < to_index; ++k) {
      result = privileged_edge(k).transform * result;
    }
  } else if (to_index < from_index) {
    for (int k = to_index; k < from_index; ++k) {
      result = result * privileged_edge(k).transform.inverse();
    }
  }
  return result;
}

std::vector<UtmPoint> recall_map_window(const TeachGraph& graph, int center_index,
                                        double half_width) {
  if (center_index < 0 || center_index >= graph.size()) {
    throw std::out_of_range("recall_map_window: center index outside graph");
  }
  if (!(half_width >= 0.0)) {
    throw std::invalid_argument("recall_map_window: negative half width");
  }
  const double center_arc = graph.keyframe(center_index).arc_length;
  std::vector<UtmPoint> points;
  for (const Keyframe& kf : graph.keyframes()) {
    if (std::abs(kf.arc_length - center_arc) <= half_width + kArcSlack) {
      points.insert(points.end(), kf.gnss.begin(), kf.gnss.end());
    }
  }
  return points;
}

std::vector<UtmPoint> recall_trailing_window(const TeachGraph& graph, int end_index,
                                             double width) {
  if (end_index < 0 || end_index >= graph.size()) {
    throw std::out_of_range("recall_trailing_window: end index outside graph");
  }
  if (!(width >= 0.0)) {
    throw std::invalid_argument("recall_trailing_window: negative width");
  }
  const double end_arc = graph.keyframe(end_index).arc_length;
  std::vector<UtmPoint> points;
  for (const Keyframe& kf : graph.keyframes()) {
    if (kf.arc_length > end_arc - width - kArcSlack &&
        kf.arc_length <= end_arc + kArcSlack) {
      points.insert(points.end(), kf.gnss.begin(), kf.gnss.end());
    }
  }
  return points;
}

int match_vertex(const TeachGraph& graph, const geometry::Transform& prior_q_last,
                 int last_match) {
  if (graph.empty()) {
    throw std::out_of_range("match_vertex: empty graph");
  }
  if (last_match < 0 || last_match >= graph.size()) {
    throw std::out_of_range("match_vertex: last match outside graph");
  }
  const int lo = std::max(0, last_match - 5);
  const int hi = std::min(graph.size() - 1, last_match + 5);
  // Vehicle position expressed in the last matched vertex's frame.
  const Eigen::Vector3d vehicle_in_last = prior_q_last.inverse().translation();
  int best = lo;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int j = lo; j <= hi; ++j) {
    const Eigen::Vector3d candidate_in_last =
        graph.chain_transform(j, last_match).translation();
    const double dist = (candidate_in_last - vehicle_in_last).norm();
    if (dist <= best_dist) {  // ties resolve toward the higher index
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

namespace {

nlohmann::json transform_to_json(const geometry::Transform& t) {
  const Eigen::Matrix<double, 3, 4> m = t.matrix34();
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      arr.push_back(m(r, c));
    }
  }
  return arr;
}

geometry::Transform transform_from_json(const nlohmann::json& arr, const char* where) {
  if (!arr.is_array() || arr.size() != 12) {
    throw std::runtime_error(std::string(where) + ": transform must be 12 numbers");
  }
  Eigen::Matrix3d rot;
  Eigen::Vector3d trans;
  std::size_t k = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c, ++k) {
      const double v = arr[k].get<double>();
      if (c < 3) {
        rot(r, c) = v;
      } else {
        trans(r) = v;
      }
    }
  }
  if (!geometry::is_rotation(rot, 1e-6)) {
    throw std::runtime_error(std::string(where) + ": rotation block is not orthonormal");
  }
  geometry::Transform t(rot, trans);
  t.reproject();
  return t;
}

nlohmann::json covariance_to_json(const Matrix6d& cov) {
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 6; ++r) {
    for (int c = r; c < 6; ++c) {
      arr.push_back(cov(r, c));
    }
  }
  return arr;
}

Matrix6d covariance_from_json(const nlohmann::json& arr, const char* where) {
  if (!arr.is_array() || arr.size() != 21) {
    throw std::runtime_error(std::string(where) +
                             ": covariance must be 21 upper-triangle numbers");
  }
  Matrix6d cov;
  std::size_t k = 0;
  for (int r = 0; r < 6; ++r) {
    for (int c = r; c < 6; ++c, ++k) {
      cov(r, c) = arr[k].get<double>();
      cov(c, r) = cov(r, c);
    }
  }
  try {
    check_covariance(cov, where);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  return cov;
}

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kPrivileged: return "privileged";
    case EdgeKind::kAutonomous: return "autonomous";
    case EdgeKind::kSpatial: return "spatial";
  }
  throw std::logic_error("edge_kind_name: unknown kind");
}

}  // namespace

std::string to_json(const TeachGraph& graph, const std::string& scenario_hash) {
  nlohmann::json doc;
  doc["format"] = "relnav-graph";
  doc["version"] = 1;
  if (!scenario_hash.empty()) {
    doc["scenario_hash"] = scenario_hash;
  }
  doc["vertices"] = nlohmann::json::array();
  for (const Keyframe& kf : graph.keyframes()) {
    nlohmann::json v;
    v["run"] = kf.id.run;
    v["index"] = kf.id.index;
    v["t"] = kf.t;
    v["arc_length"] = kf.arc_length;
    v["gnss"] = nlohmann::json::array();
    for (const UtmPoint& p : kf.gnss) {
      v["gnss"].push_back({{"t", p.t}, {"easting", p.easting}, {"northing", p.northing}});
    }
    v["landmarks"] = nlohmann::json::array();
    for (const Eigen::Vector3d& l : kf.landmarks) {
      v["landmarks"].push_back({l.x(), l.y(), l.z()});
    }
    doc["vertices"].push_back(std::move(v));
  }
  doc["edges"] = nlohmann::json::array();
  for (const Edge& e : graph.edges()) {
    nlohmann::json j;
    j["kind"] = edge_kind_name(e.kind);
    j["from"] = {{"run", e.from.run}, {"index", e.from.index}};
    j["to"] = {{"run", e.to.run}, {"index", e.to.index}};
    j["transform"] = transform_to_json(e.transform);
    j["covariance_upper"] = covariance_to_json(e.covariance);
    doc["edges"].push_back(std::move(j));
  }
  return doc.dump(2);
}

TeachGraph from_json(const std::string& text, std::string* scenario_hash) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("graph JSON parse failure: ") + e.what());
  }
  if (doc.value("format", "") != "relnav-graph") {
    throw std::runtime_error("graph JSON: missing or unknown 'format'");
  }
  if (doc.value("version", -1) != 1) {
    throw std::runtime_error("graph JSON: unsupported 'version'");
  }
  if (scenario_hash != nullptr) {
    *scenario_hash = doc.value("scenario_hash", "");
  }
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) {
    throw std::runtime_error("graph JSON: missing 'vertices' array");
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw std::runtime_error("graph JSON: missing 'edges' array");
  }
  const auto& vertices = doc["vertices"];
  const auto& edges = doc["edges"];
  if (!vertices.empty() && edges.size() + 1 != vertices.size()) {
    throw std::runtime_error("graph JSON: edge count must be vertex count minus one");
  }

  TeachGraph graph;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto& v = vertices[i];
    const std::string where = "graph JSON vertex " + std::to_string(i);
    if (v.value("run", -1) != 0 || v.value("index", -1) != static_cast<int>(i)) {
      throw std::runtime_error(where + ": ids must be run 0 with contiguous indices");
    }
    if (!v.contains("t") || !v["t"].is_number()) {
      throw std::runtime_error(where + ": missing timestamp");
    }
    std::vector<UtmPoint> gnss;
    for (const auto& p : v.value("gnss", nlohmann::json::array())) {
      UtmPoint point;
      point.t = p.at("t").get<double>();
      point.easting = p.at("easting").get<double>();
      point.northing = p.at("northing").get<double>();
      gnss.push_back(point);
    }
    std::vector<Eigen::Vector3d> landmarks;
    for (const auto& l : v.value("landmarks", nlohmann::json::array())) {
      if (!l.is_array() || l.size() != 3) {
        throw std::runtime_error(where + ": landmark must be 3 numbers");
      }
      landmarks.emplace_back(l[0].get<double>(), l[1].get<double>(), l[2].get<double>());
    }

    geometry::Transform delta;
    Matrix6d cov = Matrix6d::Identity();
    if (i > 0) {
      const auto& e = edges[i - 1];
      const std::string ewhere = "graph JSON edge " + std::to_string(i - 1);
      if (e.value("kind", "") != "privileged") {
        throw std::runtime_error(ewhere + ": teach edges must be privileged");
      }
      const auto& from = e.at("from");
      const auto& to = e.at("to");
      if (from.value("run", -1) != 0 || to.value("run", -1) != 0 ||
          from.value("index", -1) != static_cast<int>(i) - 1 ||
          to.value("index", -1) != static_cast<int>(i)) {
        throw std::runtime_error(ewhere + ": endpoints do not chain the vertices");
      }
      delta = transform_from_json(e.at("transform"), ewhere.c_str());
      cov = covariance_from_json(e.at("covariance_upper"), ewhere.c_str());
    }
    try {
      graph.add_teach_vertex(v["t"].get<double>(), delta, cov, std::move(gnss),
                             std::move(landmarks));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }

  // Stored arc lengths must agree with the edges they were integrated from.
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double stored = vertices[i].value("arc_length", -1.0);
    const double rebuilt = graph.keyframe(static_cast<int>(i)).arc_length;
    if (std::abs(stored - rebuilt) > 1e-6) {
      throw std::runtime_error("graph JSON vertex " + std::to_string(i) +
                               ": arc_length disagrees with the edge chain");
    }
  }
  return graph;
}

}  // namespace mapgraph
}  // namespace relnav
