#include "relnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "relnav/geodesy.hpp"

namespace relnav {
namespace sim {
namespace {

using geometry::Transform;
using json = nlohmann::ordered_json;

constexpr double kZoneSlack = 1e-9;
constexpr double kTriggerSlack = 1e-9;

// Stream salts, one per independently-seeded consumer.
constexpr std::uint64_t kTeachSalt = 0x7e6c;
constexpr std::uint64_t kRepeatSalt = 0x4e47;
constexpr std::uint64_t kWindowSalt = 0x2a50;

bool in_zones(const std::vector<ArcInterval>& zones, double s) {
  for (const ArcInterval& z : zones) {
    if (s >= z.begin - kZoneSlack && s <= z.end + kZoneSlack) return true;
  }
  return false;
}

Matrix6d vo_edge_covariance(const Scenario& sc, double edge_length) {
  const double st = std::max(sc.vo_sigma_trans * edge_length, 1e-6);
  const double sr = std::max(sc.vo_sigma_rot * edge_length, 1e-8);
  Matrix6d cov = Matrix6d::Zero();
  cov.diagonal() << st * st, st * st, st * st, sr * sr, sr * sr, sr * sr;
  return cov;
}

/// Measured odometry: the true delta left-perturbed by zero-mean noise whose
/// scale grows with the edge length.
Transform perturb_delta(const Transform& delta_true, const Scenario& sc, double edge_length,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double st = sc.vo_sigma_trans * edge_length;
  const double sr = sc.vo_sigma_rot * edge_length;
  geometry::Twist6 eps;
  for (int i = 0; i < 3; ++i) eps(i) = st * gauss(rng);
  for (int i = 3; i < 6; ++i) eps(i) = sr * gauss(rng);
  return geometry::se3_exp(eps) * delta_true;
}

/// A raw fix: the true planar position, corrupted by noise, occasionally by a
/// gross outlier, always by the constant receiver bias, then mapped into the
/// scenario's UTM frame. Draw order is fixed so availability zones and frame
/// placement never disturb the random stream.
UtmPoint make_fix(const Eigen::Vector2d& p_world, double t, const Scenario& sc,
                  std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform01(0.0, 1.0);
  Eigen::Vector2d noisy = p_world;
  noisy.x() += sc.gnss_sigma * gauss(rng);
  noisy.y() += sc.gnss_sigma * gauss(rng);
  if (sc.gnss_outlier_rate > 0.0 && uniform01(rng) < sc.gnss_outlier_rate) {
    std::uniform_real_distribution<double> magnitude(1.0, 5.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    const double m = magnitude(rng);
    const double a = angle(rng);
    noisy += m * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  noisy += sc.gnss_bias;
  const double c = std::cos(sc.utm_frame.rotation);
  const double s = std::sin(sc.utm_frame.rotation);
  const Eigen::Vector2d utm(c * noisy.x() - s * noisy.y() + sc.utm_frame.offset.x(),
                            s * noisy.x() + c * noisy.y() + sc.utm_frame.offset.y());
  return UtmPoint{t, utm.x(), utm.y()};
}

std::vector<Eigen::Vector3d> draw_landmarks(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ahead(1.0, 5.0);
  std::uniform_real_distribution<double> side(-3.0, 3.0);
  std::uniform_real_distribution<double> up(0.0, 2.0);
  std::vector<Eigen::Vector3d> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = ahead(rng);
    const double y = side(rng);
    const double z = up(rng);
    points.emplace_back(x, y, z);
  }
  return points;
}

/// Path-relative vehicle state; both phases integrate it with the same
/// unicycle-in-Frenet-coordinates step so a perfectly-tracking repeat run
/// reproduces the teach trajectory to rounding error.
struct FrenetState {
  double s = 0.0;
  double lat = 0.0;
  double head = 0.0;
};

void advance(FrenetState& st, double omega, double dt, double speed, const PathModel& path) {
  const double kappa = path.curvature(st.s);
  double denom = 1.0 - kappa * st.lat;
  if (denom < 0.1) denom = 0.1;  // keep the projection well defined far off-path
  double ds = dt * speed * std::cos(st.head) / denom;
  if (ds < 0.0) ds = 0.0;
  const double new_lat = st.lat + dt * speed * std::sin(st.head);
  const double new_head = st.head + dt * omega - kappa * ds;
  st.s += ds;
  st.lat = new_lat;
  st.head = new_head;
}

Eigen::Vector2d world_position(const PathModel& path, const FrenetState& st) {
  const double h = path.heading(st.s);
  const Eigen::Vector2d normal(-std::sin(h), std::cos(h));
  return path.position(st.s) + st.lat * normal;
}

Transform world_pose(const PathModel& path, const FrenetState& st) {
  const Eigen::Vector2d p = world_position(path, st);
  const double psi = path.heading(st.s) + st.head;
  return Transform(geometry::so3_exp(Eigen::Vector3d(0.0, 0.0, psi)),
                   Eigen::Vector3d(p.x(), p.y(), 0.0));
}

/// Accumulates chordwise travel and fires once per keyframe_spacing; the
/// overshoot carries so spacing does not drift on curves.
struct KeyframeTrigger {
  double spacing;
  double travel = 0.0;
  bool step(double chord) {
    travel += chord;
    if (travel >= spacing - kTriggerSlack) {
      travel -= spacing;
      if (travel < 0.0) travel = 0.0;
      return true;
    }
    return false;
  }
};

/// The curvature feedforward both phases add to the feedback command, read a
/// half step ahead so corners are anticipated rather than chased.
double feedforward(const PathModel& path, double s_est, double speed, double dt) {
  return speed * path.curvature(s_est + 0.5 * speed * dt);
}

/// The taught trajectory's command profile, sampled per substep and keyed by
/// cumulative chord arc (the same measure the graph's arc lengths use, so the
/// repeat pass can align its estimate to it). The repeat replays omega as
/// feedforward and uses speed/kappa to propagate its estimate in coordinates
/// relative to the taught trajectory rather than the nominal polyline.
struct CommandProfile {
  std::vector<double> arc;    ///< chord arc at command time, ascending
  std::vector<double> omega;  ///< rad/s commanded
  std::vector<double> speed;  ///< m/s of chord progress produced
  std::vector<double> kappa;  ///< rad per chord metre, the trajectory's own turn

  void at(double s, double* omega_out, double* speed_out, double* kappa_out) const {
    if (arc.empty()) {
      *omega_out = 0.0;
      *speed_out = 0.0;
      *kappa_out = 0.0;
      return;
    }
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    if (it == arc.begin()) {
      *omega_out = omega.front();
      *speed_out = speed.front();
      *kappa_out = kappa.front();
      return;
    }
    const std::size_t hi = static_cast<std::size_t>(it - arc.begin());
    if (hi >= arc.size()) {
      *omega_out = omega.back();
      *speed_out = speed.back();
      *kappa_out = kappa.back();
      return;
    }
    const std::size_t lo = hi - 1;
    const double span = arc[hi] - arc[lo];
    const double u = span > 1e-15 ? (s - arc[lo]) / span : 0.0;
    *omega_out = omega[lo] + u * (omega[hi] - omega[lo]);
    *speed_out = speed[lo] + u * (speed[hi] - speed[lo]);
    *kappa_out = kappa[lo] + u * (kappa[hi] - kappa[lo]);
  }
};

struct TeachTrace {
  TeachGraph graph;
  std::vector<Transform> poses;  ///< true world pose of each vertex
  CommandProfile profile;
};

TeachTrace teach_trace(const Scenario& sc, const PathModel& path) {
  std::mt19937_64 rng(mix_seed(sc.seed, kTeachSalt));
  const double dt = 1.0 / sc.control_rate;
  const long gnss_every = std::lround(sc.control_rate / sc.gnss_rate);
  const Eigen::Vector2d start = path.position(0.0);
  const double suppress_radius = 0.5 * sc.keyframe_spacing;

  TeachTrace trace;
  FrenetState truth;
  KeyframeTrigger trigger{sc.keyframe_spacing};
  std::vector<UtmPoint> fixes;
  Eigen::Vector2d prev_pos = world_position(path, truth);
  Transform prev_kf_pose = world_pose(path, truth);
  // The profile is keyed by the same arc measure the graph stores: summed
  // keyframe-to-keyframe chords, plus distance from the last keyframe. A
  // repeat pass that sets its arc from a matched vertex then reads the
  // profile in exactly the coordinates it was written in.
  Eigen::Vector2d kf_pos = prev_pos;
  double arc_base = 0.0;
  double prev_measure = 0.0;

  if (in_zones(sc.gnss_zones, truth.s)) fixes.push_back(make_fix(prev_pos, 0.0, sc, rng));
  trace.graph.add_teach_vertex(0.0, Transform(), vo_edge_covariance(sc, sc.keyframe_spacing),
                               fixes, draw_landmarks(sc.landmarks_per_keyframe, rng));
  trace.poses.push_back(prev_kf_pose);
  fixes.clear();

  long i = 0;
  while (truth.s < path.length() - kTriggerSlack) {
    // The teach driver tracks the nominal path with full knowledge of its own
    // state; the resulting trajectory is the reference everything else is
    // measured against.
    const double omega = step_controller(truth.lat, truth.head, sc.gains, sc.max_rate) +
                         feedforward(path, truth.s, sc.speed, dt);
    trace.profile.arc.push_back(prev_measure);
    trace.profile.omega.push_back(omega);
    advance(truth, omega, dt, sc.speed, path);
    ++i;
    const double t = static_cast<double>(i) / sc.control_rate;
    const Eigen::Vector2d pos = world_position(path, truth);
    const double chord = (pos - prev_pos).norm();
    prev_pos = pos;
    if (i % gnss_every == 0 && in_zones(sc.gnss_zones, truth.s)) {
      fixes.push_back(make_fix(pos, t, sc, rng));
    }
    if (trigger.step(chord) && !(path.closed() && (pos - start).norm() < suppress_radius)) {
      const Transform pose = world_pose(path, truth);
      const Transform delta_true = pose.inverse() * prev_kf_pose;
      const double edge_length = delta_true.translation().norm();
      const Transform measured = perturb_delta(delta_true, sc, edge_length, rng);
      // The covariance model runs on the measured step, the only length a
      // consumer of the log can ever see.
      trace.graph.add_teach_vertex(t, measured,
                                   vo_edge_covariance(sc, measured.translation().norm()), fixes,
                                   draw_landmarks(sc.landmarks_per_keyframe, rng));
      trace.poses.push_back(pose);
      prev_kf_pose = pose;
      fixes.clear();
      arc_base += edge_length;
      kf_pos = pos;
    }
    const double measure = arc_base + (pos - kf_pos).norm();
    const double rate = std::max(measure - prev_measure, 0.0) / dt;
    prev_measure = std::max(measure, prev_measure);
    trace.profile.speed.push_back(rate);
    trace.profile.kappa.push_back(rate > 1e-9 ? omega / rate : 0.0);
  }
  return trace;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

json zones_to_json(const std::vector<ArcInterval>& zones) {
  json out = json::array();
  for (const ArcInterval& z : zones) out.push_back(json::array({z.begin, z.end}));
  return out;
}

std::vector<ArcInterval> zones_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw std::invalid_argument("scenario field '" + field + "' must be an array of [begin, end] pairs");
  std::vector<ArcInterval> zones;
  for (const json& z : j) {
    if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
      throw std::invalid_argument("scenario field '" + field + "' must be an array of [begin, end] pairs");
    }
    zones.push_back(ArcInterval{z[0].get<double>(), z[1].get<double>()});
  }
  return zones;
}

double number_field(const json& j, const std::string& field) {
  if (!j.contains(field)) throw std::invalid_argument("scenario field '" + field + "' is missing");
  if (!j.at(field).is_number()) throw std::invalid_argument("scenario field '" + field + "' must be a number");
  return j.at(field).get<double>();
}

void read_optional_number(const json& j, const std::string& field, double& out) {
  if (!j.contains(field)) return;
  if (!j.at(field).is_number()) throw std::invalid_argument("scenario field '" + field + "' must be a number");
  out = j.at(field).get<double>();
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void validate(Scenario& sc) {
  if (sc.path.size() < 2) throw std::invalid_argument("scenario field 'path' needs at least two waypoints");
  double length = 0.0;
  for (std::size_t i = 1; i < sc.path.size(); ++i) length += (sc.path[i] - sc.path[i - 1]).norm();
  if (length <= 0.0) throw std::invalid_argument("scenario field 'path' has zero length");
  if (!(sc.keyframe_spacing > 0.0)) throw std::invalid_argument("scenario field 'keyframe_spacing' must be positive");
  if (!(sc.speed > 0.0)) throw std::invalid_argument("scenario field 'speed' must be positive");
  if (!(sc.gnss_rate > 0.0)) throw std::invalid_argument("scenario field 'gnss_rate' must be positive");
  if (!(sc.control_rate > 0.0)) throw std::invalid_argument("scenario field 'control_rate' must be positive");
  const double ratio = sc.control_rate / sc.gnss_rate;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9 || std::lround(ratio) < 1) {
    throw std::invalid_argument("scenario field 'control_rate' must be an integer multiple of gnss_rate");
  }
  if (sc.gnss_sigma < 0.0) throw std::invalid_argument("scenario field 'gnss_sigma' must be non-negative");
  if (sc.gnss_outlier_rate < 0.0 || sc.gnss_outlier_rate > 1.0) {
    throw std::invalid_argument("scenario field 'gnss_outlier_rate' must lie in [0, 1]");
  }
  if (sc.vo_sigma_trans < 0.0) throw std::invalid_argument("scenario field 'vo_sigma_trans' must be non-negative");
  if (sc.vo_sigma_rot < 0.0) throw std::invalid_argument("scenario field 'vo_sigma_rot' must be non-negative");
  if (sc.landmarks_per_keyframe < 0) throw std::invalid_argument("scenario field 'landmarks_per_keyframe' must be non-negative");
  if (sc.landmark_sigma < 0.0) throw std::invalid_argument("scenario field 'landmark_sigma' must be non-negative");
  if (!(sc.uncertainty_stop_threshold > 0.0)) {
    throw std::invalid_argument("scenario field 'uncertainty_stop_threshold' must be positive");
  }
  if (!(sc.max_rate > 0.0)) throw std::invalid_argument("scenario field 'max_rate' must be positive");
  auto fix_zones = [length](std::vector<ArcInterval>& zones, const char* field) {
    for (ArcInterval& z : zones) {
      if (z.end == Scenario::kWholePath) z.end = length;
      if (z.begin < -kZoneSlack || z.end > length + kZoneSlack || z.begin > z.end) {
        throw std::invalid_argument(std::string("scenario field '") + field +
                                    "' must hold ordered intervals inside [0, path length]");
      }
    }
  };
  fix_zones(sc.gnss_zones, "gnss_zones");
  fix_zones(sc.vision_zones, "vision_zones");
  for (double c : sc.checkpoints) {
    if (c < 0.0 || c > length + kZoneSlack) {
      throw std::invalid_argument("scenario field 'checkpoints' must lie inside [0, path length]");
    }
  }
  if (!(sc.window.half_width > 0.0)) throw std::invalid_argument("scenario field 'window.half_width' must be positive");
  if (sc.window.min_points < 3) throw std::invalid_argument("scenario field 'window.min_points' must be at least 3");
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");

  static const std::vector<std::string> known = {
      "path", "keyframe_spacing", "speed", "gnss_rate", "gnss_sigma", "gnss_bias",
      "gnss_outlier_rate", "gnss_zones", "vision_zones", "vo_sigma_trans", "vo_sigma_rot",
      "landmarks_per_keyframe", "landmark_sigma", "checkpoints", "uncertainty_stop_threshold",
      "seed", "control_rate", "gains", "max_rate", "utm_frame", "window", "kernel", "solver"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw std::invalid_argument("scenario field '" + item.key() + "' is not recognized");
    }
  }

  Scenario sc;
  if (!j.contains("path") || !j.at("path").is_array()) {
    throw std::invalid_argument("scenario field 'path' must be an array of [x, y] waypoints");
  }
  sc.path.clear();
  for (const json& p : j.at("path")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw std::invalid_argument("scenario field 'path' must be an array of [x, y] waypoints");
    }
    sc.path.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  read_optional_number(j, "keyframe_spacing", sc.keyframe_spacing);
  read_optional_number(j, "speed", sc.speed);
  read_optional_number(j, "gnss_rate", sc.gnss_rate);
  read_optional_number(j, "gnss_sigma", sc.gnss_sigma);
  if (j.contains("gnss_bias")) {
    const json& b = j.at("gnss_bias");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw std::invalid_argument("scenario field 'gnss_bias' must be [east, north]");
    }
    sc.gnss_bias = Eigen::Vector2d(b[0].get<double>(), b[1].get<double>());
  }
  read_optional_number(j, "gnss_outlier_rate", sc.gnss_outlier_rate);
  if (j.contains("gnss_zones")) sc.gnss_zones = zones_from_json(j.at("gnss_zones"), "gnss_zones");
  if (j.contains("vision_zones")) sc.vision_zones = zones_from_json(j.at("vision_zones"), "vision_zones");
  read_optional_number(j, "vo_sigma_trans", sc.vo_sigma_trans);
  read_optional_number(j, "vo_sigma_rot", sc.vo_sigma_rot);
  if (j.contains("landmarks_per_keyframe")) {
    if (!j.at("landmarks_per_keyframe").is_number_integer()) {
      throw std::invalid_argument("scenario field 'landmarks_per_keyframe' must be an integer");
    }
    sc.landmarks_per_keyframe = j.at("landmarks_per_keyframe").get<int>();
  }
  read_optional_number(j, "landmark_sigma", sc.landmark_sigma);
  if (j.contains("checkpoints")) {
    if (!j.at("checkpoints").is_array()) throw std::invalid_argument("scenario field 'checkpoints' must be an array");
    sc.checkpoints.clear();
    for (const json& c : j.at("checkpoints")) {
      if (!c.is_number()) throw std::invalid_argument("scenario field 'checkpoints' must hold numbers");
      sc.checkpoints.push_back(c.get<double>());
    }
  }
  read_optional_number(j, "uncertainty_stop_threshold", sc.uncertainty_stop_threshold);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw std::invalid_argument("scenario field 'seed' must be an integer");
    sc.seed = j.at("seed").get<std::uint64_t>();
  }
  read_optional_number(j, "control_rate", sc.control_rate);
  if (j.contains("gains")) {
    const json& g = j.at("gains");
    if (!g.is_object()) throw std::invalid_argument("scenario field 'gains' must be an object");
    double v;
    v = sc.gains.k_lat; read_optional_number(g, "k_lat", v); sc.gains.k_lat = v;
    v = sc.gains.k_head; read_optional_number(g, "k_head", v); sc.gains.k_head = v;
  }
  read_optional_number(j, "max_rate", sc.max_rate);
  if (j.contains("utm_frame")) {
    const json& f = j.at("utm_frame");
    if (!f.is_object()) throw std::invalid_argument("scenario field 'utm_frame' must be an object");
    if (f.contains("offset")) {
      const json& o = f.at("offset");
      if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number()) {
        throw std::invalid_argument("scenario field 'utm_frame.offset' must be [east, north]");
      }
      sc.utm_frame.offset = Eigen::Vector2d(o[0].get<double>(), o[1].get<double>());
    }
    double r = sc.utm_frame.rotation;
    read_optional_number(f, "rotation", r);
    sc.utm_frame.rotation = r;
  }
  if (j.contains("window")) {
    const json& w = j.at("window");
    if (!w.is_object()) throw std::invalid_argument("scenario field 'window' must be an object");
    read_optional_number(w, "half_width", sc.window.half_width);
    if (w.contains("min_points")) sc.window.min_points = static_cast<int>(number_field(w, "min_points"));
    if (w.contains("ransac_iters")) sc.window.ransac_iters = static_cast<int>(number_field(w, "ransac_iters"));
    read_optional_number(w, "ransac_threshold", sc.window.ransac_threshold);
    read_optional_number(w, "min_speed", sc.window.min_speed);
    read_optional_number(w, "sigma_xy", sc.window.sigma_xy);
    read_optional_number(w, "sigma_yaw", sc.window.sigma_yaw);
    read_optional_number(w, "sigma_weak", sc.window.sigma_weak);
  }
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    if (!k.is_object()) throw std::invalid_argument("scenario field 'kernel' must be an object");
    read_optional_number(k, "k", sc.kernel.k);
    if (k.contains("robust_gnss")) sc.kernel.robust_gnss = k.at("robust_gnss").get<bool>();
    if (k.contains("robust_landmarks")) sc.kernel.robust_landmarks = k.at("robust_landmarks").get<bool>();
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (!s.is_object()) throw std::invalid_argument("scenario field 'solver' must be an object");
    if (s.contains("max_iters")) sc.solver.max_iters = static_cast<int>(number_field(s, "max_iters"));
    read_optional_number(s, "gradient_tol", sc.solver.gradient_tol);
    read_optional_number(s, "step_tol", sc.solver.step_tol);
    read_optional_number(s, "initial_trust_radius", sc.solver.initial_trust_radius);
    read_optional_number(s, "min_trust_radius", sc.solver.min_trust_radius);
  }
  validate(sc);
  return sc;
}

std::string scenario_to_json(const Scenario& scenario) {
  // Serialize the validated form so zone sentinels never survive into the
  // canonical text; to_json then composes with from_json bitwise.
  Scenario sc = scenario;
  validate(sc);
  json j;
  json path = json::array();
  for (const Eigen::Vector2d& p : sc.path) path.push_back(json::array({p.x(), p.y()}));
  j["path"] = path;
  j["keyframe_spacing"] = sc.keyframe_spacing;
  j["speed"] = sc.speed;
  j["gnss_rate"] = sc.gnss_rate;
  j["gnss_sigma"] = sc.gnss_sigma;
  j["gnss_bias"] = json::array({sc.gnss_bias.x(), sc.gnss_bias.y()});
  j["gnss_outlier_rate"] = sc.gnss_outlier_rate;
  j["gnss_zones"] = zones_to_json(sc.gnss_zones);
  j["vision_zones"] = zones_to_json(sc.vision_zones);
  j["vo_sigma_trans"] = sc.vo_sigma_trans;
  j["vo_sigma_rot"] = sc.vo_sigma_rot;
  j["landmarks_per_keyframe"] = sc.landmarks_per_keyframe;
  j["landmark_sigma"] = sc.landmark_sigma;
  j["checkpoints"] = sc.checkpoints;
  j["uncertainty_stop_threshold"] = sc.uncertainty_stop_threshold;
  j["seed"] = sc.seed;
  j["control_rate"] = sc.control_rate;
  j["gains"] = json{{"k_lat", sc.gains.k_lat}, {"k_head", sc.gains.k_head}};
  j["max_rate"] = sc.max_rate;
  j["utm_frame"] = json{{"offset", json::array({sc.utm_frame.offset.x(), sc.utm_frame.offset.y()})},
                        {"rotation", sc.utm_frame.rotation}};
  j["window"] = json{{"half_width", sc.window.half_width},
                     {"min_points", sc.window.min_points},
                     {"ransac_iters", sc.window.ransac_iters},
                     {"ransac_threshold", sc.window.ransac_threshold},
                     {"min_speed", sc.window.min_speed},
                     {"sigma_xy", sc.window.sigma_xy},
                     {"sigma_yaw", sc.window.sigma_yaw},
                     {"sigma_weak", sc.window.sigma_weak}};
  j["kernel"] = json{{"k", sc.kernel.k},
                     {"robust_gnss", sc.kernel.robust_gnss},
                     {"robust_landmarks", sc.kernel.robust_landmarks}};
  j["solver"] = json{{"max_iters", sc.solver.max_iters},
                     {"gradient_tol", sc.solver.gradient_tol},
                     {"step_tol", sc.solver.step_tol},
                     {"initial_trust_radius", sc.solver.initial_trust_radius},
                     {"min_trust_radius", sc.solver.min_trust_radius}};
  return j.dump(2);
}

std::uint64_t scenario_hash(const Scenario& sc) {
  Scenario unseeded = sc;
  unseeded.seed = 0;
  const std::string text = scenario_to_json(unseeded);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// PathModel
// ---------------------------------------------------------------------------

PathModel::PathModel(const std::vector<Eigen::Vector2d>& waypoints) {
  for (const Eigen::Vector2d& p : waypoints) {
    if (points_.empty() || (p - points_.back()).norm() > 1e-12) points_.push_back(p);
  }
  if (points_.size() < 2) {
    throw std::invalid_argument("path needs at least two distinct waypoints");
  }
  arc_.resize(points_.size());
  arc_[0] = 0.0;
  heading_.resize(points_.size() - 1);
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Eigen::Vector2d d = points_[i + 1] - points_[i];
    arc_[i + 1] = arc_[i] + d.norm();
    heading_[i] = std::atan2(d.y(), d.x());
  }
  length_ = arc_.back();
  closed_ = (points_.front() - points_.back()).norm() < 1e-9;
  // Turn-per-metre over each segment: the corner at each segment's end is
  // smeared backwards over the segment so the heading field is continuous.
  curvature_.assign(points_.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < heading_.size(); ++i) {
    const double turn = geometry::wrap_angle(heading_[i + 1] - heading_[i]);
    curvature_[i] = turn / (arc_[i + 1] - arc_[i]);
  }
  if (closed_ && heading_.size() > 1) {
    const double turn = geometry::wrap_angle(heading_.front() - heading_.back());
    curvature_.back() = turn / (arc_.back() - arc_[arc_.size() - 2]);
  }
}

std::size_t PathModel::segment_index(double s) const {
  if (s <= 0.0) return 0;
  if (s >= length_) return points_.size() - 2;
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  return static_cast<std::size_t>(it - arc_.begin()) - 1;
}

Eigen::Vector2d PathModel::position(double s) const {
  const double sc = std::clamp(s, 0.0, length_);
  const std::size_t i = segment_index(sc);
  const double len = arc_[i + 1] - arc_[i];
  const double u = (sc - arc_[i]) / len;
  return points_[i] + u * (points_[i + 1] - points_[i]);
}

double PathModel::heading(double s) const {
  const double sc = std::clamp(s, 0.0, length_);
  const std::size_t i = segment_index(sc);
  return heading_[i] + curvature_[i] * (sc - arc_[i]);
}

double PathModel::curvature(double s) const {
  return curvature_[segment_index(std::clamp(s, 0.0, length_))];
}

Transform PathModel::pose(double s) const {
  const Eigen::Vector2d p = position(s);
  return Transform(geometry::so3_exp(Eigen::Vector3d(0.0, 0.0, heading(s))),
                   Eigen::Vector3d(p.x(), p.y(), 0.0));
}

// ---------------------------------------------------------------------------
// Controller and phases
// ---------------------------------------------------------------------------

double step_controller(double est_lateral, double est_heading, const ControllerGains& gains,
                       double max_rate) {
  const double omega = -gains.k_lat * est_lateral - gains.k_head * est_heading;
  return std::clamp(omega, -max_rate, max_rate);
}

TeachGraph run_teach(const Scenario& scenario) {
  Scenario sc = scenario;
  validate(sc);
  const PathModel path(sc.path);
  return teach_trace(sc, path).graph;
}

// ---------------------------------------------------------------------------
// Localizer
// ---------------------------------------------------------------------------

Localizer::Localizer(const TeachGraph& map, const Scenario& config)
    : map_(map), config_(config) {
  cov_ = Matrix6d::Zero();
  cov_.diagonal() << 1e-6, 1e-6, 1e-6, 1e-8, 1e-8, 1e-8;
}

int Localizer::propagate(double t, const Transform& vo_delta, const Matrix6d& vo_cov,
                         const std::vector<UtmPoint>& fixes) {
  live_.add_teach_vertex(t, vo_delta, vo_cov, fixes, {});
  if (live_.size() > 1) {
    t_qm_ = vo_delta * t_qm_;
    cov_ += vo_cov;
  }
  const int m = mapgraph::match_vertex(map_, t_qm_, matched_);
  if (m != matched_) {
    t_qm_ = t_qm_ * map_.chain_transform(m, matched_);
    matched_ = m;
  }
  return matched_;
}

Localizer::Result Localizer::localize(double t, const std::vector<fusion::LandmarkFactor>& landmarks) {
  Result r;
  r.matched = matched_;
  r.gnss_error_norm = std::numeric_limits<double>::quiet_NaN();

  std::vector<fusion::Factor> factors;
  gnss::WindowConfig wc = config_.window;
  wc.ransac_seed = mix_seed(mix_seed(config_.seed, kWindowSalt),
                            static_cast<std::uint64_t>(live_.size() - 1));
  const auto query = mapgraph::recall_trailing_window(live_, static_cast<int>(live_.size()) - 1,
                                                      2.0 * wc.half_width);
  const auto estimate = gnss::gnss_factor(map_, mapgraph::VertexId{0, matched_}, query, t, wc);
  std::optional<fusion::GnssFactor> gnss_term;
  if (estimate) {
    gnss_term = fusion::GnssFactor{estimate->transform, estimate->covariance};
    factors.push_back(*gnss_term);
  }
  for (const fusion::LandmarkFactor& lm : landmarks) factors.push_back(lm);

  if (!factors.empty()) {
    // The dead-reckoned pose joins the solve as a factor of its own, so the
    // measurements correct it with a strength set by the tracked covariance
    // instead of replacing it. Feeding a window-averaged, and therefore
    // delayed, estimate straight to the steering loop would oscillate; the
    // odometry prior keeps the instantaneous part of the estimate in charge.
    factors.push_back(fusion::GnssFactor{t_qm_, cov_});
    const fusion::LocalizationResult solved =
        fusion::solve(factors, t_qm_, config_.solver, config_.kernel);
    if (solved.converged) {
      t_qm_ = solved.transform;
      cov_ = solved.covariance;
    }
    r.used_gnss = estimate.has_value() && solved.converged;
    r.used_vision = !landmarks.empty() && solved.converged;
    r.cost_history = solved.cost_history;
  }
  // Report the residual against the pose actually kept, so a run that tracks
  // perfectly reads near zero even though the measured offset never does.
  if (gnss_term) r.gnss_error_norm = fusion::gnss_residual(*gnss_term, t_qm_).norm();
  r.t_qm = t_qm_;
  r.covariance = cov_;
  r.cov_trace = cov_(0, 0) + cov_(1, 1);
  return r;
}

// ---------------------------------------------------------------------------
// Repeat phase
// ---------------------------------------------------------------------------

RepeatLog run_repeat(const Scenario& scenario, const TeachGraph& graph) {
  Scenario sc = scenario;
  validate(sc);
  const PathModel path(sc.path);
  // The teach trajectory is a pure function of the path and rates, so the
  // true vertex poses can be regenerated regardless of which seed taught the
  // map; keyframe times are seed-independent too, which makes them the check
  // that this graph really came from this scenario's kinematics.
  const TeachTrace teach = teach_trace(sc, path);
  if (graph.size() != teach.graph.size()) {
    throw std::invalid_argument("run_repeat: graph was not taught from an equivalent scenario");
  }
  for (int k = 0; k < graph.size(); ++k) {
    if (std::abs(graph.keyframe(k).t - teach.graph.keyframe(k).t) > 1e-9) {
      throw std::invalid_argument("run_repeat: graph was not taught from an equivalent scenario");
    }
  }

  std::mt19937_64 rng(mix_seed(sc.seed, kRepeatSalt));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 1.0 / sc.control_rate;
  const long gnss_every = std::lround(sc.control_rate / sc.gnss_rate);
  const Eigen::Vector2d start = path.position(0.0);
  const double suppress_radius = 0.5 * sc.keyframe_spacing;
  const double lm_sigma = std::max(sc.landmark_sigma, 1e-6);
  const Eigen::Matrix3d lm_cov = lm_sigma * lm_sigma * Eigen::Matrix3d::Identity();

  Localizer loc(graph, sc);
  RepeatLog log;
  FrenetState truth;
  FrenetState est;
  KeyframeTrigger trigger{sc.keyframe_spacing};
  std::vector<UtmPoint> fixes;
  Eigen::Vector2d prev_pos = world_position(path, truth);
  Transform prev_kf_pose = world_pose(path, truth);

  // One keyframe's worth of logging, localization, steering reset, and row.
  auto handle_keyframe = [&](double t, const Transform& vo_delta, const Matrix6d& vo_cov) {
    const int matched = loc.propagate(t, vo_delta, vo_cov, fixes);
    // True offset of the vehicle from the taught pose it is matched against,
    // in the same convention the localizer estimates.
    const Transform into_query =
        world_pose(path, truth).inverse() * teach.poses[static_cast<std::size_t>(matched)];
    std::vector<fusion::LandmarkFactor> observations;
    if (in_zones(sc.vision_zones, truth.s)) {
      for (const Eigen::Vector3d& lm : graph.keyframe(matched).landmarks) {
        Eigen::Vector3d observed = into_query * lm;
        observed.x() += sc.landmark_sigma * gauss(rng);
        observed.y() += sc.landmark_sigma * gauss(rng);
        observed.z() += sc.landmark_sigma * gauss(rng);
        observations.push_back(fusion::LandmarkFactor{lm, observed, lm_cov});
      }
    }
    const Localizer::Result res = loc.localize(t, observations);

    const geometry::PathOffsets offsets = geometry::path_offsets(res.t_qm);
    est.lat = offsets.lateral;
    est.head = offsets.heading;
    est.s = graph.keyframe(res.matched).arc_length + offsets.longitudinal;

    const geometry::PathOffsets true_offsets = geometry::path_offsets(into_query);
    RepeatRow row;
    row.t = t;
    row.s = graph.keyframe(res.matched).arc_length;
    row.e_lat_true = true_offsets.lateral;
    row.e_head_true = true_offsets.heading;
    row.e_lat_est = est.lat;
    row.e_head_est = est.head;
    row.used_gnss = res.used_gnss;
    row.used_vision = res.used_vision;
    row.cov_trace = res.cov_trace;
    row.stopped = res.cov_trace > sc.uncertainty_stop_threshold;
    row.matched = res.matched;
    row.gnss_error_norm = res.gnss_error_norm;
    row.cost_history = res.cost_history;
    row.vo_delta = vo_delta;
    row.vo_covariance = vo_cov;
    row.fixes = fixes;
    log.rows.push_back(std::move(row));
    fixes.clear();
    if (log.rows.back().stopped) log.safety_stopped = true;
    return log.rows.back().stopped;
  };

  if (in_zones(sc.gnss_zones, truth.s)) fixes.push_back(make_fix(prev_pos, 0.0, sc, rng));
  bool stopped = handle_keyframe(0.0, Transform(), vo_edge_covariance(sc, sc.keyframe_spacing));

  // A vehicle pointing backwards makes no arc progress, so cap the substeps
  // at several times the nominal run length rather than looping forever.
  const long max_substeps =
      10 * static_cast<long>(path.length() / (sc.speed / sc.control_rate)) + 1000;
  long i = 0;
  while (!stopped && truth.s < path.length() - kTriggerSlack && i < max_substeps) {
    // Feedforward replays the taught command profile at the estimated arc, so
    // a clean retrace reproduces the taught trajectory rather than re-deriving
    // it from the nominal polyline.
    double ff_omega = 0.0;
    double ff_speed = 0.0;
    double ff_kappa = 0.0;
    teach.profile.at(est.s, &ff_omega, &ff_speed, &ff_kappa);
    const double omega = step_controller(est.lat, est.head, sc.gains, sc.max_rate) + ff_omega;
    advance(truth, omega, dt, sc.speed, path);
    // The estimate lives in coordinates relative to the taught trajectory, so
    // it advances against the taught turn rate and chord speed instead of the
    // polyline's curvature field.
    const double est_denom = std::max(0.1, 1.0 - ff_kappa * est.lat);
    const double est_ds = std::max(0.0, dt * ff_speed * std::cos(est.head) / est_denom);
    est.lat += dt * sc.speed * std::sin(est.head);
    est.head += dt * omega - ff_kappa * est_ds;
    est.s += est_ds;
    ++i;
    const double t = static_cast<double>(i) / sc.control_rate;
    const Eigen::Vector2d pos = world_position(path, truth);
    const double chord = (pos - prev_pos).norm();
    prev_pos = pos;
    if (i % gnss_every == 0 && in_zones(sc.gnss_zones, truth.s)) {
      fixes.push_back(make_fix(pos, t, sc, rng));
    }
    if (trigger.step(chord)) {
      if (path.closed() && (pos - start).norm() < suppress_radius) continue;
      const Transform pose = world_pose(path, truth);
      const Transform delta_true = pose.inverse() * prev_kf_pose;
      const double edge_length = delta_true.translation().norm();
      const Transform measured = perturb_delta(delta_true, sc, edge_length, rng);
      stopped = handle_keyframe(t, measured,
                                vo_edge_covariance(sc, measured.translation().norm()));
      prev_kf_pose = pose;
    }
  }
  log.distance_travelled = truth.s;
  return log;
}

// ---------------------------------------------------------------------------
// Log CSV
// ---------------------------------------------------------------------------

std::string to_csv(const RepeatLog& log) {
  std::string out = "t,s,e_lat_true,e_head_true,e_lat_est,e_head_est,gnss,vision,cov_trace,stopped\n";
  for (const RepeatRow& r : log.rows) {
    out += format_double(r.t) + ',' + format_double(r.s) + ',' + format_double(r.e_lat_true) +
           ',' + format_double(r.e_head_true) + ',' + format_double(r.e_lat_est) + ',' +
           format_double(r.e_head_est) + ',' + (r.used_gnss ? "1" : "0") + ',' +
           (r.used_vision ? "1" : "0") + ',' + format_double(r.cov_trace) + ',' +
           (r.stopped ? "1" : "0") + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offline replay
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kReplayHeader =
    "phase,t,m00,m01,m02,m03,m10,m11,m12,m13,m20,m21,m22,m23,fix_frame,fix_count,"
    "fix_t,fix_a,fix_b...";

[[noreturn]] void replay_error(int line, const std::string& what) {
  throw std::runtime_error("replay csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string replay_to_csv(const std::vector<ReplayRecord>& records, const std::string& phase) {
  std::string out = std::string(kReplayHeader) + '\n';
  for (const ReplayRecord& rec : records) {
    out += phase + ',' + format_double(rec.t);
    const Eigen::Matrix3d rot = rec.vo_delta.rotation();
    const Eigen::Vector3d trans = rec.vo_delta.translation();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) out += ',' + format_double(rot(row, col));
      out += ',' + format_double(trans(row));
    }
    out += ",utm," + std::to_string(rec.fixes.size());
    for (const UtmPoint& fix : rec.fixes) {
      out += ',' + format_double(fix.t) + ',' + format_double(fix.easting) + ',' +
             format_double(fix.northing);
    }
    out += '\n';
  }
  return out;
}

std::vector<ReplayRecord> replay_from_csv(const std::string& text, const std::string& phase) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReplayHeader) {
    throw std::runtime_error("replay csv line 1: bad or missing header");
  }
  std::vector<ReplayRecord> records;
  int geodetic_zone = 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 16) replay_error(number, "expected at least 16 columns");
    if (cells[0] != phase) {
      replay_error(number, "expected phase '" + phase + "', found '" + cells[0] + "'");
    }
    ReplayRecord rec;
    Eigen::Matrix3d rot;
    Eigen::Vector3d trans;
    std::size_t fix_count = 0;
    try {
      rec.t = std::stod(cells[1]);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rot(r, c) = std::stod(cells[2 + 4 * r + c]);
        trans(r) = std::stod(cells[5 + 4 * r]);
      }
      fix_count = std::stoul(cells[15]);
    } catch (const std::exception&) {
      replay_error(number, "not numeric");
    }
    if ((rot.transpose() * rot - Eigen::Matrix3d::Identity()).norm() > 1e-6) {
      replay_error(number, "rotation block is not orthonormal");
    }
    rec.vo_delta = Transform(rot, trans);
    const std::string& frame = cells[14];
    if (frame != "utm" && frame != "geodetic") {
      replay_error(number, "fix_frame must be 'utm' or 'geodetic'");
    }
    if (cells.size() != 16 + 3 * fix_count) {
      replay_error(number, "expected " + std::to_string(3 * fix_count) + " fix values");
    }
    if (!(rec.t > prev_t)) replay_error(number, "keyframe time not increasing");
    double prev_fix_t = prev_t;
    for (std::size_t k = 0; k < fix_count; ++k) {
      UtmPoint fix;
      double a = 0.0;
      double b = 0.0;
      try {
        fix.t = std::stod(cells[16 + 3 * k]);
        a = std::stod(cells[17 + 3 * k]);
        b = std::stod(cells[18 + 3 * k]);
      } catch (const std::exception&) {
        replay_error(number, "not numeric");
      }
      if (!(fix.t > prev_fix_t) || fix.t > rec.t) {
        replay_error(number, "fix time outside its keyframe window");
      }
      prev_fix_t = fix.t;
      if (frame == "geodetic") {
        const geodesy::GeodeticPoint p{a, b};
        const geodesy::UtmCoordinate utm =
            geodetic_zone == 0 ? geodesy::to_utm(p) : geodesy::to_utm(p, geodetic_zone);
        geodetic_zone = utm.zone;
        fix.easting = utm.easting;
        fix.northing = utm.northing;
      } else {
        fix.easting = a;
        fix.northing = b;
      }
      rec.fixes.push_back(fix);
    }
    prev_t = rec.t;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ReplayRecord> teach_replay_records(const TeachGraph& graph) {
  std::vector<ReplayRecord> records;
  for (int k = 0; k < graph.size(); ++k) {
    ReplayRecord rec;
    rec.t = graph.keyframe(k).t;
    if (k > 0) rec.vo_delta = graph.privileged_edge(k - 1).transform;
    rec.fixes = graph.keyframe(k).gnss;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ReplayRecord> repeat_replay_records(const RepeatLog& log) {
  std::vector<ReplayRecord> records;
  for (const RepeatRow& row : log.rows) {
    ReplayRecord rec;
    rec.t = row.t;
    rec.vo_delta = row.vo_delta;
    rec.fixes = row.fixes;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ReplayRow> run_replay(const std::vector<ReplayRecord>& teach,
                                  const std::vector<ReplayRecord>& repeat,
                                  const Scenario& config) {
  if (teach.empty()) throw std::invalid_argument("run_replay: empty teach records");
  if (repeat.empty()) throw std::invalid_argument("run_replay: empty repeat records");
  Scenario sc = config;
  validate(sc);

  TeachGraph graph;
  for (const ReplayRecord& rec : teach) {
    graph.add_teach_vertex(rec.t, rec.vo_delta,
                           vo_edge_covariance(sc, rec.vo_delta.translation().norm()), rec.fixes,
                           {});
  }

  Localizer loc(graph, sc);
  std::vector<ReplayRow> rows;
  for (const ReplayRecord& rec : repeat) {
    loc.propagate(rec.t, rec.vo_delta, vo_edge_covariance(sc, rec.vo_delta.translation().norm()),
                  rec.fixes);
    const Localizer::Result res = loc.localize(rec.t, {});
    const geometry::PathOffsets offsets = geometry::path_offsets(res.t_qm);
    ReplayRow row;
    row.t = rec.t;
    row.s = graph.keyframe(res.matched).arc_length;
    row.e_lat_est = offsets.lateral;
    row.e_head_est = offsets.heading;
    row.used_gnss = res.used_gnss;
    row.used_vision = res.used_vision;
    row.cov_trace = res.cov_trace;
    rows.push_back(row);
  }
  return rows;
}

std::string replay_rows_to_csv(const std::vector<ReplayRow>& rows) {
  std::string out = "t,s,e_lat_est,e_head_est,gnss,vision,cov_trace\n";
  for (const ReplayRow& r : rows) {
    out += format_double(r.t) + ',' + format_double(r.s) + ',' + format_double(r.e_lat_est) +
           ',' + format_double(r.e_head_est) + ',' + (r.used_gnss ? "1" : "0") + ',' +
           (r.used_vision ? "1" : "0") + ',' + format_double(r.cov_trace) + '\n';
  }
  return out;
}

RepeatLog repeat_log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "t,s,e_lat_true,e_head_true,e_lat_est,e_head_est,gnss,vision,cov_trace,stopped") {
    throw std::runtime_error("repeat log line 1: bad or missing header");
  }
  RepeatLog log;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) {
      throw std::runtime_error("repeat log line " + std::to_string(number) + ": expected 10 columns");
    }
    RepeatRow r;
    try {
      r.t = std::stod(cells[0]);
      r.s = std::stod(cells[1]);
      r.e_lat_true = std::stod(cells[2]);
      r.e_head_true = std::stod(cells[3]);
      r.e_lat_est = std::stod(cells[4]);
      r.e_head_est = std::stod(cells[5]);
      r.used_gnss = std::stoi(cells[6]) != 0;
      r.used_vision = std::stoi(cells[7]) != 0;
      r.cov_trace = std::stod(cells[8]);
      r.stopped = std::stoi(cells[9]) != 0;
    } catch (const std::exception&) {
      throw std::runtime_error("repeat log line " + std::to_string(number) + ": not numeric");
    }
    if (!log.rows.empty() && !(r.t > log.rows.back().t)) {
      throw std::runtime_error("repeat log line " + std::to_string(number) +
                               ": time does not increase");
    }
    if (r.stopped) log.safety_stopped = true;
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace sim
}  // namespace relnav
