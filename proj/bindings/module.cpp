/// Python bindings for the teach-and-repeat workflow: scenario handling,
/// teaching, repeating, offline replay, geodesy, and report metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "relnav/geodesy.hpp"
#include "relnav/mapgraph.hpp"
#include "relnav/metrics.hpp"
#include "relnav/sim.hpp"

namespace py = pybind11;

using relnav::mapgraph::TeachGraph;
using relnav::sim::RepeatLog;
using relnav::sim::RepeatRow;
using relnav::sim::Scenario;

PYBIND11_MODULE(_relnav, m) {
  m.doc() =
      "Relative GNSS-vision fusion for teach-and-repeat navigation: teach a "
      "relative map, repeat against it, replay recorded drives, and compute "
      "report metrics. Scenario JSON is the full configuration surface; the "
      "bound attributes cover the commonly swept fields.";

  py::class_<Scenario>(m, "Scenario",
                       "Complete description of one simulated experiment. Build "
                       "one with Scenario.from_json; the JSON schema is the "
                       "authoritative configuration surface.")
      .def_static(
          "from_json",
          [](const std::string& text) { return relnav::sim::scenario_from_json(text); },
          py::arg("text"), "Parses and validates a scenario from its JSON description.")
      .def("to_json", [](const Scenario& sc) { return relnav::sim::scenario_to_json(sc); },
           "Canonical JSON; parsing it back reproduces the scenario.")
      .def("hash", [](const Scenario& sc) { return relnav::sim::scenario_hash(sc); },
           "Digest of every field except the seed; a teach map only serves "
           "repeat runs whose scenario hashes identically.")
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("speed", &Scenario::speed)
      .def_readwrite("keyframe_spacing", &Scenario::keyframe_spacing)
      .def_readwrite("gnss_sigma", &Scenario::gnss_sigma)
      .def_readwrite("gnss_outlier_rate", &Scenario::gnss_outlier_rate)
      .def_readwrite("vo_sigma_trans", &Scenario::vo_sigma_trans)
      .def_readwrite("vo_sigma_rot", &Scenario::vo_sigma_rot)
      .def_readwrite("landmarks_per_keyframe", &Scenario::landmarks_per_keyframe)
      .def_readwrite("landmark_sigma", &Scenario::landmark_sigma)
      .def_readwrite("uncertainty_stop_threshold", &Scenario::uncertainty_stop_threshold)
      .def_readwrite("checkpoints", &Scenario::checkpoints);

  py::class_<TeachGraph>(m, "TeachGraph",
                         "Relative map recorded while driving a route once: "
                         "keyframes chained by privileged odometry edges, with "
                         "raw GNSS fixes and landmarks attached.")
      .def_static(
          "from_json",
          [](const std::string& text) {
            std::string hash;
            TeachGraph graph = relnav::mapgraph::from_json(text, &hash);
            return py::make_tuple(std::move(graph), hash);
          },
          py::arg("text"),
          "Parses a serialized graph; returns (graph, scenario_hash) where the "
          "hash is the hex digest stored when the graph was written.")
      .def("to_json",
           [](const TeachGraph& g, const std::string& scenario_hash) {
             return relnav::mapgraph::to_json(g, scenario_hash);
           },
           py::arg("scenario_hash") = std::string(),
           "Serializes the graph; an optional scenario hash travels with it.")
      .def("__len__", &TeachGraph::size)
      .def_property_readonly("total_arc_length", &TeachGraph::total_arc_length,
                             "Metres of taught route covered by the keyframe chain.");

  py::class_<RepeatRow>(m, "RepeatRow",
                        "One repeat keyframe: where the vehicle really was and "
                        "what the localizer estimated.")
      .def_readonly("t", &RepeatRow::t)
      .def_readonly("s", &RepeatRow::s)
      .def_readonly("e_lat_true", &RepeatRow::e_lat_true)
      .def_readonly("e_head_true", &RepeatRow::e_head_true)
      .def_readonly("e_lat_est", &RepeatRow::e_lat_est)
      .def_readonly("e_head_est", &RepeatRow::e_head_est)
      .def_readonly("used_gnss", &RepeatRow::used_gnss)
      .def_readonly("used_vision", &RepeatRow::used_vision)
      .def_readonly("cov_trace", &RepeatRow::cov_trace)
      .def_readonly("stopped", &RepeatRow::stopped);

  py::class_<RepeatLog>(m, "RepeatLog", "Every keyframe row of one repeat run.")
      .def_static(
          "from_csv",
          [](const std::string& text) { return relnav::sim::repeat_log_from_csv(text); },
          py::arg("text"), "Rebuilds the CSV-visible part of a log.")
      .def("to_csv", [](const RepeatLog& log) { return relnav::sim::to_csv(log); },
           "Full-precision CSV; rereading reproduces the values bitwise.")
      .def_readonly("rows", &RepeatLog::rows)
      .def_readonly("safety_stopped", &RepeatLog::safety_stopped)
      .def_readonly("distance_travelled", &RepeatLog::distance_travelled);

  m.def("run_teach", &relnav::sim::run_teach, py::arg("scenario"),
        "Drives the scenario path once and records the relative map.");
  m.def("run_repeat", &relnav::sim::run_repeat, py::arg("scenario"), py::arg("graph"),
        "Retraces the taught path, localizing against the map at every keyframe.");

  m.def(
      "teach_replay_csv",
      [](const TeachGraph& graph) {
        return relnav::sim::replay_to_csv(relnav::sim::teach_replay_records(graph), "teach");
      },
      py::arg("graph"), "The teach drive serialized as a recorded-drive CSV.");
  m.def(
      "repeat_replay_csv",
      [](const RepeatLog& log) {
        return relnav::sim::replay_to_csv(relnav::sim::repeat_replay_records(log), "repeat");
      },
      py::arg("log"), "A repeat drive serialized as a recorded-drive CSV.");
  m.def(
      "replay_csv",
      [](const std::string& teach_csv, const std::string& repeat_csv, const Scenario& config) {
        const auto teach = relnav::sim::replay_from_csv(teach_csv, "teach");
        const auto repeat = relnav::sim::replay_from_csv(repeat_csv, "repeat");
        return relnav::sim::replay_rows_to_csv(relnav::sim::run_replay(teach, repeat, config));
      },
      py::arg("teach_csv"), py::arg("repeat_csv"), py::arg("config"),
      "Re-localizes recorded teach and repeat drives offline (GNSS and odometry "
      "only) and returns the estimated-error CSV.");

  py::class_<relnav::metrics::CheckpointMeasurement>(m, "CheckpointMeasurement")
      .def_readonly("arc_length", &relnav::metrics::CheckpointMeasurement::arc_length)
      .def_readonly("lateral_error", &relnav::metrics::CheckpointMeasurement::lateral_error)
      .def_readonly("heading_error", &relnav::metrics::CheckpointMeasurement::heading_error);
  py::class_<relnav::metrics::CdfCurve>(m, "CdfCurve")
      .def_readonly("x", &relnav::metrics::CdfCurve::x)
      .def_readonly("fraction", &relnav::metrics::CdfCurve::fraction);
  py::class_<relnav::metrics::LocalizationCdf>(m, "LocalizationCdf")
      .def_readonly("vision", &relnav::metrics::LocalizationCdf::vision)
      .def_readonly("gnss", &relnav::metrics::LocalizationCdf::gnss)
      .def_readonly("either", &relnav::metrics::LocalizationCdf::either);
  py::class_<relnav::metrics::TransitionJump>(m, "TransitionJump")
      .def_readonly("arc_length", &relnav::metrics::TransitionJump::arc_length)
      .def_readonly("step_change", &relnav::metrics::TransitionJump::step_change);

  m.def("checkpoint_errors", &relnav::metrics::checkpoint_errors, py::arg("log"),
        py::arg("checkpoints"),
        "True lateral and heading error interpolated at each checkpoint arc length.");
  m.def("distance_since_localization_cdf", &relnav::metrics::distance_since_localization_cdf,
        py::arg("log"), py::arg("resolution") = 0.5,
        "Fraction of keyframes localized within the last x metres, per sensor "
        "and for either sensor.");
  m.def("transition_jumps", &relnav::metrics::transition_jumps, py::arg("log"),
        "Estimated-lateral-error steps at sensor-availability changes.");

  py::class_<relnav::geodesy::UtmCoordinate>(m, "UtmCoordinate")
      .def_readonly("zone", &relnav::geodesy::UtmCoordinate::zone)
      .def_readonly("north", &relnav::geodesy::UtmCoordinate::north)
      .def_readonly("easting", &relnav::geodesy::UtmCoordinate::easting)
      .def_readonly("northing", &relnav::geodesy::UtmCoordinate::northing);
  m.def(
      "to_utm",
      [](double latitude_deg, double longitude_deg) {
        return relnav::geodesy::to_utm({latitude_deg, longitude_deg});
      },
      py::arg("latitude_deg"), py::arg("longitude_deg"),
      "Projects a WGS84 point into its natural UTM zone.");
  m.def(
      "to_utm",
      [](double latitude_deg, double longitude_deg, int zone) {
        return relnav::geodesy::to_utm({latitude_deg, longitude_deg}, zone);
      },
      py::arg("latitude_deg"), py::arg("longitude_deg"), py::arg("zone"),
      "Projects a WGS84 point into a fixed zone, so one dataset never "
      "straddles a zone boundary.");
}
