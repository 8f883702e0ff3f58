#pragma once

#include <string>
#include <vector>

#include "relnav/sim.hpp"

namespace relnav {
namespace metrics {

/// True path-tracking error read off at one surveyed arc length.
struct CheckpointMeasurement {
  double arc_length = 0.0;     ///< m
  double lateral_error = 0.0;  ///< m
  double heading_error = 0.0;  ///< rad
};

/// \brief Linearly interpolates the true lateral and heading error at each
///        checkpoint arc length from the log's keyframe rows. Checkpoints the
///        run never reached (a safety stop, or a short log) are omitted.
/// \pre checkpoints sorted ascending.
std::vector<CheckpointMeasurement> checkpoint_errors(const sim::RepeatLog& log,
                                                     const std::vector<double>& checkpoints);

/// One cumulative curve: fraction of the run localized within the last x
/// metres, sampled at multiples of the resolution.
struct CdfCurve {
  std::vector<double> x;         ///< m, ascending
  std::vector<double> fraction;  ///< non-decreasing, in [0, 1]
};

struct LocalizationCdf {
  CdfCurve vision;
  CdfCurve gnss;
  CdfCurve either;
};

/// \brief For every keyframe after the first, measures the arc distance back
///        to the most recent earlier keyframe where the sensor contributed to
///        a converged solve (infinite if it never had), then accumulates the
///        fractions at each threshold. All three curves share one x grid
///        reaching the largest finite gap.
/// \pre resolution > 0.
LocalizationCdf distance_since_localization_cdf(const sim::RepeatLog& log,
                                                double resolution = 0.5);

/// The estimate discontinuity observed at one sensor-availability change.
struct TransitionJump {
  double arc_length = 0.0;   ///< m, where the flag changed
  double step_change = 0.0;  ///< m, |Δ estimated lateral error|
};

/// \brief Scans consecutive rows for changes in either sensor-usage flag and
///        reports the estimated-lateral-error step at each one.
/// \pre at least two rows.
/// \throws std::invalid_argument on a shorter log.
std::vector<TransitionJump> transition_jumps(const sim::RepeatLog& log);

/// CSV serializations, full double precision, one header line each.
std::string checkpoints_to_csv(const std::vector<CheckpointMeasurement>& checkpoints);
std::string cdf_to_csv(const LocalizationCdf& cdf);
std::string transitions_to_csv(const std::vector<TransitionJump>& jumps);

}  // namespace metrics
}  // namespace relnav
