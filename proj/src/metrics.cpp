#include "relnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace relnav {
namespace metrics {
namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

/// Arc distance from each row back to the previous row where the flag held;
/// the first row has no "previous" and is not a sample.
template <typename FlagFn>
std::vector<double> gaps(const sim::RepeatLog& log, FlagFn flag) {
  std::vector<double> out;
  double last_used = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    if (k > 0) {
      out.push_back(std::isnan(last_used) ? std::numeric_limits<double>::infinity()
                                          : log.rows[k].s - last_used);
    }
    if (flag(log.rows[k])) last_used = log.rows[k].s;
  }
  return out;
}

CdfCurve curve_from_gaps(const std::vector<double>& gap, const std::vector<double>& grid) {
  CdfCurve curve;
  curve.x = grid;
  curve.fraction.reserve(grid.size());
  for (double x : grid) {
    std::size_t within = 0;
    for (double d : gap) {
      if (d <= x + 1e-12) ++within;
    }
    curve.fraction.push_back(gap.empty() ? 0.0
                                         : static_cast<double>(within) /
                                               static_cast<double>(gap.size()));
  }
  return curve;
}

}  // namespace

std::vector<CheckpointMeasurement> checkpoint_errors(const sim::RepeatLog& log,
                                                     const std::vector<double>& checkpoints) {
  std::vector<CheckpointMeasurement> out;
  for (double c : checkpoints) {
    bool found = false;
    CheckpointMeasurement m;
    m.arc_length = c;
    for (std::size_t k = 0; k + 1 < log.rows.size(); ++k) {
      const sim::RepeatRow& a = log.rows[k];
      const sim::RepeatRow& b = log.rows[k + 1];
      if (!(a.s <= c && c <= b.s) || !(b.s > a.s)) continue;
      const double u = (c - a.s) / (b.s - a.s);
      m.lateral_error = a.e_lat_true + u * (b.e_lat_true - a.e_lat_true);
      m.heading_error = a.e_head_true + u * (b.e_head_true - a.e_head_true);
      found = true;
      break;
    }
    if (!found && log.rows.size() == 1 && log.rows.front().s == c) {
      m.lateral_error = log.rows.front().e_lat_true;
      m.heading_error = log.rows.front().e_head_true;
      found = true;
    }
    if (found) out.push_back(m);
  }
  return out;
}

LocalizationCdf distance_since_localization_cdf(const sim::RepeatLog& log, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("cdf resolution must be positive");
  const std::vector<double> vision_gaps =
      gaps(log, [](const sim::RepeatRow& r) { return r.used_vision; });
  const std::vector<double> gnss_gaps =
      gaps(log, [](const sim::RepeatRow& r) { return r.used_gnss; });
  const std::vector<double> either_gaps =
      gaps(log, [](const sim::RepeatRow& r) { return r.used_gnss || r.used_vision; });

  double max_gap = 0.0;
  for (const std::vector<double>* g : {&vision_gaps, &gnss_gaps, &either_gaps}) {
    for (double d : *g) {
      if (std::isfinite(d)) max_gap = std::max(max_gap, d);
    }
  }
  std::vector<double> grid;
  const int steps = std::max(1, static_cast<int>(std::ceil(max_gap / resolution - 1e-9)));
  for (int i = 1; i <= steps; ++i) grid.push_back(resolution * i);

  LocalizationCdf cdf;
  cdf.vision = curve_from_gaps(vision_gaps, grid);
  cdf.gnss = curve_from_gaps(gnss_gaps, grid);
  cdf.either = curve_from_gaps(either_gaps, grid);
  return cdf;
}

std::vector<TransitionJump> transition_jumps(const sim::RepeatLog& log) {
  if (log.rows.size() < 2) {
    throw std::invalid_argument("transition_jumps needs at least two rows");
  }
  std::vector<TransitionJump> out;
  for (std::size_t k = 1; k < log.rows.size(); ++k) {
    const sim::RepeatRow& prev = log.rows[k - 1];
    const sim::RepeatRow& row = log.rows[k];
    if (row.used_gnss != prev.used_gnss || row.used_vision != prev.used_vision) {
      out.push_back(TransitionJump{row.s, std::abs(row.e_lat_est - prev.e_lat_est)});
    }
  }
  return out;
}

std::string checkpoints_to_csv(const std::vector<CheckpointMeasurement>& checkpoints) {
  std::string out = "arc_length,lateral_error,heading_error\n";
  for (const CheckpointMeasurement& m : checkpoints) {
    out += format_double(m.arc_length) + ',' + format_double(m.lateral_error) + ',' +
           format_double(m.heading_error) + '\n';
  }
  return out;
}

std::string cdf_to_csv(const LocalizationCdf& cdf) {
  std::string out = "sensor,x,fraction\n";
  const auto emit = [&out](const char* sensor, const CdfCurve& curve) {
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
      out += std::string(sensor) + ',' + format_double(curve.x[i]) + ',' +
             format_double(curve.fraction[i]) + '\n';
    }
  };
  emit("vision", cdf.vision);
  emit("gnss", cdf.gnss);
  emit("either", cdf.either);
  return out;
}

std::string transitions_to_csv(const std::vector<TransitionJump>& jumps) {
  std::string out = "arc_length,step_change\n";
  for (const TransitionJump& j : jumps) {
    out += format_double(j.arc_length) + ',' + format_double(j.step_change) + '\n';
  }
  return out;
}

}  // namespace metrics
}  // namespace relnav
