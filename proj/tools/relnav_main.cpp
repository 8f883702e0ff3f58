/// Command-line front end: teach a map from a scenario, repeat against it in
/// batch, replay recorded drives offline, and aggregate report CSVs.
///
/// Exit codes: 0 success (a safety stop is a result, not a failure),
/// 1 usage or validation error, 2 file I/O error.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "relnav/mapgraph.hpp"
#include "relnav/metrics.hpp"
#include "relnav/sim.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using relnav::mapgraph::TeachGraph;
using relnav::sim::RepeatLog;
using relnav::sim::Scenario;

/// Failure to read or write a file; mapped to exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write '" + path + "'");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string hash_hex(std::uint64_t h) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

/// Applies one key=value override to the scenario JSON before validation.
/// The key is a dot path into the document (gnss_sigma, utm_frame.rotation);
/// the value is parsed as JSON when possible (numbers, arrays, booleans) and
/// kept as a bare string otherwise.
void apply_override(json& doc, const std::string& entry) {
  const std::size_t eq = entry.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("config override '" + entry + "' must look like key=value");
  }
  const std::string key = entry.substr(0, eq);
  const std::string value = entry.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part =
        dot == std::string::npos ? key.substr(start) : key.substr(start, dot - start);
    if (part.empty()) {
      throw std::invalid_argument("config override key '" + key + "' has an empty path segment");
    }
    if (!node->is_object() && !node->is_null()) {
      throw std::invalid_argument("config override key '" + key +
                                  "' descends into a non-object value");
    }
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// Loads, overrides, and validates the scenario a command will run with.
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return relnav::sim::scenario_from_json(doc.dump());
}

/// Writes the three aggregate report CSVs (checkpoints, localization CDFs,
/// transition jumps), one block of rows per run, and returns the count of
/// checkpoint measurements that went into the means printed by callers.
struct ReportSummary {
  std::size_t checkpoint_count = 0;
  double mean_abs_lateral = 0.0;   ///< m
  double mean_abs_heading = 0.0;   ///< rad
};

ReportSummary write_reports(const std::string& out_dir, const Scenario& sc,
                            const std::vector<RepeatLog>& logs) {
  std::string checkpoints = "run,arc_length,lateral_error,heading_error\n";
  std::string cdf = "run,sensor,x,fraction\n";
  std::string transitions = "run,arc_length,step_change\n";
  ReportSummary summary;
  double lat_sum = 0.0;
  double head_sum = 0.0;
  for (std::size_t run = 0; run < logs.size(); ++run) {
    const std::string run_id = std::to_string(run);
    for (const auto& m : relnav::metrics::checkpoint_errors(logs[run], sc.checkpoints)) {
      checkpoints += run_id + ',' + format_double(m.arc_length) + ',' +
                     format_double(m.lateral_error) + ',' + format_double(m.heading_error) + '\n';
      lat_sum += std::abs(m.lateral_error);
      head_sum += std::abs(m.heading_error);
      ++summary.checkpoint_count;
    }
    if (!logs[run].rows.empty()) {
      const auto curves = relnav::metrics::distance_since_localization_cdf(logs[run]);
      const auto emit = [&cdf, &run_id](const char* sensor,
                                        const relnav::metrics::CdfCurve& curve) {
        for (std::size_t i = 0; i < curve.x.size(); ++i) {
          cdf += run_id + ',' + sensor + ',' + format_double(curve.x[i]) + ',' +
                 format_double(curve.fraction[i]) + '\n';
        }
      };
      emit("vision", curves.vision);
      emit("gnss", curves.gnss);
      emit("either", curves.either);
    }
    if (logs[run].rows.size() >= 2) {
      for (const auto& j : relnav::metrics::transition_jumps(logs[run])) {
        transitions += run_id + ',' + format_double(j.arc_length) + ',' +
                       format_double(j.step_change) + '\n';
      }
    }
  }
  if (summary.checkpoint_count > 0) {
    summary.mean_abs_lateral = lat_sum / static_cast<double>(summary.checkpoint_count);
    summary.mean_abs_heading = head_sum / static_cast<double>(summary.checkpoint_count);
  }
  write_file((fs::path(out_dir) / "checkpoints.csv").string(), checkpoints);
  write_file((fs::path(out_dir) / "cdf.csv").string(), cdf);
  write_file((fs::path(out_dir) / "transitions.csv").string(), transitions);
  return summary;
}

int cmd_teach(const std::string& scenario_path, const std::string& out_dir, bool export_replay,
              const std::vector<std::string>& overrides) {
  const Scenario sc = load_scenario(scenario_path, overrides);
  const TeachGraph graph = relnav::sim::run_teach(sc);
  int covered = 0;
  for (const auto& kf : graph.keyframes()) {
    if (!kf.gnss.empty()) ++covered;
  }
  const double coverage =
      graph.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(graph.size());
  ensure_dir(out_dir);
  const std::string graph_path = (fs::path(out_dir) / "graph.json").string();
  write_file(graph_path,
             relnav::mapgraph::to_json(graph, hash_hex(relnav::sim::scenario_hash(sc))));
  if (export_replay) {
    write_file((fs::path(out_dir) / "teach_replay.csv").string(),
               relnav::sim::replay_to_csv(relnav::sim::teach_replay_records(graph), "teach"));
  }
  std::printf("vertices: %d\n", graph.size());
  std::printf("gnss_coverage: %.6g\n", coverage);
  std::printf("graph: %s\n", graph_path.c_str());
  return 0;
}

int cmd_repeat(const std::string& scenario_path, const std::string& graph_path, int runs,
               bool seed_given, std::uint64_t seed, int jobs, const std::string& out_dir,
               bool export_replay, const std::vector<std::string>& overrides) {
  Scenario sc = load_scenario(scenario_path, overrides);
  if (seed_given) sc.seed = seed;
  std::string graph_hash;
  const TeachGraph graph = relnav::mapgraph::from_json(read_file(graph_path), &graph_hash);
  const std::string expected = hash_hex(relnav::sim::scenario_hash(sc));
  if (graph_hash != expected) {
    std::fprintf(stderr,
                 "error: graph/scenario hash mismatch: graph carries %s but the scenario "
                 "hashes to %s; this map was taught from a different scenario\n",
                 graph_hash.c_str(), expected.c_str());
    return 1;
  }

  std::vector<RepeatLog> logs;
  logs.reserve(static_cast<std::size_t>(runs));
  const int wave_size = std::max(1, jobs);
  for (int base = 0; base < runs; base += wave_size) {
    const int hi = std::min(runs, base + wave_size);
    std::vector<std::future<RepeatLog>> wave;
    wave.reserve(static_cast<std::size_t>(hi - base));
    for (int r = base; r < hi; ++r) {
      wave.push_back(std::async(std::launch::async, [&sc, &graph, r]() {
        Scenario run_sc = sc;
        run_sc.seed = sc.seed + static_cast<std::uint64_t>(r);
        return relnav::sim::run_repeat(run_sc, graph);
      }));
    }
    for (auto& f : wave) logs.push_back(f.get());
  }

  ensure_dir(out_dir);
  int stops = 0;
  for (std::size_t r = 0; r < logs.size(); ++r) {
    char name[40];
    std::snprintf(name, sizeof(name), "run_%03zu.csv", r);
    write_file((fs::path(out_dir) / name).string(), relnav::sim::to_csv(logs[r]));
    if (export_replay) {
      std::snprintf(name, sizeof(name), "run_%03zu_replay.csv", r);
      write_file((fs::path(out_dir) / name).string(),
                 relnav::sim::replay_to_csv(relnav::sim::repeat_replay_records(logs[r]),
                                            "repeat"));
    }
    if (logs[r].safety_stopped) ++stops;
  }
  const ReportSummary summary = write_reports(out_dir, sc, logs);
  std::printf("runs: %d\n", runs);
  std::printf("safety_stops: %d\n", stops);
  std::printf("checkpoint_mean_abs_lateral_m: %.6g\n", summary.mean_abs_lateral);
  std::printf("checkpoint_mean_abs_heading_deg: %.6g\n",
              summary.mean_abs_heading * 180.0 / 3.14159265358979323846);
  std::printf("reports: %s\n", out_dir.c_str());
  return 0;
}

int cmd_replay(const std::string& teach_path, const std::string& repeat_path,
               const std::string& scenario_path, const std::string& out_dir,
               const std::vector<std::string>& overrides) {
  const Scenario sc = load_scenario(scenario_path, overrides);
  std::vector<relnav::sim::ReplayRecord> teach;
  std::vector<relnav::sim::ReplayRecord> repeat;
  try {
    teach = relnav::sim::replay_from_csv(read_file(teach_path), "teach");
  } catch (const IoError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(teach_path + ": " + e.what());
  }
  try {
    repeat = relnav::sim::replay_from_csv(read_file(repeat_path), "repeat");
  } catch (const IoError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(repeat_path + ": " + e.what());
  }
  const auto rows = relnav::sim::run_replay(teach, repeat, sc);
  ensure_dir(out_dir);
  const std::string out_path = (fs::path(out_dir) / "replay.csv").string();
  write_file(out_path, relnav::sim::replay_rows_to_csv(rows));
  std::printf("rows: %zu\n", rows.size());
  std::printf("replay: %s\n", out_path.c_str());
  return 0;
}

int cmd_report(const std::string& scenario_path, const std::vector<std::string>& log_paths,
               const std::string& out_dir, const std::vector<std::string>& overrides) {
  const Scenario sc = load_scenario(scenario_path, overrides);
  std::vector<RepeatLog> logs;
  logs.reserve(log_paths.size());
  for (const std::string& path : log_paths) {
    try {
      logs.push_back(relnav::sim::repeat_log_from_csv(read_file(path)));
    } catch (const IoError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
  }
  ensure_dir(out_dir);
  const ReportSummary summary = write_reports(out_dir, sc, logs);
  std::printf("logs: %zu\n", logs.size());
  std::printf("checkpoint_mean_abs_lateral_m: %.6g\n", summary.mean_abs_lateral);
  std::printf("checkpoint_mean_abs_heading_deg: %.6g\n",
              summary.mean_abs_heading * 180.0 / 3.14159265358979323846);
  std::printf("reports: %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative GNSS-vision teach-and-repeat: simulate, replay, report"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string graph_path;
  std::string teach_csv_path;
  std::string repeat_csv_path;
  std::vector<std::string> log_paths;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int runs = 1;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool export_replay = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", out_dir, "Directory for output files")
        ->capture_default_str();
    cmd->add_option("--config-override", overrides,
                    "key=value override applied to the scenario JSON; the key is a dot "
                    "path, the value is parsed as JSON (repeatable)")
        ->allow_extra_args(false);
  };

  CLI::App* teach = app.add_subcommand(
      "teach", "Drive the scenario once and write the relative map as graph.json");
  teach->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  teach->add_flag("--export-replay", export_replay,
                  "Also write the drive as teach_replay.csv for offline replay");
  add_common(teach);

  CLI::App* repeat = app.add_subcommand(
      "repeat", "Retrace a taught map: per-run log CSVs plus aggregate reports");
  repeat->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  repeat->add_option("graph", graph_path, "Teach graph JSON written by 'teach'")->required();
  repeat->add_option("--runs", runs, "Number of repeat runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  CLI::Option* seed_opt =
      repeat->add_option("--seed", seed, "Base seed; run r uses seed + r");
  repeat->add_option("--jobs", jobs, "Run this many repeats concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  repeat->add_flag("--export-replay", export_replay,
                   "Also write each drive as run_NNN_replay.csv for offline replay");
  add_common(repeat);

  CLI::App* replay = app.add_subcommand(
      "replay", "Re-localize recorded teach and repeat drives offline (GNSS + odometry)");
  replay->add_option("teach_csv", teach_csv_path, "Recorded teach drive CSV")->required();
  replay->add_option("repeat_csv", repeat_csv_path, "Recorded repeat drive CSV")->required();
  replay->add_option("scenario", scenario_path, "Scenario JSON supplying the sensor models")
      ->required();
  add_common(replay);

  CLI::App* report = app.add_subcommand(
      "report", "Aggregate checkpoint, CDF, and transition reports from repeat log CSVs");
  report->add_option("scenario", scenario_path, "Scenario JSON supplying the checkpoints")
      ->required();
  report->add_option("logs", log_paths, "Repeat log CSVs, one per run")->required();
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (teach->parsed()) return cmd_teach(scenario_path, out_dir, export_replay, overrides);
    if (repeat->parsed()) {
      return cmd_repeat(scenario_path, graph_path, runs, seed_opt->count() > 0, seed, jobs,
                        out_dir, export_replay, overrides);
    }
    if (replay->parsed()) {
      return cmd_replay(teach_csv_path, repeat_csv_path, scenario_path, out_dir, overrides);
    }
    if (report->parsed()) return cmd_report(scenario_path, log_paths, out_dir, overrides);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
