#pragma once

#include "skytrack/metrics.hpp"
#include "skytrack/scenarios.hpp"
#include "skytrack/tracker.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace skytrack {

/// Configuration problem, reported as "<file>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);

  int line() const { return line_; }

 private:
  int line_;
};

enum class ScenarioKind { kClassB, kClassA };

struct FilterSpec {
  std::string label;
  FilterKind kind;
};

struct TrackerSettings {
  double gate = 5.0;
  double deletion_threshold = 10.0;
  std::vector<double> q;  // tracker motion intensities; scenario default when empty
  SinglePointInitiation initiation;
};

/// Everything needed to run a (filter x seed) grid. Schema version 1.
struct RunConfig {
  int version = 1;
  ScenarioKind scenario = ScenarioKind::kClassB;
  ClassBConfig class_b;
  ClassAConfig class_a;
  TrackerSettings tracker;
  std::vector<FilterSpec> filters;
  std::vector<std::uint64_t> seeds;
  OspaParams ospa;
  std::optional<double> siap_cutoff;  // defaults to ospa.c
  std::optional<std::filesystem::path> output_dir;
  bool trace = false;
  int workers = 1;
  std::filesystem::path source;

  double cutoff() const { return siap_cutoff.value_or(ospa.c); }
};

inline constexpr int kConfigVersion = 1;

RunConfig parse_config(const std::string& text, const std::filesystem::path& source);
RunConfig load_config(const std::filesystem::path& path);

/// Tracker configuration implied by the scenario and tracker settings.
TrackerConfig make_tracker_config(const RunConfig& config);

/// Truth, detections and scan times for one seed.
struct ScenarioData {
  std::vector<GroundTruthPath> truths;
  std::vector<Scan> scans;
  std::vector<double> times;
  std::vector<GaussianState> priors;  // Class-B only
};

ScenarioData build_scenario(const RunConfig& config, std::uint64_t seed);

struct RunSummary {
  double ospa_mean = 0.0;
  double cov_norm_sum_mean = 0.0;
  std::optional<double> siap_ambiguity;
  std::optional<double> siap_position_accuracy;
  int track_deletions = 0;
  int repairs = 0;
  int rejections = 0;
};

struct RunResult {
  std::string label;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricSeries series;
  // per-scan tracker bookkeeping aligned with series.times
  std::vector<int> deletions;
  std::vector<int> repairs;
  std::vector<int> rejections;
  RunSummary summary;
};

/// One tracker run plus metrics; never throws for numerical trouble inside
/// the run (reported through `ok`/`error`).
RunResult execute_run(const RunConfig& config, const FilterSpec& filter, std::uint64_t seed,
                      const ScenarioData& scenario, std::vector<ScanLog>* trace = nullptr);

/// Summary values computed from the per-scan series (the same values written
/// to the per-run CSV).
RunSummary summarize(const RunResult& run);

struct ExperimentOutcome {
  std::vector<RunResult> runs;  // filter-major, seed-minor order
  std::filesystem::path output_dir;
  int exit_code = 0;
};

/// Runs the grid and writes metrics_<label>_seed<seed>.csv, runs.csv,
/// summary.csv and, when tracing, trace_<label>_seed<seed>.ndjson.
ExperimentOutcome run_experiment(const RunConfig& config, const std::filesystem::path& output_dir);

/// Writes truth_seed<seed>.csv and detections_seed<seed>.csv.
void write_simulation(const RunConfig& config, const std::filesystem::path& output_dir);

std::string metric_csv(const RunResult& run);
std::string format_double(double v);

/// Output directory: explicit override, then the config, then
/// $SKYTRACK_OUTPUT_ROOT/<config stem>, then ./skytrack_out/<config stem>.
std::filesystem::path resolve_output_dir(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& override_dir);

}  // namespace skytrack
