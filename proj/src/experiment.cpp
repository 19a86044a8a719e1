#include "skytrack/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace skytrack {

namespace {

// Tracker process noise defaults (see README).
constexpr double kClassBTrackerQ = 1000.0;
const std::vector<double> kClassATrackerQ = {10.0, 10.0, 5.0};

std::uint64_t tracker_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string run_stem(const RunResult& run) {
  return run.label + "_seed" + std::to_string(run.seed);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

nlohmann::json scan_json(const ScanLog& log) {
  nlohmann::json j;
  j["time"] = log.time;
  auto& entries = j["tracks"] = nlohmann::json::array();
  for (const auto& e : log.entries) {
    entries.push_back({{"track", e.track_id},
                       {"detection", e.detection},
                       {"distance", e.distance},
                       {"rejected", e.rejected},
                       {"repaired", e.repaired},
                       {"numerical_failure", e.numerical_failure},
                       {"cov_frobenius", e.cov_frobenius}});
  }
  j["initiated"] = log.initiated;
  j["confirmed"] = log.confirmed;
  j["deleted"] = log.deleted;
  j["dropped_tentative"] = log.dropped_tentative;
  j["repairs"] = log.repairs;
  j["rejections"] = log.rejections;
  j["numerical_failures"] = log.numerical_failures;
  return j;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[400];
  const double mag = std::abs(v);
  const auto res = mag >= 1e-4 && mag < 1e16
                       ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed)
                       : std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

TrackerConfig make_tracker_config(const RunConfig& config) {
  TrackerConfig tc;
  tc.gate = config.tracker.gate;
  tc.deletion_threshold = config.tracker.deletion_threshold;
  if (config.scenario == ScenarioKind::kClassB) {
    const auto& q = config.tracker.q;
    tc.motion = q.empty() ? MotionModel::ncv_2d(kClassBTrackerQ, kClassBTrackerQ)
                          : MotionModel::ncv_2d(q.at(0), q.at(1));
    tc.initiation = PriorInitiation{};
  } else {
    const auto& q = config.tracker.q.empty() ? kClassATrackerQ : config.tracker.q;
    tc.motion = MotionModel::cv_3d(q.at(0), q.at(1), q.at(2));
    tc.initiation = config.tracker.initiation;
  }
  return tc;
}

ScenarioData build_scenario(const RunConfig& config, std::uint64_t seed) {
  ScenarioData data;
  if (config.scenario == ScenarioKind::kClassB) {
    ClassBScenario sc = simulate_class_b(config.class_b, seed);
    data.truths = std::move(sc.truths);
    data.scans = std::move(sc.scans);
    data.priors = std::move(sc.priors);
  } else {
    const geodesy::LocalFrame frame(config.class_a.scene_origin());
    AdsbData adsb = load_adsb(config.class_a.adsb_file, frame, config.class_a.scan_interval,
                              config.class_a.max_gap);
    data.scans = simulate_detections(adsb.paths, adsb.grid, config.class_a, frame, seed);
    data.truths = std::move(adsb.paths);
  }
  for (const auto& scan : data.scans) data.times.push_back(scan.time);
  return data;
}

RunSummary summarize(const RunResult& run) {
  RunSummary s;
  s.ospa_mean = run.series.mean_ospa();
  s.cov_norm_sum_mean = run.series.mean_cov_norm_sum();
  s.siap_ambiguity = run.series.ambiguity();
  s.siap_position_accuracy = run.series.position_accuracy();
  for (int d : run.deletions) s.track_deletions += d;
  for (int r : run.repairs) s.repairs += r;
  for (int r : run.rejections) s.rejections += r;
  return s;
}

RunResult execute_run(const RunConfig& config, const FilterSpec& filter, std::uint64_t seed,
                      const ScenarioData& scenario, std::vector<ScanLog>* trace) {
  RunResult result;
  result.label = filter.label;
  result.seed = seed;
  try {
    TrackerConfig tc = make_tracker_config(config);
    if (config.scenario == ScenarioKind::kClassB) tc.initiation = PriorInitiation{scenario.priors};
    TrackerRun run = run_tracker(scenario.scans, tc, filter.kind, tracker_seed(seed));
    result.series = compute_metrics(scenario.truths, run, scenario.times, config.ospa, config.cutoff());
    for (const auto& log : run.log) {
      result.deletions.push_back(static_cast<int>(log.deleted.size()));
      result.repairs.push_back(log.repairs);
      result.rejections.push_back(log.rejections);
    }
    result.summary = summarize(result);
    result.ok = true;
    if (trace) *trace = std::move(run.log);
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  return result;
}

std::string metric_csv(const RunResult& run) {
  std::string out = "time,metric,tracker_label,value\n";
  const auto row = [&](double t, const char* metric, const std::string& value) {
    out += format_double(t);
    out += ',';
    out += metric;
    out += ',';
    out += run.label;
    out += ',';
    out += value;
    out += '\n';
  };
  const MetricSeries& s = run.series;
  for (size_t k = 0; k < s.times.size(); ++k) {
    const double t = s.times[k];
    const AssociationCounts& a = s.association[k];
    row(t, "ospa", format_double(s.ospa[k]));
    row(t, "cov_norm_sum", format_double(s.cov_norm_sum[k]));
    row(t, "n_tracks", std::to_string(s.n_tracks[k]));
    row(t, "n_associated_tracks", std::to_string(a.associated_tracks));
    row(t, "n_associated_truths", std::to_string(a.associated_truths));
    if (a.associated_truths > 0)
      row(t, "siap_ambiguity",
          format_double(static_cast<double>(a.associated_tracks) / a.associated_truths));
    row(t, "pa_sum", format_double(a.error_sum()));
    if (a.associated_tracks > 0)
      row(t, "siap_position_accuracy", format_double(a.error_sum() / a.associated_tracks));
    if (k < run.deletions.size()) {
      row(t, "track_deletions", std::to_string(run.deletions[k]));
      row(t, "repairs", std::to_string(run.repairs[k]));
      row(t, "rejections", std::to_string(run.rejections[k]));
    }
  }
  return out;
}

std::filesystem::path resolve_output_dir(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& override_dir) {
  if (override_dir) return *override_dir;
  if (config.output_dir) return *config.output_dir;
  const std::string stem = config.source.empty() ? "run" : config.source.stem().string();
  if (const char* root = std::getenv("SKYTRACK_OUTPUT_ROOT"); root && *root)
    return std::filesystem::path(root) / stem;
  return std::filesystem::path("skytrack_out") / stem;
}

ExperimentOutcome run_experiment(const RunConfig& config, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);

  std::vector<ScenarioData> scenarios;
  scenarios.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) scenarios.push_back(build_scenario(config, seed));

  struct Job {
    size_t filter;
    size_t seed;
  };
  std::vector<Job> jobs;
  for (size_t f = 0; f < config.filters.size(); ++f)
    for (size_t s = 0; s < config.seeds.size(); ++s) jobs.push_back({f, s});

  ExperimentOutcome outcome;
  outcome.output_dir = output_dir;
  outcome.runs.resize(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex io_error_mutex;
  std::string io_error;

  const auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      std::vector<ScanLog> trace;
      RunResult result = execute_run(config, config.filters[job.filter], config.seeds[job.seed],
                                     scenarios[job.seed], config.trace ? &trace : nullptr);
      try {
        if (result.ok) write_file(output_dir / ("metrics_" + run_stem(result) + ".csv"), metric_csv(result));
        if (result.ok && config.trace) {
          std::string text;
          for (const auto& log : trace) {
            text += scan_json(log).dump();
            text += '\n';
          }
          write_file(output_dir / ("trace_" + run_stem(result) + ".ndjson"), text);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(io_error_mutex);
        if (io_error.empty()) io_error = e.what();
      }
      outcome.runs[i] = std::move(result);
    }
  };

  const size_t n_workers = std::clamp<size_t>(static_cast<size_t>(std::max(config.workers, 1)), 1, jobs.size());
  std::vector<std::thread> threads;
  for (size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (!io_error.empty()) throw std::runtime_error(io_error);

  std::string runs = "tracker_label,seed,status,ospa_mean,cov_norm_sum_mean,siap_ambiguity,"
                     "siap_position_accuracy,track_deletions,repairs,rejections,error\n";
  for (const auto& r : outcome.runs) {
    runs += r.label + "," + std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed") + ",";
    if (r.ok) {
      runs += format_double(r.summary.ospa_mean) + "," + format_double(r.summary.cov_norm_sum_mean) + "," +
              optional_field(r.summary.siap_ambiguity) + "," +
              optional_field(r.summary.siap_position_accuracy) + "," +
              std::to_string(r.summary.track_deletions) + "," + std::to_string(r.summary.repairs) + "," +
              std::to_string(r.summary.rejections) + ",";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      runs += ",,,,,,,\"" + msg + "\"";
    }
    runs += '\n';
  }
  write_file(output_dir / "runs.csv", runs);

  std::string summary = "tracker_label,metric,n_runs,n_failed,mean,median\n";
  for (const auto& filter : config.filters) {
    std::map<std::string, std::vector<double>> values;
    const char* names[] = {"ospa_mean", "cov_norm_sum_mean", "siap_ambiguity", "siap_position_accuracy",
                           "track_deletions", "repairs", "rejections"};
    int failed = 0;
    for (const auto& r : outcome.runs) {
      if (r.label != filter.label) continue;
      if (!r.ok) {
        ++failed;
        continue;
      }
      values["ospa_mean"].push_back(r.summary.ospa_mean);
      values["cov_norm_sum_mean"].push_back(r.summary.cov_norm_sum_mean);
      if (r.summary.siap_ambiguity) values["siap_ambiguity"].push_back(*r.summary.siap_ambiguity);
      if (r.summary.siap_position_accuracy)
        values["siap_position_accuracy"].push_back(*r.summary.siap_position_accuracy);
      values["track_deletions"].push_back(r.summary.track_deletions);
      values["repairs"].push_back(r.summary.repairs);
      values["rejections"].push_back(r.summary.rejections);
    }
    for (const char* name : names) {
      const auto& v = values[name];
      summary += filter.label + "," + name + "," + std::to_string(v.size()) + "," + std::to_string(failed) +
                 "," + format_double(mean_of(v)) + "," + format_double(median_of(v)) + "\n";
    }
  }
  write_file(output_dir / "summary.csv", summary);

  const bool all_failed =
      std::none_of(outcome.runs.begin(), outcome.runs.end(), [](const RunResult& r) { return r.ok; });
  outcome.exit_code = all_failed ? 1 : 0;
  return outcome;
}

void write_simulation(const RunConfig& config, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  const bool three_d = config.scenario == ScenarioKind::kClassA;
  for (std::uint64_t seed : config.seeds) {
    const ScenarioData data = build_scenario(config, seed);

    std::string truth = three_d ? "scan,time,target_id,p_n,v_n,p_e,v_e,p_u,v_u\n"
                                : "scan,time,target_id,p_n,v_n,p_e,v_e\n";
    for (size_t k = 0; k < data.times.size(); ++k) {
      for (const auto& path : data.truths) {
        const Vector* x = path.state_at(data.times[k]);
        if (!x) continue;
        truth += std::to_string(k) + "," + format_double(data.times[k]) + "," + std::to_string(path.id);
        for (Eigen::Index i = 0; i < x->size(); ++i) truth += "," + format_double((*x)(i));
        truth += '\n';
      }
    }
    write_file(output_dir / ("truth_seed" + std::to_string(seed) + ".csv"), truth);

    std::string dets = three_d ? "scan,time,target_id,elevation,bearing,range,sensor\n"
                               : "scan,time,target_id,range,bearing,sensor\n";
    for (size_t k = 0; k < data.scans.size(); ++k) {
      for (const auto& d : data.scans[k].detections) {
        dets += std::to_string(k) + "," + format_double(d.timestamp) + "," + std::to_string(d.truth_id);
        for (Eigen::Index i = 0; i < d.z.size(); ++i) dets += "," + format_double(d.z(i));
        dets += "," + d.sensor() + "\n";
      }
    }
    write_file(output_dir / ("detections_seed" + std::to_string(seed) + ".csv"), dets);
  }
}

}  // namespace skytrack
