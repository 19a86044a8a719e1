#include "skytrack/experiment.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

using namespace skytrack;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "test.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

const char* kSmall = R"(version: 1
scenario: class_b
seeds: [3, 4]
filters:
  - {kind: ekf}
  - {kind: sif, iterations: 4}
class_b:
  n_targets: 3
  horizon: 15
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "skytrack_unit" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig c = parse_config(kSmall, "small.yaml");
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  REQUIRE(c.filters.size() == 2);
  CHECK(c.filters[0].label == "EKF");
  CHECK(c.filters[1].label == "SIF");
  CHECK(std::get<SifKind>(c.filters[1].kind).iterations == 4);
  CHECK(c.ospa.p == 2.0);
  CHECK(c.ospa.c == 10.0);
  CHECK(c.cutoff() == 10.0);
  CHECK(c.tracker.gate == 5.0);
  CHECK(c.class_b.n_targets == 3);
  CHECK(c.class_b.box_north == 30000.0);

  const RunConfig seeds = parse_config("version: 1\nscenario: class_b\nfilters: [{kind: ekf}]\nseeds: {count: 3, first: 10}\n", "s.yaml");
  CHECK(seeds.seeds == std::vector<std::uint64_t>{10, 11, 12});
}

TEST_CASE("config errors name the file and line") {
  const std::string head = "version: 1\nscenario: class_b\n";
  const std::string ekf = "filters: [{kind: ekf}]\nseeds: [1]\n";
  CHECK(error_of("version: 2\n").find("test.yaml:1:") == 0);
  CHECK(error_of("version: 1\n").find("scenario") != std::string::npos);
  CHECK(error_of(head + ekf + "bogus: 3\n").find("test.yaml:5:") == 0);
  CHECK(error_of(head + "bogus: 3\n").find("bogus") != std::string::npos);
  CHECK(error_of("version: 1\nscenario: class_c\n").find("test.yaml:2:") == 0);
  CHECK(error_of(head + "filters:\n  - {kind: kalman}\n").find("test.yaml:4:") == 0);
  CHECK(error_of(head + "filters:\n  - {kind: ekf}\n  - {kind: ekf}\n").find("test.yaml:5:") == 0);
  CHECK(error_of(head + "filters:\n  - {kind: ekf, iterations: 3}\n").find("test.yaml:4:") == 0);
  CHECK(error_of(head + ekf + "class_b:\n  dt: -1\n").find("test.yaml:6:") == 0);
  CHECK(error_of(head + ekf + "metrics: {ospa_c: abc}\n").find("test.yaml:5:") == 0);
  CHECK(!error_of("version: [1\n").empty());
}

TEST_CASE("switch matrix rows must sum to one") {
  const std::string text = R"(version: 1
scenario: class_b
filters: [{kind: ekf}]
seeds: [1]
class_b:
  switch_matrix:
    - [0.7, 0.15, 0.15]
    - [0.4, 0.5, 0.0]
    - [0.6, 0.4, 0.0]
)";
  const std::string err = error_of(text);
  CHECK(err.find("test.yaml:8:") == 0);
  CHECK(err.find("row 1 sums to 0.9") != std::string::npos);
}

TEST_CASE("run_experiment writes per-run and summary CSVs") {
  RunConfig c = parse_config(kSmall, "small.yaml");
  c.seeds = {3};
  const fs::path dir = scratch("smoke");
  const ExperimentOutcome out = run_experiment(c, dir);
  CHECK(out.exit_code == 0);
  REQUIRE(out.runs.size() == 2);
  for (const auto& r : out.runs) CHECK(r.ok);
  CHECK(fs::exists(dir / "metrics_EKF_seed3.csv"));
  CHECK(fs::exists(dir / "metrics_SIF_seed3.csv"));
  CHECK(fs::exists(dir / "runs.csv"));
  CHECK(fs::exists(dir / "summary.csv"));
  const auto metrics = read_csv(dir / "metrics_EKF_seed3.csv");
  CHECK(metrics.front() == std::vector<std::string>{"time", "metric", "tracker_label", "value"});
  const auto summary = read_csv(dir / "summary.csv");
  CHECK(summary.front() ==
        std::vector<std::string>{"tracker_label", "metric", "n_runs", "n_failed", "mean", "median"});
}

TEST_CASE("equal seeds give byte-identical outputs across worker counts") {
  RunConfig c = parse_config(kSmall, "small.yaml");
  c.trace = true;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_experiment(c, a);
  c.workers = 3;
  run_experiment(c, b);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    ++compared;
  }
  CHECK(compared == 2 * 2 + 2 * 2 + 2);
}

TEST_CASE("run summaries can be recomputed from the per-run CSVs") {
  const RunConfig c = parse_config(kSmall, "small.yaml");
  const fs::path dir = scratch("recompute");
  run_experiment(c, dir);
  const auto runs = read_csv(dir / "runs.csv");
  REQUIRE(runs.size() == 5);
  for (size_t i = 1; i < runs.size(); ++i) {
    const auto& row = runs[i];
    REQUIRE(row[2] == "ok");
    std::map<std::string, double> sum;
    std::map<std::string, int> count;
    for (const auto& m : read_csv(dir / ("metrics_" + row[0] + "_seed" + row[1] + ".csv"))) {
      if (m[0] == "time") continue;
      CHECK(m[2] == row[0]);
      sum[m[1]] += std::stod(m[3]);
      ++count[m[1]];
    }
    CHECK(std::stod(row[3]) == doctest::Approx(sum["ospa"] / count["ospa"]).epsilon(1e-12));
    CHECK(std::stod(row[4]) == doctest::Approx(sum["cov_norm_sum"] / count["cov_norm_sum"]).epsilon(1e-12));
    if (sum["n_associated_truths"] > 0)
      CHECK(std::stod(row[5]) ==
            doctest::Approx(sum["n_associated_tracks"] / sum["n_associated_truths"]).epsilon(1e-12));
    if (sum["n_associated_tracks"] > 0)
      CHECK(std::stod(row[6]) == doctest::Approx(sum["pa_sum"] / sum["n_associated_tracks"]).epsilon(1e-12));
    CHECK(std::stoi(row[7]) == static_cast<int>(sum["track_deletions"]));
  }
}

TEST_CASE("output directory resolution") {
  RunConfig c = parse_config(kSmall, "/x/small.yaml");
  CHECK(resolve_output_dir(c, fs::path("o")) == fs::path("o"));
  c.output_dir = fs::path("cfg");
  CHECK(resolve_output_dir(c, std::nullopt) == fs::path("cfg"));
  c.output_dir.reset();
  ::setenv("SKYTRACK_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(resolve_output_dir(c, std::nullopt) == fs::path("/tmp/root/small"));
  ::unsetenv("SKYTRACK_OUTPUT_ROOT");
  CHECK(resolve_output_dir(c, std::nullopt) == fs::path("skytrack_out/small"));
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5, 1e20, 7e-5}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(1700000005.0) == "1700000005");
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(std::nan("")) == "nan");
}
