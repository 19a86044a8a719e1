#include "skytrack/association.hpp"
#include "skytrack/experiment.hpp"
#include "skytrack/geodesy.hpp"
#include "skytrack/metrics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace skytrack;

namespace {

std::vector<Vector> rows_of(const Matrix& m) {
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).transpose());
  return out;
}

py::dict summary_dict(const RunResult& r) {
  py::dict d;
  d["label"] = r.label;
  d["seed"] = r.seed;
  d["ok"] = r.ok;
  d["error"] = r.error;
  d["ospa_mean"] = r.summary.ospa_mean;
  d["cov_norm_sum_mean"] = r.summary.cov_norm_sum_mean;
  d["siap_ambiguity"] = r.summary.siap_ambiguity;
  d["siap_position_accuracy"] = r.summary.siap_position_accuracy;
  d["track_deletions"] = r.summary.track_deletions;
  d["repairs"] = r.summary.repairs;
  d["rejections"] = r.summary.rejections;
  return d;
}

RunConfig load_with(const std::filesystem::path& path, const std::optional<std::vector<std::uint64_t>>& seeds,
                    std::optional<int> workers) {
  RunConfig cfg = load_config(path);
  if (seeds) cfg.seeds = *seeds;
  if (workers) cfg.workers = *workers;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_skytrack, m) {
  m.doc() = "Multi-target tracking experiments";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "assign_2d",
      [](const Matrix& cost) {
        const Assignment2D a = assign_2d(cost);
        return py::make_tuple(a.row_to_col, a.total_cost);
      },
      py::arg("cost"), "Minimum-cost assignment; returns (row_to_col, total_cost), -1 for unassigned rows.");

  m.def(
      "ospa",
      [](const Matrix& truth, const Matrix& tracks, double p, double c) {
        return ospa(rows_of(truth), rows_of(tracks), {p, c});
      },
      py::arg("truth"), py::arg("tracks"), py::arg("p") = 2.0, py::arg("c") = 10.0,
      "OSPA distance between point sets given as (n, d) arrays.");

  m.def(
      "geodetic_to_local",
      [](const Eigen::Vector3d& origin, const Eigen::Vector3d& point) {
        return geodesy::LocalFrame({origin[0], origin[1], origin[2]}).to_local({point[0], point[1], point[2]});
      },
      py::arg("origin"), py::arg("point"), "(lat, lon, alt) to local (north, east, up) meters.");

  m.def(
      "validate",
      [](const std::filesystem::path& path) {
        const RunConfig cfg = load_config(path);
        py::dict d;
        d["scenario"] = cfg.scenario == ScenarioKind::kClassB ? "class_b" : "class_a";
        std::vector<std::string> labels;
        for (const auto& f : cfg.filters) labels.push_back(f.label);
        d["filters"] = labels;
        d["seeds"] = cfg.seeds;
        return d;
      },
      py::arg("config"), "Parse a configuration; raises ConfigError on problems.");

  m.def(
      "run",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out,
         std::optional<std::vector<std::uint64_t>> seeds, std::optional<int> workers) {
        const RunConfig cfg = load_with(path, seeds, workers);
        const auto dir = resolve_output_dir(cfg, out);
        ExperimentOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_experiment(cfg, dir);
        }
        py::list runs;
        for (const auto& r : outcome.runs) runs.append(summary_dict(r));
        py::dict d;
        d["output_dir"] = outcome.output_dir;
        d["exit_code"] = outcome.exit_code;
        d["runs"] = runs;
        return d;
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("seeds") = py::none(),
      py::arg("workers") = py::none(), "Run the filter x seed grid and write CSVs.");

  m.def(
      "simulate",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out,
         std::optional<std::vector<std::uint64_t>> seeds) {
        const RunConfig cfg = load_with(path, seeds, std::nullopt);
        const auto dir = resolve_output_dir(cfg, out);
        write_simulation(cfg, dir);
        return dir;
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("seeds") = py::none(),
      "Write truth and detection CSVs.");
}
