#include "skytrack/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int workers = 0;
  bool trace = false;
};

skytrack::RunConfig load(const Options& opt) {
  skytrack::RunConfig cfg = skytrack::load_config(opt.config);
  if (!opt.seeds.empty()) cfg.seeds = opt.seeds;
  if (opt.workers > 0) cfg.workers = opt.workers;
  if (opt.trace) cfg.trace = true;
  return cfg;
}

std::optional<std::filesystem::path> out_override(const Options& opt) {
  if (opt.out.empty()) return std::nullopt;
  return std::filesystem::path(opt.out);
}

void add_common(CLI::App* cmd, Options& opt, bool grid_flags) {
  cmd->add_option("config", opt.config, "Run configuration (YAML)")->required();
  cmd->add_option("--seed", opt.seeds, "Seed(s), replacing the config's seed list");
  if (grid_flags) {
    cmd->add_option("--out", opt.out, "Output directory (default: $SKYTRACK_OUTPUT_ROOT/<config>)");
    cmd->add_option("--workers", opt.workers, "Concurrent runs")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skytrack: multi-target tracking experiments"};
  app.require_subcommand(1);

  Options opt;
  auto* run = app.add_subcommand("run", "Run the filter x seed grid and write metrics");
  add_common(run, opt, true);
  run->add_flag("--trace", opt.trace, "Write per-scan NDJSON traces");
  auto* validate = app.add_subcommand("validate", "Check a configuration and exit");
  add_common(validate, opt, false);
  auto* simulate = app.add_subcommand("simulate", "Write truth and detections only");
  add_common(simulate, opt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const skytrack::RunConfig cfg = load(opt);
    if (validate->parsed()) {
      std::cout << opt.config << ": ok (" << cfg.filters.size() << " filter(s), " << cfg.seeds.size()
                << " seed(s))\n";
      return 0;
    }
    const auto dir = skytrack::resolve_output_dir(cfg, out_override(opt));
    if (simulate->parsed()) {
      skytrack::write_simulation(cfg, dir);
      std::cout << "wrote simulation to " << dir.string() << "\n";
      return 0;
    }
    const auto outcome = skytrack::run_experiment(cfg, dir);
    for (const auto& r : outcome.runs)
      if (!r.ok) std::cerr << "run " << r.label << " seed " << r.seed << " failed: " << r.error << "\n";
    std::cout << "wrote " << outcome.runs.size() << " run(s) to " << dir.string() << "\n";
    return outcome.exit_code;
  } catch (const skytrack::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const skytrack::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
