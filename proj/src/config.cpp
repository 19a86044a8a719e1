#include "skytrack/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace skytrack {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const int line = node.Mark().line >= 0 ? node.Mark().line + 1 : 1;
    throw ConfigError(source_, line, message);
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& section) const {
    if (!map.IsMap()) fail(map, section + " must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  double number(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be a number, got '" + node.Scalar() + "'");
    }
  }

  long integer(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be an integer");
    try {
      return node.as<long>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a string");
    return node.Scalar();
  }

  bool boolean(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be true or false");
    }
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what,
                              std::optional<size_t> expected = std::nullopt) const {
    if (!node.IsSequence()) fail(node, what + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(number(item, what));
    if (expected && out.size() != *expected)
      fail(node, what + " must have " + std::to_string(*expected) + " entries");
    return out;
  }

  Matrix matrix(const YAML::Node& node, const std::string& what, Eigen::Index n) const {
    if (!node.IsSequence() || static_cast<Eigen::Index>(node.size()) != n)
      fail(node, what + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " list of rows");
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto row = numbers(node[static_cast<size_t>(r)], what + " row " + std::to_string(r),
                               static_cast<size_t>(n));
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<size_t>(c)];
    }
    return m;
  }

  /// Runs a validation callback, mapping InvalidArgument to a ConfigError at `node`.
  template <class F>
  void guard(const YAML::Node& node, F&& f) const {
    try {
      f();
    } catch (const InvalidArgument& e) {
      fail(node, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

FilterSpec parse_filter(const Reader& rd, const YAML::Node& node) {
  rd.check_keys(node, {"label", "kind", "iterations", "alpha", "beta", "kappa"}, "filter");
  if (!node["kind"]) rd.fail(node, "filter needs a 'kind' (ekf, ukf, ckf, sif)");
  const std::string kind = rd.text(node["kind"], "filter kind");
  FilterSpec spec;
  if (kind == "ekf") {
    spec.kind = EkfKind{};
  } else if (kind == "ckf") {
    spec.kind = CkfKind{};
  } else if (kind == "ukf") {
    UkfKind ukf;
    if (node["alpha"]) ukf.alpha = rd.number(node["alpha"], "alpha");
    if (node["beta"]) ukf.beta = rd.number(node["beta"], "beta");
    if (node["kappa"]) ukf.kappa = rd.number(node["kappa"], "kappa");
    spec.kind = ukf;
  } else if (kind == "sif") {
    SifKind sif;
    if (node["iterations"]) {
      const long its = rd.integer(node["iterations"], "iterations");
      if (its < 1) rd.fail(node["iterations"], "SIF iterations must be at least 1");
      sif.iterations = static_cast<int>(its);
    }
    spec.kind = sif;
  } else {
    rd.fail(node["kind"], "unknown filter kind '" + kind + "' (expected ekf, ukf, ckf, sif)");
  }
  for (const char* key : {"iterations"})
    if (node[key] && kind != "sif") rd.fail(node[key], std::string(key) + " only applies to sif");
  for (const char* key : {"alpha", "beta", "kappa"})
    if (node[key] && kind != "ukf") rd.fail(node[key], std::string(key) + " only applies to ukf");
  spec.label = node["label"] ? rd.text(node["label"], "label") : kind_name(spec.kind);
  if (spec.label.empty() || spec.label.find_first_of(",/\\ \t\"") != std::string::npos)
    rd.fail(node, "filter label '" + spec.label + "' must be non-empty without commas, slashes or spaces");
  rd.guard(node, [&] { validate_kind(spec.kind); });
  return spec;
}

void parse_class_b(const Reader& rd, const YAML::Node& node, ClassBConfig& cfg) {
  rd.check_keys(node,
                {"n_targets", "box", "speed_bound", "dt", "horizon", "q", "turn_rate_deg",
                 "switch_matrix", "radar", "R", "prior"},
                "class_b");
  if (node["n_targets"]) {
    const long n = rd.integer(node["n_targets"], "n_targets");
    if (n < 0) rd.fail(node["n_targets"], "n_targets must be non-negative");
    cfg.n_targets = static_cast<int>(n);
  }
  if (const auto box = node["box"]) {
    rd.check_keys(box, {"north", "east", "center"}, "class_b.box");
    if (box["north"]) cfg.box_north = rd.number(box["north"], "box.north");
    if (box["east"]) cfg.box_east = rd.number(box["east"], "box.east");
    if (box["center"]) {
      const auto c = rd.numbers(box["center"], "box.center", 2);
      cfg.box_center = Eigen::Vector2d(c[0], c[1]);
    }
    if (!(cfg.box_north > 0.0) || !(cfg.box_east > 0.0)) rd.fail(box, "box extents must be positive");
  }
  if (node["speed_bound"]) cfg.speed_bound = rd.number(node["speed_bound"], "speed_bound");
  if (node["dt"]) {
    cfg.dt = rd.number(node["dt"], "dt");
    if (!(cfg.dt > 0.0)) rd.fail(node["dt"], "dt must be positive");
  }
  if (node["horizon"]) {
    const long h = rd.integer(node["horizon"], "horizon");
    if (h < 1) rd.fail(node["horizon"], "horizon must be at least 1");
    cfg.horizon = static_cast<int>(h);
  }
  if (node["q"]) {
    const auto q = rd.numbers(node["q"], "class_b.q", 2);
    cfg.q_x = q[0];
    cfg.q_y = q[1];
    if (q[0] < 0 || q[1] < 0) rd.fail(node["q"], "noise intensities must be non-negative");
  }
  if (node["turn_rate_deg"]) cfg.turn_rate = deg_to_rad(rd.number(node["turn_rate_deg"], "turn_rate_deg"));
  if (const auto t = node["switch_matrix"]) {
    cfg.switch_matrix = rd.matrix(t, "switch_matrix", 3);
    for (Eigen::Index r = 0; r < 3; ++r) {
      const YAML::Node row = t[static_cast<size_t>(r)];
      for (Eigen::Index c = 0; c < 3; ++c)
        if (!(cfg.switch_matrix(r, c) >= 0.0 && cfg.switch_matrix(r, c) <= 1.0))
          rd.fail(row, "switch_matrix row " + std::to_string(r) + " has an entry outside [0, 1]");
      const double sum = cfg.switch_matrix.row(r).sum();
      if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "switch_matrix row " << r << " sums to " << sum << ", expected 1";
        rd.fail(row, msg.str());
      }
    }
  }
  if (node["radar"]) {
    const auto p = rd.numbers(node["radar"], "radar", 2);
    cfg.radar.position = Eigen::Vector2d(p[0], p[1]);
  }
  if (node["R"]) cfg.R = rd.matrix(node["R"], "R", 2);
  if (const auto prior = node["prior"]) {
    rd.check_keys(prior, {"position_std", "velocity_std"}, "class_b.prior");
    if (prior["position_std"]) cfg.prior_position_std = rd.number(prior["position_std"], "position_std");
    if (prior["velocity_std"]) cfg.prior_velocity_std = rd.number(prior["velocity_std"], "velocity_std");
  }
  rd.guard(node, [&] {
    cfg.validate();
    build_range_bearing(cfg.radar, cfg.R);
  });
}

geodesy::Geodetic parse_geodetic(const Reader& rd, const YAML::Node& node, const std::string& what) {
  geodesy::Geodetic g;
  if (!node["lat"] || !node["lon"]) rd.fail(node, what + " needs lat and lon");
  g.lat_deg = rd.number(node["lat"], what + ".lat");
  g.lon_deg = rd.number(node["lon"], what + ".lon");
  if (node["alt"]) g.alt_m = rd.number(node["alt"], what + ".alt");
  if (std::abs(g.lat_deg) > 90.0 || std::abs(g.lon_deg) > 180.0) rd.fail(node, what + " is out of range");
  return g;
}

void parse_class_a(const Reader& rd, const YAML::Node& node, ClassAConfig& cfg,
                   const std::filesystem::path& base) {
  rd.check_keys(node,
                {"adsb_file", "origin", "sensors", "max_range", "R", "clutter_rate",
                 "scan_interval", "max_gap"},
                "class_a");
  if (!node["adsb_file"]) rd.fail(node, "class_a needs adsb_file");
  std::filesystem::path file = rd.text(node["adsb_file"], "adsb_file");
  cfg.adsb_file = file.is_absolute() ? file : base / file;
  if (const auto o = node["origin"]) {
    rd.check_keys(o, {"lat", "lon", "alt"}, "class_a.origin");
    cfg.origin = parse_geodetic(rd, o, "origin");
  }
  if (const auto s = node["sensors"]) {
    if (!s.IsSequence() || s.size() == 0) rd.fail(s, "sensors must be a non-empty list");
    cfg.sensors.clear();
    for (const auto& item : s) {
      rd.check_keys(item, {"label", "lat", "lon", "alt", "velocity"}, "sensor");
      SensorSite site;
      site.label = item["label"] ? rd.text(item["label"], "sensor label")
                                 : "sensor" + std::to_string(cfg.sensors.size());
      site.location = parse_geodetic(rd, item, "sensor " + site.label);
      if (item["velocity"]) {
        const auto v = rd.numbers(item["velocity"], "sensor velocity", 3);
        site.velocity = Eigen::Vector3d(v[0], v[1], v[2]);
      }
      cfg.sensors.push_back(std::move(site));
    }
  }
  if (node["max_range"]) cfg.max_range = rd.number(node["max_range"], "max_range");
  if (node["R"]) cfg.R = rd.matrix(node["R"], "R", 3);
  if (node["clutter_rate"]) cfg.clutter_rate = rd.number(node["clutter_rate"], "clutter_rate");
  if (node["scan_interval"]) cfg.scan_interval = rd.number(node["scan_interval"], "scan_interval");
  if (node["max_gap"]) cfg.max_gap = rd.number(node["max_gap"], "max_gap");
  rd.guard(node, [&] { cfg.validate(); });
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& source) {
  const Reader rd(source.string());
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source.string(), e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source.string(), 1, "config must be a mapping");
  rd.check_keys(root,
                {"version", "scenario", "seeds", "output", "workers", "trace", "filters", "metrics",
                 "tracker", "class_b", "class_a"},
                "config");

  RunConfig cfg;
  cfg.source = source;
  if (!root["version"]) rd.fail(root, "missing 'version' (current schema is 1)");
  cfg.version = static_cast<int>(rd.integer(root["version"], "version"));
  if (cfg.version != kConfigVersion)
    rd.fail(root["version"], "unsupported config version " + std::to_string(cfg.version));

  if (!root["scenario"]) rd.fail(root, "missing 'scenario' (class_b or class_a)");
  const std::string scenario = rd.text(root["scenario"], "scenario");
  if (scenario == "class_b") {
    cfg.scenario = ScenarioKind::kClassB;
    cfg.ospa.c = 10.0;
  } else if (scenario == "class_a") {
    cfg.scenario = ScenarioKind::kClassA;
    cfg.ospa.c = 250.0;
  } else {
    rd.fail(root["scenario"], "unknown scenario '" + scenario + "' (expected class_b or class_a)");
  }

  const std::filesystem::path base = source.has_parent_path() ? source.parent_path() : ".";
  if (cfg.scenario == ScenarioKind::kClassB) {
    if (root["class_a"]) rd.fail(root["class_a"], "class_a section given for a class_b scenario");
    if (root["class_b"]) parse_class_b(rd, root["class_b"], cfg.class_b);
    else rd.guard(root, [&] { cfg.class_b.validate(); });
  } else {
    if (root["class_b"]) rd.fail(root["class_b"], "class_b section given for a class_a scenario");
    if (!root["class_a"]) rd.fail(root, "class_a scenario needs a class_a section");
    parse_class_a(rd, root["class_a"], cfg.class_a, base);
  }

  if (!root["filters"] || !root["filters"].IsSequence() || root["filters"].size() == 0)
    rd.fail(root["filters"] ? root["filters"] : root, "at least one filter is required");
  std::set<std::string> labels;
  for (const auto& f : root["filters"]) {
    FilterSpec spec = parse_filter(rd, f);
    if (!labels.insert(spec.label).second) rd.fail(f, "duplicate filter label '" + spec.label + "'");
    cfg.filters.push_back(std::move(spec));
  }

  if (!root["seeds"]) rd.fail(root, "at least one seed is required");
  const YAML::Node seeds = root["seeds"];
  if (seeds.IsSequence()) {
    for (const auto& s : seeds) {
      const long v = rd.integer(s, "seed");
      if (v < 0) rd.fail(s, "seeds must be non-negative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  } else if (seeds.IsMap()) {
    rd.check_keys(seeds, {"count", "first"}, "seeds");
    if (!seeds["count"]) rd.fail(seeds, "seeds needs a count");
    const long count = rd.integer(seeds["count"], "seeds.count");
    const long first = seeds["first"] ? rd.integer(seeds["first"], "seeds.first") : 1;
    if (count < 1 || first < 0) rd.fail(seeds, "seeds.count must be >= 1 and first >= 0");
    for (long i = 0; i < count; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(first + i));
  } else {
    rd.fail(seeds, "seeds must be a list or {count, first}");
  }
  if (cfg.seeds.empty()) rd.fail(seeds, "at least one seed is required");

  if (const auto m = root["metrics"]) {
    rd.check_keys(m, {"ospa_p", "ospa_c", "siap_cutoff"}, "metrics");
    if (m["ospa_p"]) cfg.ospa.p = rd.number(m["ospa_p"], "ospa_p");
    if (m["ospa_c"]) cfg.ospa.c = rd.number(m["ospa_c"], "ospa_c");
    if (m["siap_cutoff"]) {
      cfg.siap_cutoff = rd.number(m["siap_cutoff"], "siap_cutoff");
      if (!(*cfg.siap_cutoff > 0.0)) rd.fail(m["siap_cutoff"], "siap_cutoff must be positive");
    }
    rd.guard(m, [&] { cfg.ospa.validate(); });
  }

  if (const auto t = root["tracker"]) {
    rd.check_keys(t, {"gate", "deletion_threshold", "q", "initiation"}, "tracker");
    if (t["gate"]) {
      cfg.tracker.gate = rd.number(t["gate"], "gate");
      if (!(cfg.tracker.gate > 0.0)) rd.fail(t["gate"], "gate must be positive");
    }
    if (t["deletion_threshold"]) {
      cfg.tracker.deletion_threshold = rd.number(t["deletion_threshold"], "deletion_threshold");
      if (!(cfg.tracker.deletion_threshold > 0.0))
        rd.fail(t["deletion_threshold"], "deletion_threshold must be positive");
    }
    if (t["q"]) {
      const size_t axes = cfg.scenario == ScenarioKind::kClassB ? 2 : 3;
      cfg.tracker.q = rd.numbers(t["q"], "tracker.q", axes);
      for (double q : cfg.tracker.q)
        if (q < 0) rd.fail(t["q"], "tracker noise intensities must be non-negative");
    }
    if (const auto init = t["initiation"]) {
      rd.check_keys(init, {"velocity_std", "confirm_hits", "confirm_window"}, "tracker.initiation");
      auto& si = cfg.tracker.initiation;
      if (init["velocity_std"]) si.velocity_std = rd.number(init["velocity_std"], "velocity_std");
      if (init["confirm_hits"]) si.confirm_hits = static_cast<int>(rd.integer(init["confirm_hits"], "confirm_hits"));
      if (init["confirm_window"]) si.confirm_window = static_cast<int>(rd.integer(init["confirm_window"], "confirm_window"));
      if (!(si.velocity_std > 0.0) || si.confirm_hits < 1 || si.confirm_window < si.confirm_hits)
        rd.fail(init, "initiation needs velocity_std > 0 and 1 <= confirm_hits <= confirm_window");
    }
  }

  if (root["output"]) cfg.output_dir = rd.text(root["output"], "output");
  if (root["trace"]) cfg.trace = rd.boolean(root["trace"], "trace");
  if (root["workers"]) {
    const long w = rd.integer(root["workers"], "workers");
    if (w < 1) rd.fail(root["workers"], "workers must be at least 1");
    cfg.workers = static_cast<int>(w);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace skytrack
