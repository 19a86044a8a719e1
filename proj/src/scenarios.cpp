#include "skytrack/scenarios.hpp"

#include "skytrack/linalg.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace skytrack {

const Vector* GroundTruthPath::state_at(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return nullptr;
  return &states[static_cast<size_t>(it - times.begin())];
}

Vector position_of(const Vector& state) {
  const Eigen::Index axes = state.size() / 2;
  Vector pos(axes);
  for (Eigen::Index a = 0; a < axes; ++a) pos[a] = state[2 * a];
  return pos;
}

namespace {

Vector sample_gaussian(const Matrix& sqrt_cov, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector n(sqrt_cov.cols());
  for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = normal(rng);
  return sqrt_cov * n;
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix ClassBConfig::default_switch_matrix() {
  Matrix T(3, 3);
  T << 0.7, 0.15, 0.15,
       0.4, 0.6,  0.0,
       0.6, 0.4,  0.0;
  return T;
}

Matrix ClassBConfig::default_range_bearing_R() {
  const double bearing = std::numbers::pi / 180.0;
  return Eigen::Vector2d(4.0, 0.5 * bearing * bearing).asDiagonal();
}

void ClassBConfig::validate() const {
  if (n_targets < 0) throw InvalidArgument("n_targets must be non-negative");
  if (!(box_north > 0.0) || !(box_east > 0.0)) throw InvalidArgument("box extents must be positive");
  if (!(speed_bound >= 0.0)) throw InvalidArgument("speed bound must be non-negative");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (horizon < 1) throw InvalidArgument("horizon must be at least one scan");
  if (!(prior_position_std >= 0.0) || !(prior_velocity_std >= 0.0))
    throw InvalidArgument("prior standard deviations must be non-negative");
  const ModelSwitchMatrix check(switch_matrix);
  if (check.size() != 3) throw InvalidArgument("switch matrix must be 3x3 (NCV, TR+, TR-)");
  if (radar.position.size() != 2) throw InvalidArgument("radar position must be 2D");
  if (R.rows() != 2 || R.cols() != 2) throw InvalidArgument("R must be 2x2");
}

std::vector<MotionModel> ClassBConfig::motion_models() const {
  return {MotionModel::ncv_2d(q_x, q_y), MotionModel::turn_rate_2d(turn_rate, q_x, q_y),
          MotionModel::turn_rate_2d(-turn_rate, q_x, q_y)};
}

ClassBScenario simulate_class_b(const ClassBConfig& config, std::uint64_t seed) {
  config.validate();
  const ModelSwitchMatrix switching(config.switch_matrix);
  const std::vector<MotionModel> models = config.motion_models();
  std::vector<LinearDynamics> steps;
  std::vector<Matrix> noise_roots;
  for (const auto& m : models) {
    steps.push_back(m.discretize(config.dt));
    noise_roots.push_back(robust_sqrt(steps.back().Q).factor);
  }

  Rng truth_rng(seed);
  Rng meas_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Rng prior_rng(seed ^ 0xc2b2ae3d27d4eb4fULL);

  ClassBScenario out;
  out.radar_model = build_range_bearing(config.radar, config.R);
  const Matrix meas_root = robust_sqrt(config.R).factor;

  std::uniform_real_distribution<double> north(config.box_center[0] - config.box_north / 2,
                                               config.box_center[0] + config.box_north / 2);
  std::uniform_real_distribution<double> east(config.box_center[1] - config.box_east / 2,
                                              config.box_center[1] + config.box_east / 2);
  std::uniform_real_distribution<double> speed(-config.speed_bound, config.speed_bound);

  for (int i = 0; i < config.n_targets; ++i) {
    GroundTruthPath path;
    path.id = i;
    path.label = "target" + std::to_string(i);
    Vector x(4);
    x[0] = north(truth_rng);
    x[1] = speed(truth_rng);
    x[2] = east(truth_rng);
    x[3] = speed(truth_rng);
    path.times.push_back(0.0);
    path.states.push_back(x);
    path.model_index.push_back(0);
    out.truths.push_back(std::move(path));
  }

  for (int k = 1; k < config.horizon; ++k) {
    const double t = k * config.dt;
    for (auto& path : out.truths) {
      const int model = switching.sample_next(path.model_index.back(), truth_rng);
      const auto m = static_cast<size_t>(model);
      Vector x = steps[m].F * path.states.back() + sample_gaussian(noise_roots[m], truth_rng);
      path.times.push_back(t);
      path.states.push_back(std::move(x));
      path.model_index.push_back(model);
    }
  }

  for (int k = 0; k < config.horizon; ++k) {
    Scan scan;
    scan.time = k * config.dt;
    for (const auto& path : out.truths) {
      const Vector& x = path.states[static_cast<size_t>(k)];
      Vector z;
      try {
        z = out.radar_model->evaluate(x);
      } catch (const DegenerateGeometry&) {
        continue;
      }
      z = out.radar_model->wrap(z + sample_gaussian(meas_root, meas_rng));
      scan.detections.push_back(
          Detection{.z = z, .timestamp = scan.time, .model = out.radar_model, .truth_id = path.id});
    }
    out.scans.push_back(std::move(scan));
  }

  const Vector prior_sd = Eigen::Vector4d(config.prior_position_std, config.prior_velocity_std,
                                          config.prior_position_std, config.prior_velocity_std);
  const Matrix prior_cov = prior_sd.cwiseAbs2().asDiagonal();
  const Matrix prior_root = prior_sd.asDiagonal();
  for (const auto& path : out.truths) {
    Vector mean = path.states.front() + sample_gaussian(prior_root, prior_rng);
    out.priors.push_back({GaussianDensity(std::move(mean), prior_cov), path.times.front()});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct AdsbRecord {
  double time;
  Eigen::Vector3d local;
};

}  // namespace

AdsbData load_adsb(const std::filesystem::path& path, const geodesy::LocalFrame& frame,
                   double scan_interval, double max_gap) {
  if (!(scan_interval > 0.0)) throw InvalidArgument("scan interval must be positive");
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ADS-B file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("ADS-B file is empty: " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, size_t> column;
  for (size_t i = 0; i < header.size(); ++i) column[trim(header[i])] = i;
  const char* required[] = {"time", "icao24", "lat", "lon", "geoaltitude"};
  for (const char* name : required)
    if (!column.contains(name))
      throw FormatError("ADS-B file " + path.string() + " is missing required column '" + name +
                        "'");
  const size_t c_time = column["time"], c_id = column["icao24"], c_lat = column["lat"],
               c_lon = column["lon"], c_alt = column["geoaltitude"];
  const size_t needed = std::max({c_time, c_id, c_lat, c_lon, c_alt}) + 1;

  AdsbData out;
  std::map<std::string, std::vector<AdsbRecord>> by_id;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() < needed) {
      ++out.skipped_rows;
      continue;
    }
    const std::string id = trim(f[c_id]);
    const auto t = parse_double(f[c_time]);
    const auto lat = parse_double(f[c_lat]);
    const auto lon = parse_double(f[c_lon]);
    const auto alt = parse_double(f[c_alt]);
    if (id.empty() || !t || !lat || !lon || !alt || std::abs(*lat) > 90.0 ||
        std::abs(*lon) > 180.0) {
      ++out.skipped_rows;
      continue;
    }
    by_id[id].push_back({*t, frame.to_local({*lat, *lon, *alt})});
  }
  out.aircraft = by_id.size();
  if (by_id.empty()) return out;

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -t_min;
  for (auto& [id, recs] : by_id) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const AdsbRecord& a, const AdsbRecord& b) { return a.time < b.time; });
    recs.erase(std::unique(recs.begin(), recs.end(),
                           [](const AdsbRecord& a, const AdsbRecord& b) { return a.time == b.time; }),
               recs.end());
    t_min = std::min(t_min, recs.front().time);
    t_max = std::max(t_max, recs.back().time);
  }
  const double start = std::floor(t_min / scan_interval) * scan_interval;
  const auto count = static_cast<long>(std::floor((t_max - start) / scan_interval)) + 1;
  for (long k = 0; k < count; ++k) out.grid.push_back(start + static_cast<double>(k) * scan_interval);

  int next_id = 0;
  for (const auto& [id, recs] : by_id) {
    // Split into segments at long gaps.
    std::vector<std::pair<size_t, size_t>> segments;  // [first, last]
    size_t seg_start = 0;
    for (size_t i = 1; i <= recs.size(); ++i) {
      if (i == recs.size() || recs[i].time - recs[i - 1].time > max_gap) {
        segments.emplace_back(seg_start, i - 1);
        seg_start = i;
      }
    }
    int segment_no = 0;
    for (const auto& [first, last] : segments) {
      GroundTruthPath gt;
      gt.label = segment_no == 0 ? id : id + "/" + std::to_string(segment_no);
      size_t bracket = first;
      for (double t : out.grid) {
        if (t < recs[first].time || t > recs[last].time) continue;
        Vector state(6);
        if (first == last) {
          state << recs[first].local[0], 0.0, recs[first].local[1], 0.0, recs[first].local[2], 0.0;
        } else {
          while (bracket + 1 < last && recs[bracket + 1].time <= t) ++bracket;
          const AdsbRecord& a = recs[bracket];
          const AdsbRecord& b = recs[bracket + 1];
          const double span = b.time - a.time;
          const double w = (t - a.time) / span;
          const Eigen::Vector3d pos = a.local + w * (b.local - a.local);
          const Eigen::Vector3d vel = (b.local - a.local) / span;
          state << pos[0], vel[0], pos[1], vel[1], pos[2], vel[2];
        }
        gt.times.push_back(t);
        gt.states.push_back(std::move(state));
      }
      if (gt.times.empty()) continue;
      gt.id = next_id++;
      out.paths.push_back(std::move(gt));
      ++segment_no;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SensorSite> ClassAConfig::default_sensors() {
  return {{"manchester", {53.3537, -2.2750, 0.0}, std::nullopt},
          {"heathrow", {51.4700, -0.4543, 0.0}, std::nullopt},
          {"airborne", {52.25, -0.09, 5000.0}, std::nullopt}};
}

Matrix ClassAConfig::default_el_bearing_range_R() {
  const double deg = std::numbers::pi / 180.0;
  return Eigen::Vector3d(std::pow(0.75 * deg, 2), std::pow(2.0 * deg, 2), 100.0 * 100.0)
      .asDiagonal();
}

void ClassAConfig::validate() const {
  if (sensors.empty()) throw InvalidArgument("at least one sensor is required");
  if (!(max_range > 0.0)) throw InvalidArgument("max_range must be positive");
  if (!(scan_interval > 0.0)) throw InvalidArgument("scan_interval must be positive");
  if (!(clutter_rate >= 0.0)) throw InvalidArgument("clutter_rate must be non-negative");
  if (!(max_gap > 0.0)) throw InvalidArgument("max_gap must be positive");
  if (R.rows() != 3 || R.cols() != 3) throw InvalidArgument("R must be 3x3");
  if (!is_psd(R)) throw InvalidArgument("R must be positive semidefinite");
  if (!origin && sensors.size() < 2)
    throw InvalidArgument("scene origin defaults to the midpoint of two sensors; give an origin");
}

geodesy::Geodetic ClassAConfig::scene_origin() const {
  if (origin) return *origin;
  const auto& a = sensors.at(0).location;
  const auto& b = sensors.at(1).location;
  return {0.5 * (a.lat_deg + b.lat_deg), 0.5 * (a.lon_deg + b.lon_deg), 0.0};
}

SensorPose sensor_pose(const SensorSite& site, const geodesy::LocalFrame& frame,
                       double max_range, double t, double t0) {
  Eigen::Vector3d pos = frame.to_local(site.location);
  if (site.velocity) pos += *site.velocity * (t - t0);
  return {pos, max_range, site.label};
}

std::vector<Scan> simulate_detections(const std::vector<GroundTruthPath>& paths,
                                      const std::vector<double>& grid,
                                      const ClassAConfig& config,
                                      const geodesy::LocalFrame& frame, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const Matrix root = robust_sqrt(config.R).factor;
  const double t0 = grid.empty() ? 0.0 : grid.front();

  std::vector<MeasurementModelPtr> static_models;
  for (const auto& site : config.sensors)
    static_models.push_back(
        site.velocity ? nullptr
                      : build_az_el_range(sensor_pose(site, frame, config.max_range, t0, t0),
                                          config.R));

  std::vector<Scan> scans;
  for (double t : grid) {
    Scan scan;
    scan.time = t;
    for (size_t s = 0; s < config.sensors.size(); ++s) {
      const SensorSite& site = config.sensors[s];
      const MeasurementModelPtr model =
          static_models[s] ? static_models[s]
                           : build_az_el_range(sensor_pose(site, frame, config.max_range, t, t0),
                                               config.R);
      const Eigen::Vector3d origin = model->sensor()->position;
      for (const auto& path : paths) {
        const Vector* x = path.state_at(t);
        if (!x) continue;
        const Eigen::Vector3d d(((*x)[0]) - origin[0], (*x)[2] - origin[1], (*x)[4] - origin[2]);
        const double slant = d.norm();
        if (slant > config.max_range || slant < 1e-9) continue;
        Vector z = model->wrap(model->evaluate(*x) + sample_gaussian(root, rng));
        scan.detections.push_back(
            Detection{.z = std::move(z), .timestamp = t, .model = model, .truth_id = path.id});
      }
      if (config.clutter_rate > 0.0) {
        std::poisson_distribution<int> count(config.clutter_rate);
        std::uniform_real_distribution<double> el(-std::numbers::pi / 2, std::numbers::pi / 2);
        std::uniform_real_distribution<double> bearing(-std::numbers::pi, std::numbers::pi);
        std::uniform_real_distribution<double> range(0.0, config.max_range);
        const int n = count(rng);
        for (int c = 0; c < n; ++c) {
          Vector z(3);
          z << el(rng), wrap_angle(bearing(rng)), range(rng);
          scan.detections.push_back(Detection{.z = std::move(z),
                                              .timestamp = t,
                                              .model = model,
                                              .truth_id = -1,
                                              .is_clutter = true});
        }
      }
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

}  // namespace skytrack
