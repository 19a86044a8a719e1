#pragma once

#include "skytrack/geodesy.hpp"
#include "skytrack/models.hpp"
#include "skytrack/tracker.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace skytrack {

/// True states of one target on the scan grid.
struct GroundTruthPath {
  int id = 0;
  std::string label;
  std::vector<double> times;     // strictly increasing
  std::vector<Vector> states;    // [pN, vN, pE, vE(, pU, vU)]
  std::vector<int> model_index;  // motion model per step (simulated paths only)

  /// State at exactly `t`, if the path has one.
  const Vector* state_at(double t) const;
};

/// Position part of a state laid out as [p, v] pairs per axis.
Vector position_of(const Vector& state);

// ---------------------------------------------------------------------------

struct ClassBConfig {
  int n_targets = 10;
  double box_north = 30000.0;  // meters, centered on box_center
  double box_east = 10000.0;
  Eigen::Vector2d box_center = Eigen::Vector2d::Zero();
  double speed_bound = 200.0;  // velocities uniform in [-bound, bound] per axis
  double dt = 1.0;
  int horizon = 100;           // scans
  double q_x = 0.05;
  double q_y = 0.05;
  double turn_rate = deg_to_rad(20.0);  // rad/s for the +/- turn models
  Matrix switch_matrix = default_switch_matrix();
  SensorPose radar{Eigen::Vector2d::Zero(), std::nullopt, "radar"};
  Matrix R = default_range_bearing_R();
  /// Tracker priors: truth perturbed by N(0, diag(pos^2, vel^2, ...)).
  double prior_position_std = 10.0;
  double prior_velocity_std = 5.0;

  static Matrix default_switch_matrix();
  static Matrix default_range_bearing_R();
  void validate() const;
  /// NCV, TR(+omega), TR(-omega), indexed like the switch matrix.
  std::vector<MotionModel> motion_models() const;
};

struct ClassBScenario {
  std::vector<GroundTruthPath> truths;
  std::vector<Scan> scans;
  std::vector<GaussianState> priors;  // one per truth at the first scan time
  MeasurementModelPtr radar_model;
};

ClassBScenario simulate_class_b(const ClassBConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct AdsbData {
  std::vector<GroundTruthPath> paths;  // scene-local NEU states on the scan grid
  std::vector<double> grid;            // scan times covering every path
  std::size_t skipped_rows = 0;
  std::size_t aircraft = 0;            // distinct identifiers with usable rows
};

/// Reads an OpenSky-style state-vector CSV (`time,icao24,lat,lon,geoaltitude`
/// required; extra columns ignored), converts to the local frame and
/// linearly interpolates onto a grid of `scan_interval` seconds. Gaps longer
/// than `max_gap` seconds split a path.
AdsbData load_adsb(const std::filesystem::path& path, const geodesy::LocalFrame& frame,
                   double scan_interval, double max_gap = 30.0);

struct SensorSite {
  std::string label;
  geodesy::Geodetic location;
  std::optional<Eigen::Vector3d> velocity;  // NEU m/s; stationary when empty
};

struct ClassAConfig {
  std::filesystem::path adsb_file;
  std::optional<geodesy::Geodetic> origin;  // midpoint of the first two sites when empty
  std::vector<SensorSite> sensors = default_sensors();
  double max_range = 111000.0;
  Matrix R = default_el_bearing_range_R();
  double clutter_rate = 0.0;  // Poisson mean per sensor per scan
  double scan_interval = 5.0;
  double max_gap = 30.0;

  static std::vector<SensorSite> default_sensors();
  static Matrix default_el_bearing_range_R();
  void validate() const;
  geodesy::Geodetic scene_origin() const;
};

/// Sensor pose in scene coordinates at time `t` (relative to `t0`).
SensorPose sensor_pose(const SensorSite& site, const geodesy::LocalFrame& frame,
                       double max_range, double t, double t0);

/// Detections of every path within slant range of each sensor, plus
/// optional uniform clutter. One scan per grid time.
std::vector<Scan> simulate_detections(const std::vector<GroundTruthPath>& paths,
                                      const std::vector<double>& grid,
                                      const ClassAConfig& config,
                                      const geodesy::LocalFrame& frame, std::uint64_t seed);

}  // namespace skytrack
