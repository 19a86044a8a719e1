#pragma once

#include "skytrack/association.hpp"
#include "skytrack/track.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace skytrack {

/// All detections collected at one time, possibly from several sensors.
struct Scan {
  double time = 0.0;
  std::vector<Detection> detections;
};

/// One confirmed track per supplied prior, created before the first scan.
struct PriorInitiation {
  std::vector<GaussianState> priors;
};

/// A detection outside every gate starts a tentative track at the inverted
/// measurement position (covariance from the linearized inverse), zero
/// velocity with `velocity_std` per axis. The initiating detection counts as
/// the first hit; `confirm_hits` hits within `confirm_window` scans confirm
/// the track, otherwise it is dropped.
struct SinglePointInitiation {
  double velocity_std = 150.0;
  int confirm_hits = 2;
  int confirm_window = 3;
};

struct TrackerConfig {
  MotionModel motion = MotionModel::ncv_2d(0.05, 0.05);
  double gate = 5.0;
  double deletion_threshold = 10.0;
  std::variant<PriorInitiation, SinglePointInitiation> initiation = PriorInitiation{};
};

struct TrackScanEntry {
  int track_id = 0;
  int detection = kMissed;  // index into the scan's detections (last one applied)
  double distance = 0.0;    // gate value when missed
  bool rejected = false;
  bool repaired = false;
  bool numerical_failure = false;
  double cov_frobenius = 0.0;
};

struct ScanLog {
  double time = 0.0;
  std::vector<TrackScanEntry> entries;  // one per live track after the scan
  std::vector<int> initiated;
  std::vector<int> confirmed;
  std::vector<int> deleted;             // stale confirmed/tentative tracks
  std::vector<int> dropped_tentative;   // failed confirmation
  int repairs = 0;
  int rejections = 0;
  int numerical_failures = 0;
};

struct TrackerRun {
  std::vector<Track> tracks;  // every track ever created, ordered by id
  std::vector<ScanLog> log;
};

/// Per scan: predict every live track to the scan time, then for each
/// sensor group (sorted by sensor label) hypothesize, assign, update and
/// initiate; finally record states, confirm and delete stale tracks.
TrackerRun run_tracker(std::span<const Scan> scans, const TrackerConfig& config,
                       const FilterKind& kind, std::uint64_t seed);

/// Single-point initial state for an invertible measurement model.
GaussianState initiate_from_detection(const Detection& detection, double velocity_std);

}  // namespace skytrack
