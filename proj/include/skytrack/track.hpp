#pragma once

#include "skytrack/filters.hpp"

#include <limits>
#include <vector>

namespace skytrack {

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

struct Track {
  int id = 0;
  std::vector<GaussianState> states;  // one per scan, strictly increasing in time
  double last_update_time = 0.0;
  int update_rejections = 0;
  int repairs = 0;
  int hits = 0;          // associated updates since initiation
  int scans_alive = 0;   // scans seen since initiation, including the first
  TrackStatus status = TrackStatus::kTentative;
  /// Time the track became confirmed; states before it are not reported.
  double confirmed_time = std::numeric_limits<double>::infinity();

  const GaussianState& current() const { return states.back(); }
};

}  // namespace skytrack
