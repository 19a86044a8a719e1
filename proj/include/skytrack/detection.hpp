#pragma once

#include "skytrack/models.hpp"

#include <string>

namespace skytrack {

/// One measurement from one sensor at one scan time.
struct Detection {
  Vector z;
  double timestamp = 0.0;
  MeasurementModelPtr model;
  /// Simulation bookkeeping only: generating truth id (-1 for clutter).
  int truth_id = -1;
  bool is_clutter = false;

  const std::string& sensor() const { return model->sensor_label(); }
};

}  // namespace skytrack
