#pragma once

#include "skytrack/detection.hpp"
#include "skytrack/filters.hpp"
#include "skytrack/track.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace skytrack {

inline constexpr int kMissed = -1;
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// sqrt(nu^T S^-1 nu) by Cholesky solve. Angle components of nu must
/// already be wrapped.
double mahalanobis(const Vector& nu, const Matrix& S);

struct Hypothesis {
  int track = 0;
  int detection = kMissed;
  double distance = 0.0;
  bool feasible = false;
};

/// Distances between every predicted track and every detection of a scan.
struct HypothesisTable {
  double gate = 5.0;
  /// tracks x detections, kInfeasible where the pair is gated out or failed.
  Matrix distance;
  /// Per track, the predicted-measurement moments for each detection's
  /// model (index into `predicted`), or -1 when the transform failed.
  std::vector<std::vector<int>> moment_index;
  std::vector<TransformResult> predicted;

  Eigen::Index tracks() const { return distance.rows(); }
  Eigen::Index detections() const { return distance.cols(); }
  /// Moments used for (track, detection), nullptr if unavailable.
  const TransformResult* moments(int track, int detection) const;
  /// All hypotheses including one MISSED per track at cost = gate.
  std::vector<Hypothesis> hypotheses() const;
};

/// Computes one moment transform per (track, measurement model) and the
/// Mahalanobis distance to each detection. Distances above `gate` are
/// infeasible; transform failures mark the pair infeasible.
HypothesisTable hypothesize(std::span<const GaussianState> tracks,
                            std::span<const Detection> detections, MomentTransform& transform,
                            double gate);

/// Generic rectangular assignment result.
struct Assignment2D {
  std::vector<int> row_to_col;  // -1 when the row is unassigned
  double total_cost = 0.0;
};

/// Minimum-cost assignment on a rectangular cost matrix; kInfeasible entries
/// are never chosen. Maximizes the number of feasible pairs first (every row
/// is matched when rows <= cols and a feasible matching exists), then cost.
/// With rows <= cols, ties go to the lexicographically smallest
/// (row, col) assignment.
Assignment2D assign_2d(const Matrix& cost);

/// GNN association over a hypothesis table.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (track, detection or kMissed), one per track
  std::vector<int> unassigned_detections;
  double total_cost = 0.0;
};

/// Solves tracks x (detections + per-track MISSED columns at cost = gate).
Assignment associate(const HypothesisTable& table);

struct StaleSplit {
  std::vector<Track> surviving;
  std::vector<Track> deleted;
};

/// Removes tracks whose last update is more than `threshold` seconds before
/// `now`. Deleted tracks come back with status kDeleted.
StaleSplit delete_stale(std::vector<Track> tracks, double now, double threshold);

}  // namespace skytrack
