#pragma once

#include "skytrack/scenarios.hpp"
#include "skytrack/tracker.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skytrack {

struct OspaParams {
  double p = 2.0;
  double c = 10.0;

  void validate() const;
};

/// OSPA distance between two finite point sets. Both empty gives 0.
double ospa(std::span<const Vector> truth, std::span<const Vector> tracks,
            const OspaParams& params);

/// Per-timestamp track-to-truth association bookkeeping.
struct AssociationCounts {
  double time = 0.0;
  int associated_tracks = 0;   // N_A
  int associated_truths = 0;   // J_T
  /// (track id, distance to its truth) for every associated track.
  std::vector<std::pair<int, double>> track_errors;

  double error_sum() const {
    double sum = 0.0;
    for (const auto& [id, e] : track_errors) sum += e;
    return sum;
  }
};

/// Sum N_A / sum J_T; empty when no truth was ever associated.
std::optional<double> siap_ambiguity(std::span<const AssociationCounts> counts);
/// Mean track-to-truth distance over associated track-timestamps.
std::optional<double> siap_position_accuracy(std::span<const AssociationCounts> counts);

/// Sum of Frobenius norms sqrt(trace(P^T P)).
double covariance_norm_sum(std::span<const Matrix> covariances);

/// Labeled positions at one time.
struct PointSet {
  double time = 0.0;
  std::vector<int> ids;
  std::vector<Vector> positions;
};

/// At each time: optimal 2D assignment between tracks and truths with
/// distances above `cutoff` excluded, then any remaining track within
/// `cutoff` of a truth is attached to its nearest truth (so duplicate
/// tracks raise the ambiguity).
std::vector<AssociationCounts> associate_truth_to_tracks(std::span<const PointSet> truths,
                                                         std::span<const PointSet> tracks,
                                                         double cutoff);

/// Truth positions at each time.
std::vector<PointSet> truth_points(const std::vector<GroundTruthPath>& paths,
                                   std::span<const double> times);
/// Confirmed track positions (and covariances) at each time.
std::vector<PointSet> track_points(const TrackerRun& run, std::span<const double> times,
                                   std::vector<std::vector<Matrix>>* covariances = nullptr);

/// Per-timestamp metric values for one tracker run.
struct MetricSeries {
  std::vector<double> times;
  std::vector<double> ospa;
  std::vector<double> cov_norm_sum;
  std::vector<int> n_tracks;
  std::vector<AssociationCounts> association;

  /// Time-averaged OSPA.
  double mean_ospa() const;
  double mean_cov_norm_sum() const;
  std::optional<double> ambiguity() const { return siap_ambiguity(association); }
  std::optional<double> position_accuracy() const { return siap_position_accuracy(association); }
};

MetricSeries compute_metrics(const std::vector<GroundTruthPath>& truths, const TrackerRun& run,
                             std::span<const double> times, const OspaParams& ospa_params,
                             double siap_cutoff);

}  // namespace skytrack
