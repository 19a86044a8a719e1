#include "skytrack/metrics.hpp"

#include "skytrack/association.hpp"

#include <algorithm>
#include <numeric>

namespace skytrack {

void OspaParams::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("OSPA order p must be >= 1");
  if (!(c > 0.0)) throw InvalidArgument("OSPA cutoff c must be positive");
}

double ospa(std::span<const Vector> truth, std::span<const Vector> tracks,
            const OspaParams& params) {
  params.validate();
  std::span<const Vector> small = truth;
  std::span<const Vector> large = tracks;
  if (small.size() > large.size()) std::swap(small, large);
  const auto m = static_cast<Eigen::Index>(small.size());
  const auto n = static_cast<Eigen::Index>(large.size());
  if (n == 0) return 0.0;

  const Eigen::Index dim = large.front().size();
  for (const auto& v : truth)
    if (v.size() != dim) throw InvalidArgument("OSPA point dimensions differ");
  for (const auto& v : tracks)
    if (v.size() != dim) throw InvalidArgument("OSPA point dimensions differ");

  const double cp = std::pow(params.c, params.p);
  double total = cp * static_cast<double>(n - m);
  if (m > 0) {
    Matrix cost(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        cost(i, j) = std::pow(std::min((small[static_cast<size_t>(i)] -
                                        large[static_cast<size_t>(j)]).norm(),
                                       params.c),
                              params.p);
    total += assign_2d(cost).total_cost;
  }
  return std::pow(total / static_cast<double>(n), 1.0 / params.p);
}

std::optional<double> siap_ambiguity(std::span<const AssociationCounts> counts) {
  double tracks = 0.0, truths = 0.0;
  for (const auto& c : counts) {
    tracks += c.associated_tracks;
    truths += c.associated_truths;
  }
  if (truths <= 0.0) return std::nullopt;
  return tracks / truths;
}

std::optional<double> siap_position_accuracy(std::span<const AssociationCounts> counts) {
  double error = 0.0, associated = 0.0;
  for (const auto& c : counts) {
    error += c.error_sum();
    associated += c.associated_tracks;
  }
  if (associated <= 0.0) return std::nullopt;
  return error / associated;
}

double covariance_norm_sum(std::span<const Matrix> covariances) {
  double sum = 0.0;
  for (const auto& P : covariances) sum += std::sqrt((P.transpose() * P).trace());
  return sum;
}

std::vector<AssociationCounts> associate_truth_to_tracks(std::span<const PointSet> truths,
                                                         std::span<const PointSet> tracks,
                                                         double cutoff) {
  if (truths.size() != tracks.size())
    throw InvalidArgument("truth and track series cover different timestamps");
  std::vector<AssociationCounts> out;
  out.reserve(truths.size());
  for (size_t k = 0; k < truths.size(); ++k) {
    const PointSet& truth = truths[k];
    const PointSet& est = tracks[k];
    if (truth.time != est.time) throw InvalidArgument("truth and track timestamps differ");

    AssociationCounts counts;
    counts.time = truth.time;
    const auto n_tracks = static_cast<Eigen::Index>(est.positions.size());
    const auto n_truths = static_cast<Eigen::Index>(truth.positions.size());
    Matrix dist(n_tracks, n_truths);
    for (Eigen::Index i = 0; i < n_tracks; ++i)
      for (Eigen::Index j = 0; j < n_truths; ++j)
        dist(i, j) = (est.positions[static_cast<size_t>(i)] - truth.positions[static_cast<size_t>(j)]).norm();
    const Matrix gated = dist.unaryExpr([cutoff](double d) { return d > cutoff ? kInfeasible : d; });

    std::vector<int> truth_of(static_cast<size_t>(n_tracks), -1);
    const Assignment2D primary = assign_2d(gated);
    for (Eigen::Index i = 0; i < n_tracks; ++i) truth_of[static_cast<size_t>(i)] = primary.row_to_col[static_cast<size_t>(i)];
    for (Eigen::Index i = 0; i < n_tracks; ++i) {
      if (truth_of[static_cast<size_t>(i)] >= 0 || n_truths == 0) continue;
      Eigen::Index nearest = 0;
      const double d = dist.row(i).minCoeff(&nearest);
      if (d <= cutoff) truth_of[static_cast<size_t>(i)] = static_cast<int>(nearest);
    }

    std::vector<char> truth_hit(static_cast<size_t>(n_truths), 0);
    for (Eigen::Index i = 0; i < n_tracks; ++i) {
      const int j = truth_of[static_cast<size_t>(i)];
      if (j < 0) continue;
      ++counts.associated_tracks;
      truth_hit[static_cast<size_t>(j)] = 1;
      counts.track_errors.emplace_back(est.ids[static_cast<size_t>(i)], dist(i, j));
    }
    counts.associated_truths =
        static_cast<int>(std::count(truth_hit.begin(), truth_hit.end(), char{1}));
    out.push_back(std::move(counts));
  }
  return out;
}

std::vector<PointSet> truth_points(const std::vector<GroundTruthPath>& paths,
                                   std::span<const double> times) {
  std::vector<PointSet> out;
  for (double t : times) {
    PointSet set;
    set.time = t;
    for (const auto& path : paths) {
      if (const Vector* x = path.state_at(t)) {
        set.ids.push_back(path.id);
        set.positions.push_back(position_of(*x));
      }
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<PointSet> track_points(const TrackerRun& run, std::span<const double> times,
                                   std::vector<std::vector<Matrix>>* covariances) {
  std::vector<PointSet> out;
  if (covariances) covariances->assign(times.size(), {});
  for (size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    PointSet set;
    set.time = t;
    for (const auto& track : run.tracks) {
      if (t < track.confirmed_time) continue;
      const auto it = std::lower_bound(
          track.states.begin(), track.states.end(), t,
          [](const GaussianState& s, double value) { return s.timestamp < value; });
      if (it == track.states.end() || it->timestamp != t) continue;
      set.ids.push_back(track.id);
      set.positions.push_back(position_of(it->mean()));
      if (covariances) (*covariances)[k].push_back(it->cov());
    }
    out.push_back(std::move(set));
  }
  return out;
}

double MetricSeries::mean_ospa() const {
  if (ospa.empty()) return 0.0;
  return std::accumulate(ospa.begin(), ospa.end(), 0.0) / static_cast<double>(ospa.size());
}

double MetricSeries::mean_cov_norm_sum() const {
  if (cov_norm_sum.empty()) return 0.0;
  return std::accumulate(cov_norm_sum.begin(), cov_norm_sum.end(), 0.0) /
         static_cast<double>(cov_norm_sum.size());
}

MetricSeries compute_metrics(const std::vector<GroundTruthPath>& truths, const TrackerRun& run,
                             std::span<const double> times, const OspaParams& ospa_params,
                             double siap_cutoff) {
  ospa_params.validate();
  MetricSeries series;
  series.times.assign(times.begin(), times.end());
  const std::vector<PointSet> truth = truth_points(truths, times);
  std::vector<std::vector<Matrix>> covs;
  const std::vector<PointSet> est = track_points(run, times, &covs);
  for (size_t k = 0; k < times.size(); ++k) {
    series.ospa.push_back(ospa(truth[k].positions, est[k].positions, ospa_params));
    series.cov_norm_sum.push_back(covariance_norm_sum(covs[k]));
    series.n_tracks.push_back(static_cast<int>(est[k].positions.size()));
  }
  series.association = associate_truth_to_tracks(truth, est, siap_cutoff);
  return series;
}

}  // namespace skytrack
