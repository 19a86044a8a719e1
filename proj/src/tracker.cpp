#include "skytrack/tracker.hpp"

#include <algorithm>
#include <map>

namespace skytrack {

GaussianState initiate_from_detection(const Detection& detection, double velocity_std) {
  const MeasurementModel& model = *detection.model;
  const Vector& z = detection.z;
  const Vector position = model.invert(z);
  const Eigen::Index axes = position.size();

  Matrix J(axes, z.size());
  Vector probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(z[i]));
    probe[i] = z[i] + step;
    const Vector plus = model.invert(probe);
    probe[i] = z[i] - step;
    const Vector minus = model.invert(probe);
    probe[i] = z[i];
    J.col(i) = (plus - minus) / (2.0 * step);
  }
  const Matrix pos_cov = symmetrize(J * model.R() * J.transpose());

  const Eigen::Index n = model.state_dim();
  if (n != 2 * axes) throw InvalidArgument("state layout does not match the inverted position");
  Vector mean = Vector::Zero(n);
  Matrix cov = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < axes; ++a) {
    mean[2 * a] = position[a];
    cov(2 * a + 1, 2 * a + 1) = velocity_std * velocity_std;
    for (Eigen::Index b = 0; b < axes; ++b) cov(2 * a, 2 * b) = pos_cov(a, b);
  }
  return {GaussianDensity(std::move(mean), std::move(cov)), detection.timestamp};
}

namespace {

struct LiveTrack {
  Track track;
  GaussianState working;
  bool updated_this_scan = false;
  TrackScanEntry entry;
};

double frobenius(const Matrix& m) { return std::sqrt((m.transpose() * m).trace()); }

void validate_scans(std::span<const Scan> scans) {
  for (size_t s = 0; s < scans.size(); ++s) {
    if (s > 0 && !(scans[s].time > scans[s - 1].time))
      throw InvalidArgument("scan times must be strictly increasing (scan " + std::to_string(s) +
                            ")");
    for (const auto& det : scans[s].detections) {
      if (det.timestamp != scans[s].time)
        throw InvalidArgument("detection timestamp differs from its scan time (scan " +
                              std::to_string(s) + ")");
      if (!det.model) throw InvalidArgument("detection without a measurement model");
    }
  }
}

}  // namespace

TrackerRun run_tracker(std::span<const Scan> scans, const TrackerConfig& config,
                       const FilterKind& kind, std::uint64_t seed) {
  validate_scans(scans);
  if (!(config.gate > 0.0)) throw InvalidArgument("gate must be positive");
  if (!(config.deletion_threshold > 0.0)) throw InvalidArgument("deletion threshold must be positive");

  Rng rng(seed);
  MomentTransform transform(kind, rng);
  const bool reject_indefinite = std::holds_alternative<UkfKind>(kind);
  const auto* single_point = std::get_if<SinglePointInitiation>(&config.initiation);

  TrackerRun run;
  std::vector<LiveTrack> live;
  int next_id = 0;

  if (const auto* priors = std::get_if<PriorInitiation>(&config.initiation)) {
    for (const auto& prior : priors->priors) {
      LiveTrack lt{.track = {}, .working = prior, .entry = {}};
      lt.track.id = next_id++;
      lt.track.states.push_back(prior);
      lt.track.last_update_time = prior.timestamp;
      lt.track.status = TrackStatus::kConfirmed;
      lt.track.confirmed_time = prior.timestamp;
      live.push_back(std::move(lt));
    }
  }

  for (const Scan& scan : scans) {
    ScanLog log;
    log.time = scan.time;

    for (auto& lt : live) {
      lt.updated_this_scan = false;
      lt.entry = TrackScanEntry{.track_id = lt.track.id, .detection = kMissed, .distance = config.gate};
      try {
        lt.working = predict(lt.track.current(), config.motion, scan.time);
      } catch (const std::exception&) {
        lt.entry.numerical_failure = true;
        ++log.numerical_failures;
        lt.working = lt.track.current();
        lt.working.timestamp = scan.time;
      }
    }

    // Group detection indices by sensor, in label order.
    std::map<std::string, std::vector<int>> groups;
    for (size_t d = 0; d < scan.detections.size(); ++d)
      groups[scan.detections[d].sensor()].push_back(static_cast<int>(d));

    for (const auto& [label, indices] : groups) {
      std::vector<Detection> dets;
      dets.reserve(indices.size());
      for (int idx : indices) dets.push_back(scan.detections[static_cast<size_t>(idx)]);
      std::vector<GaussianState> priors;
      priors.reserve(live.size());
      for (const auto& lt : live) priors.push_back(lt.working);

      const HypothesisTable table = hypothesize(priors, dets, transform, config.gate);
      const Assignment assignment = associate(table);

      for (const auto& [t, d] : assignment.pairs) {
        if (d == kMissed) continue;
        LiveTrack& lt = live[static_cast<size_t>(t)];
        const TransformResult* moments = table.moments(t, d);
        try {
          const UpdateOutcome out = update_with(lt.working, dets[static_cast<size_t>(d)].z,
                                                *dets[static_cast<size_t>(d)].model, *moments,
                                                reject_indefinite);
          if (out.rejected) {
            lt.entry.rejected = true;
            ++lt.track.update_rejections;
            ++log.rejections;
            continue;
          }
          if (out.repaired) {
            lt.entry.repaired = true;
            ++lt.track.repairs;
            ++log.repairs;
          }
          lt.working = out.state;
          lt.updated_this_scan = true;
          lt.entry.detection = indices[static_cast<size_t>(d)];
          lt.entry.distance = table.distance(t, d);
        } catch (const std::exception&) {
          lt.entry.numerical_failure = true;
          ++log.numerical_failures;
        }
      }

      if (!single_point) continue;
      for (int d : assignment.unassigned_detections) {
        const bool gated = table.tracks() > 0 &&
                           (table.distance.col(d).array() != kInfeasible).any();
        if (gated) continue;
        const Detection& det = dets[static_cast<size_t>(d)];
        if (!det.model->invertible()) continue;
        LiveTrack lt;
        try {
          lt.working = initiate_from_detection(det, single_point->velocity_std);
        } catch (const std::exception&) {
          ++log.numerical_failures;
          continue;
        }
        lt.track.id = next_id++;
        lt.track.status = TrackStatus::kTentative;
        lt.updated_this_scan = true;
        lt.entry = TrackScanEntry{.track_id = lt.track.id,
                                  .detection = indices[static_cast<size_t>(d)],
                                  .distance = 0.0};
        log.initiated.push_back(lt.track.id);
        live.push_back(std::move(lt));
      }
    }

    // Record, confirm, drop.
    std::vector<LiveTrack> kept;
    kept.reserve(live.size());
    for (auto& lt : live) {
      Track& tr = lt.track;
      if (!tr.states.empty() && tr.states.back().timestamp == scan.time)
        tr.states.back() = lt.working;
      else
        tr.states.push_back(lt.working);
      ++tr.scans_alive;
      if (lt.updated_this_scan) {
        tr.last_update_time = scan.time;
        ++tr.hits;
      }
      if (tr.status == TrackStatus::kTentative && single_point) {
        if (tr.hits >= single_point->confirm_hits) {
          tr.status = TrackStatus::kConfirmed;
          tr.confirmed_time = scan.time;
          log.confirmed.push_back(tr.id);
        } else if (tr.scans_alive >= single_point->confirm_window) {
          tr.status = TrackStatus::kDeleted;
          log.dropped_tentative.push_back(tr.id);
          run.tracks.push_back(std::move(tr));
          continue;
        }
      }
      lt.entry.cov_frobenius = frobenius(lt.working.cov());
      log.entries.push_back(lt.entry);
      kept.push_back(std::move(lt));
    }
    live = std::move(kept);

    std::vector<Track> current;
    current.reserve(live.size());
    for (auto& lt : live) current.push_back(std::move(lt.track));
    StaleSplit split = delete_stale(std::move(current), scan.time, config.deletion_threshold);
    std::vector<LiveTrack> survivors;
    size_t si = 0;
    for (auto& lt : live) {
      if (si < split.surviving.size() && split.surviving[si].id == lt.track.id) {
        lt.track = std::move(split.surviving[si++]);
        survivors.push_back(std::move(lt));
      }
    }
    for (auto& tr : split.deleted) {
      log.deleted.push_back(tr.id);
      run.tracks.push_back(std::move(tr));
    }
    live = std::move(survivors);
    run.log.push_back(std::move(log));
  }

  for (auto& lt : live) run.tracks.push_back(std::move(lt.track));
  std::sort(run.tracks.begin(), run.tracks.end(),
            [](const Track& a, const Track& b) { return a.id < b.id; });
  return run;
}

}  // namespace skytrack
