#pragma once

#include "skytrack/detection.hpp"
#include "skytrack/models.hpp"
#include "skytrack/transforms.hpp"

namespace skytrack {

struct GaussianState {
  GaussianDensity density;
  double timestamp = 0.0;

  const Vector& mean() const { return density.mean(); }
  const Matrix& cov() const { return density.cov(); }
};

/// F x, F P F^T + Q. `dynamics.dt` must equal the time gap.
GaussianState predict(const GaussianState& state, const LinearDynamics& dynamics, double to_time);

/// Rebuilds the dynamics for the actual gap. A zero gap returns the state
/// unchanged.
GaussianState predict(const GaussianState& state, const MotionModel& motion, double to_time);

struct UpdateOutcome {
  GaussianState state;
  Vector innovation;
  bool repaired = false;   // posterior covariance needed an eigenvalue clamp
  bool rejected = false;   // update discarded, predicted state kept
  double min_eigenvalue_before_repair = 0.0;
};

/// Kalman-form update from precomputed predicted-measurement moments:
/// K = Pxz Pzz^-1 (solved, not inverted), x + K nu, P - K Pzz K^T.
/// `reject_indefinite` keeps the prior when the raw posterior covariance
/// has an eigenvalue below -1e-9 trace.
UpdateOutcome update_with(const GaussianState& state, const Vector& z,
                          const MeasurementModel& model, const TransformResult& predicted,
                          bool reject_indefinite = false);

/// Full update: computes the moments with `transform`, then update_with.
/// UKF updates reject indefinite posteriors.
UpdateOutcome update(const GaussianState& state, const Vector& z, const MeasurementModel& model,
                     MomentTransform& transform);

/// Update from a detection; its timestamp must match the state.
UpdateOutcome update(const GaussianState& state, const Detection& detection,
                     MomentTransform& transform);

/// Innovation covariance condition limit for the gain solve.
inline constexpr double kMaxInnovationCondition = 1e12;

}  // namespace skytrack
