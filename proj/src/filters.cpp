#include "skytrack/filters.hpp"

#include <sstream>

namespace skytrack {

GaussianState predict(const GaussianState& state, const LinearDynamics& dynamics,
                      double to_time) {
  const double gap = to_time - state.timestamp;
  if (gap < 0.0) throw InvalidArgument("prediction would move backwards in time");
  if (std::abs(dynamics.dt - gap) > 1e-9 * std::max(1.0, gap))
    throw InvalidArgument("dynamics built for dt=" + std::to_string(dynamics.dt) +
                          " but the gap is " + std::to_string(gap));
  if (dynamics.F.cols() != state.mean().size())
    throw InvalidArgument("dynamics dimension does not match the state");

  Vector mean = dynamics.F * state.mean();
  Matrix cov = symmetrize(dynamics.F * state.cov() * dynamics.F.transpose() + dynamics.Q);
  return {GaussianDensity(std::move(mean), std::move(cov)), to_time};
}

GaussianState predict(const GaussianState& state, const MotionModel& motion, double to_time) {
  const double gap = to_time - state.timestamp;
  if (gap < 0.0) throw InvalidArgument("prediction would move backwards in time");
  if (gap == 0.0) return state;
  return predict(state, motion.discretize(gap), to_time);
}

UpdateOutcome update_with(const GaussianState& state, const Vector& z,
                          const MeasurementModel& model, const TransformResult& predicted,
                          bool reject_indefinite) {
  const Eigen::Index n = state.mean().size();
  const Eigen::Index nz = model.meas_dim();
  if (z.size() != nz) throw InvalidArgument("measurement dimension mismatch");
  if (predicted.cov_xz.rows() != n || predicted.cov_xz.cols() != nz)
    throw InvalidArgument("cross-covariance dimension mismatch");

  Eigen::SelfAdjointEigenSolver<Matrix> es(predicted.cov_zz, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxInnovationCondition) {
    std::ostringstream msg;
    msg << "innovation covariance is singular (eigenvalues in [" << lo << ", " << hi
        << "], condition " << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity())
        << ")";
    throw NumericalError(msg.str());
  }

  UpdateOutcome out;
  out.innovation = model.residual(z, predicted.z_mean);

  const Eigen::LDLT<Matrix> ldlt(predicted.cov_zz);
  const Matrix gain = ldlt.solve(predicted.cov_xz.transpose()).transpose();

  Vector mean = state.mean() + gain * out.innovation;
  Matrix cov = symmetrize(state.cov() - gain * predicted.cov_zz * gain.transpose());
  out.min_eigenvalue_before_repair = min_eigenvalue(cov);

  const double trace = std::abs(cov.trace());
  if (reject_indefinite && out.min_eigenvalue_before_repair < -1e-9 * trace) {
    out.rejected = true;
    out.state = state;
    return out;
  }
  out.repaired = repair_psd(cov);
  out.state = {GaussianDensity(std::move(mean), std::move(cov)), state.timestamp};
  return out;
}

UpdateOutcome update(const GaussianState& state, const Vector& z, const MeasurementModel& model,
                     MomentTransform& transform) {
  const TransformResult predicted = transform.apply(model, state.density);
  const bool is_ukf = std::holds_alternative<UkfKind>(transform.kind());
  return update_with(state, z, model, predicted, is_ukf);
}

UpdateOutcome update(const GaussianState& state, const Detection& detection,
                     MomentTransform& transform) {
  if (detection.timestamp != state.timestamp)
    throw InvalidArgument("detection timestamp does not match the state");
  if (!detection.model) throw InvalidArgument("detection has no measurement model");
  return update(state, detection.z, *detection.model, transform);
}

}  // namespace skytrack
