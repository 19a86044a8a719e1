#pragma once

#include "skytrack/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace skytrack {

/// Mean and covariance of a Gaussian. The covariance is symmetrized on
/// construction and must be positive semidefinite.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  GaussianDensity(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

 private:
  Vector mean_;
  Matrix cov_;
};

/// x_{k+1} = F x_k + w_k, w_k ~ N(0, Q), for one fixed step dt.
struct LinearDynamics {
  Matrix F;
  Matrix Q;
  double dt = 0.0;
};

LinearDynamics build_ncv_2d(double dt, double q_x, double q_y);
LinearDynamics build_turn_rate_2d(double dt, double omega, double q_x, double q_y);
LinearDynamics build_cv_3d(double dt, double q_x, double q_y, double q_z);

/// A dynamics family that can be discretized for any time gap. The tracker
/// holds one of these and rebuilds F, Q whenever scans are irregular.
struct MotionModel {
  enum class Kind { kNcv2d, kTurnRate2d, kCv3d };

  Kind kind = Kind::kNcv2d;
  double omega = 0.0;        // rad/s, turn-rate only
  std::vector<double> q;     // per-axis intensities

  static MotionModel ncv_2d(double q_x, double q_y);
  static MotionModel turn_rate_2d(double omega, double q_x, double q_y);
  static MotionModel cv_3d(double q_x, double q_y, double q_z);

  Eigen::Index state_dim() const { return kind == Kind::kCv3d ? 6 : 4; }
  LinearDynamics discretize(double dt) const;
};

struct SensorPose {
  Vector position;                    // scene coordinates, meters
  std::optional<double> max_range;    // unbounded when empty
  std::string label;
};

/// z = h(x) + v, v ~ N(0, R). Angle components of h are wrapped to (-pi, pi].
class MeasurementModel {
 public:
  using Function = std::function<Vector(const Vector&)>;
  using JacobianFunction = std::function<Matrix(const Vector&)>;
  /// Maps a measurement back to scene position (length 2 or 3), when the
  /// geometry is invertible.
  using InverseFunction = std::function<Vector(const Vector&)>;

  MeasurementModel(Function h, Matrix R, std::vector<bool> angle_mask,
                   Eigen::Index state_dim, JacobianFunction jacobian = {},
                   std::string sensor_label = {});

  Vector evaluate(const Vector& x) const;
  /// Analytic Jacobian if one was supplied, central differences otherwise.
  Matrix jacobian(const Vector& x) const;
  Matrix numeric_jacobian(const Vector& x) const;

  /// a - b with angle components wrapped.
  Vector residual(const Vector& a, const Vector& b) const;
  Vector wrap(Vector z) const;

  const Matrix& R() const { return R_; }
  const std::vector<bool>& angle_mask() const { return angle_mask_; }
  Eigen::Index meas_dim() const { return R_.rows(); }
  Eigen::Index state_dim() const { return state_dim_; }
  const std::string& sensor_label() const { return sensor_label_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

  void set_inverse(InverseFunction inverse) { inverse_ = std::move(inverse); }
  bool invertible() const { return static_cast<bool>(inverse_); }
  Vector invert(const Vector& z) const;

  /// Sensor the model is attached to, when it was built from one.
  const std::optional<SensorPose>& sensor() const { return sensor_; }
  void set_sensor(SensorPose pose) { sensor_ = std::move(pose); }

 private:
  Function h_;
  Matrix R_;
  std::vector<bool> angle_mask_;
  Eigen::Index state_dim_;
  JacobianFunction jacobian_;
  InverseFunction inverse_;
  std::string sensor_label_;
  std::optional<SensorPose> sensor_;
};

using MeasurementModelPtr = std::shared_ptr<const MeasurementModel>;

/// Linear h(x) = H x; used by tests and the linear-Gaussian checks.
MeasurementModelPtr build_linear(Matrix H, Matrix R, std::string label = "linear");

/// [range, bearing] from a 2D sensor; state [pN, vN, pE, vE].
MeasurementModelPtr build_range_bearing(const SensorPose& sensor, Matrix R);

/// [elevation, bearing, range] from a 3D sensor; state
/// [pN, vN, pE, vE, pU, vU].
MeasurementModelPtr build_az_el_range(const SensorPose& sensor, Matrix R);

/// Row-stochastic matrix of model switching probabilities.
class ModelSwitchMatrix {
 public:
  explicit ModelSwitchMatrix(Matrix T);

  const Matrix& matrix() const { return T_; }
  Eigen::Index size() const { return T_.rows(); }
  int sample_next(int current, Rng& rng) const;

 private:
  Matrix T_;
};

}  // namespace skytrack
