#include "skytrack/models.hpp"

#include "skytrack/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace skytrack {

GaussianDensity::GaussianDensity(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    std::ostringstream msg;
    msg << "covariance is " << cov_.rows() << "x" << cov_.cols()
        << " but mean has length " << mean_.size();
    throw InvalidArgument(msg.str());
  }
  if (!mean_.allFinite() || !cov_.allFinite())
    throw NumericalError("Gaussian density has non-finite entries");
  const double scale = 1.0 + cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw InvalidArgument("covariance is not symmetric");
  cov_ = symmetrize(cov_);
  if (!is_psd(cov_)) throw NumericalError("covariance is not positive semidefinite");
}

namespace {

void require_positive_dt(double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive, got " + std::to_string(dt));
}

void require_intensity(double q) {
  if (!(q >= 0.0)) throw InvalidArgument("noise intensity must be non-negative");
}

Eigen::Matrix2d white_accel_block(double dt) {
  Eigen::Matrix2d s;
  s << dt * dt * dt / 3.0, dt * dt / 2.0,
       dt * dt / 2.0,      dt;
  return s;
}

Matrix block_cv(double dt, const std::vector<double>& q) {
  const auto axes = static_cast<Eigen::Index>(q.size());
  Matrix F = Matrix::Identity(2 * axes, 2 * axes);
  for (Eigen::Index a = 0; a < axes; ++a) F(2 * a, 2 * a + 1) = dt;
  return F;
}

Matrix block_noise(double dt, const std::vector<double>& q) {
  const auto axes = static_cast<Eigen::Index>(q.size());
  Matrix Q = Matrix::Zero(2 * axes, 2 * axes);
  const Eigen::Matrix2d sigma = white_accel_block(dt);
  for (Eigen::Index a = 0; a < axes; ++a)
    Q.block<2, 2>(2 * a, 2 * a) = q[static_cast<size_t>(a)] * sigma;
  return Q;
}

}  // namespace

LinearDynamics build_ncv_2d(double dt, double q_x, double q_y) {
  require_positive_dt(dt);
  require_intensity(q_x);
  require_intensity(q_y);
  const std::vector<double> q{q_x, q_y};
  return {block_cv(dt, q), block_noise(dt, q), dt};
}

LinearDynamics build_turn_rate_2d(double dt, double omega, double q_x, double q_y) {
  require_positive_dt(dt);
  require_intensity(q_x);
  require_intensity(q_y);
  if (!std::isfinite(omega)) throw InvalidArgument("turn rate must be finite");
  if (std::abs(omega) < 1e-9) return build_ncv_2d(dt, q_x, q_y);

  const double s = std::sin(omega * dt);
  const double c = std::cos(omega * dt);
  Matrix F(4, 4);
  F << 1, s / omega,         0, -(1 - c) / omega,
       0, c,                 0, -s,
       0, (1 - c) / omega,   1, s / omega,
       0, s,                 0, c;
  return {F, block_noise(dt, {q_x, q_y}), dt};
}

LinearDynamics build_cv_3d(double dt, double q_x, double q_y, double q_z) {
  require_positive_dt(dt);
  require_intensity(q_x);
  require_intensity(q_y);
  require_intensity(q_z);
  const std::vector<double> q{q_x, q_y, q_z};
  return {block_cv(dt, q), block_noise(dt, q), dt};
}

MotionModel MotionModel::ncv_2d(double q_x, double q_y) {
  return {Kind::kNcv2d, 0.0, {q_x, q_y}};
}

MotionModel MotionModel::turn_rate_2d(double omega, double q_x, double q_y) {
  return {Kind::kTurnRate2d, omega, {q_x, q_y}};
}

MotionModel MotionModel::cv_3d(double q_x, double q_y, double q_z) {
  return {Kind::kCv3d, 0.0, {q_x, q_y, q_z}};
}

LinearDynamics MotionModel::discretize(double dt) const {
  switch (kind) {
    case Kind::kNcv2d:
      return build_ncv_2d(dt, q.at(0), q.at(1));
    case Kind::kTurnRate2d:
      return build_turn_rate_2d(dt, omega, q.at(0), q.at(1));
    case Kind::kCv3d:
      return build_cv_3d(dt, q.at(0), q.at(1), q.at(2));
  }
  throw InvalidArgument("unknown motion model");
}

// ---------------------------------------------------------------------------

MeasurementModel::MeasurementModel(Function h, Matrix R, std::vector<bool> angle_mask,
                                   Eigen::Index state_dim, JacobianFunction jacobian,
                                   std::string sensor_label)
    : h_(std::move(h)),
      R_(std::move(R)),
      angle_mask_(std::move(angle_mask)),
      state_dim_(state_dim),
      jacobian_(std::move(jacobian)),
      sensor_label_(std::move(sensor_label)) {
  if (R_.rows() != R_.cols()) throw InvalidArgument("R must be square");
  if (static_cast<Eigen::Index>(angle_mask_.size()) != R_.rows())
    throw InvalidArgument("angle mask length must equal measurement dimension");
  if ((R_ - R_.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidArgument("R must be symmetric");
  if (!is_psd(R_)) throw InvalidArgument("R must be positive semidefinite");
}

Vector MeasurementModel::wrap(Vector z) const {
  for (size_t i = 0; i < angle_mask_.size(); ++i)
    if (angle_mask_[i]) z[static_cast<Eigen::Index>(i)] = wrap_angle(z[static_cast<Eigen::Index>(i)]);
  return z;
}

Vector MeasurementModel::evaluate(const Vector& x) const {
  if (x.size() != state_dim_)
    throw InvalidArgument("state has length " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(state_dim_));
  return wrap(h_(x));
}

Vector MeasurementModel::residual(const Vector& a, const Vector& b) const {
  return wrap(a - b);
}

Matrix MeasurementModel::numeric_jacobian(const Vector& x) const {
  Matrix J(meas_dim(), state_dim_);
  Vector probe = x;
  for (Eigen::Index i = 0; i < state_dim_; ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + step;
    const Vector plus = evaluate(probe);
    probe[i] = x[i] - step;
    const Vector minus = evaluate(probe);
    probe[i] = x[i];
    J.col(i) = residual(plus, minus) / (2.0 * step);
  }
  return J;
}

Matrix MeasurementModel::jacobian(const Vector& x) const {
  if (jacobian_) {
    if (x.size() != state_dim_) throw InvalidArgument("state dimension mismatch");
    return jacobian_(x);
  }
  return numeric_jacobian(x);
}

Vector MeasurementModel::invert(const Vector& z) const {
  if (!inverse_) throw InvalidArgument("measurement model " + sensor_label_ + " is not invertible");
  return inverse_(z);
}

// ---------------------------------------------------------------------------

MeasurementModelPtr build_linear(Matrix H, Matrix R, std::string label) {
  const Eigen::Index n = H.cols();
  const std::vector<bool> mask(static_cast<size_t>(H.rows()), false);
  auto h = [H](const Vector& x) -> Vector { return H * x; };
  auto jac = [H](const Vector&) -> Matrix { return H; };
  return std::make_shared<MeasurementModel>(h, std::move(R), mask, n, jac, std::move(label));
}

MeasurementModelPtr build_range_bearing(const SensorPose& sensor, Matrix R) {
  if (sensor.position.size() != 2) throw InvalidArgument("range-bearing sensor must be 2D");
  if (R.rows() != 2) throw InvalidArgument("range-bearing R must be 2x2");
  if (sensor.max_range && !(*sensor.max_range > 0.0))
    throw InvalidArgument("sensor max_range must be positive");
  const double rn = sensor.position[0];
  const double re = sensor.position[1];

  auto h = [rn, re](const Vector& x) -> Vector {
    const double dn = x[0] - rn;
    const double de = x[2] - re;
    const double r = std::hypot(dn, de);
    if (r < 1e-9) throw DegenerateGeometry("target coincides with the sensor");
    return Eigen::Vector2d(r, std::atan2(de, dn));
  };
  auto jac = [rn, re](const Vector& x) -> Matrix {
    const double dn = x[0] - rn;
    const double de = x[2] - re;
    const double r2 = dn * dn + de * de;
    const double r = std::sqrt(r2);
    if (r < 1e-9) throw DegenerateGeometry("target coincides with the sensor");
    Matrix J = Matrix::Zero(2, 4);
    J(0, 0) = dn / r;
    J(0, 2) = de / r;
    J(1, 0) = -de / r2;
    J(1, 2) = dn / r2;
    return J;
  };
  auto model = std::make_shared<MeasurementModel>(h, std::move(R), std::vector<bool>{false, true},
                                                  4, jac, sensor.label);
  model->set_inverse([rn, re](const Vector& z) -> Vector {
    return Eigen::Vector2d(rn + z[0] * std::cos(z[1]), re + z[0] * std::sin(z[1]));
  });
  model->set_sensor(sensor);
  return model;
}

MeasurementModelPtr build_az_el_range(const SensorPose& sensor, Matrix R) {
  if (sensor.position.size() != 3) throw InvalidArgument("elevation-bearing-range sensor must be 3D");
  if (R.rows() != 3) throw InvalidArgument("elevation-bearing-range R must be 3x3");
  if (sensor.max_range && !(*sensor.max_range > 0.0))
    throw InvalidArgument("sensor max_range must be positive");
  const Eigen::Vector3d origin = sensor.position;

  auto h = [origin](const Vector& x) -> Vector {
    const double dn = x[0] - origin[0];
    const double de = x[2] - origin[1];
    const double du = x[4] - origin[2];
    const double horiz = std::hypot(dn, de);
    const double rho = std::hypot(horiz, du);
    if (rho < 1e-9) throw DegenerateGeometry("target coincides with the sensor");
    const double el = std::asin(std::clamp(du / rho, -1.0, 1.0));
    const double bearing = horiz < 1e-9 ? 0.0 : std::atan2(de, dn);
    return Eigen::Vector3d(el, bearing, rho);
  };
  auto jac = [origin](const Vector& x) -> Matrix {
    const double dn = x[0] - origin[0];
    const double de = x[2] - origin[1];
    const double du = x[4] - origin[2];
    const double h2 = dn * dn + de * de;
    const double horiz = std::sqrt(h2);
    const double rho2 = h2 + du * du;
    const double rho = std::sqrt(rho2);
    if (rho < 1e-9) throw DegenerateGeometry("target coincides with the sensor");
    Matrix J = Matrix::Zero(3, 6);
    if (horiz >= 1e-9) {
      J(0, 0) = -du * dn / (rho2 * horiz);
      J(0, 2) = -du * de / (rho2 * horiz);
      J(1, 0) = -de / h2;
      J(1, 2) = dn / h2;
    }
    J(0, 4) = horiz / rho2;
    J(2, 0) = dn / rho;
    J(2, 2) = de / rho;
    J(2, 4) = du / rho;
    return J;
  };
  auto model = std::make_shared<MeasurementModel>(
      h, std::move(R), std::vector<bool>{true, true, false}, 6, jac, sensor.label);
  model->set_inverse([origin](const Vector& z) -> Vector {
    const double el = z[0];
    const double b = z[1];
    const double rho = z[2];
    return Eigen::Vector3d(origin[0] + rho * std::cos(el) * std::cos(b),
                           origin[1] + rho * std::cos(el) * std::sin(b),
                           origin[2] + rho * std::sin(el));
  });
  model->set_sensor(sensor);
  return model;
}

// ---------------------------------------------------------------------------

ModelSwitchMatrix::ModelSwitchMatrix(Matrix T) : T_(std::move(T)) {
  if (T_.rows() == 0 || T_.rows() != T_.cols())
    throw InvalidArgument("switch matrix must be square and non-empty");
  for (Eigen::Index r = 0; r < T_.rows(); ++r) {
    for (Eigen::Index c = 0; c < T_.cols(); ++c) {
      if (!(T_(r, c) >= 0.0 && T_(r, c) <= 1.0))
        throw InvalidArgument("switch matrix entry (" + std::to_string(r) + "," +
                              std::to_string(c) + ") outside [0,1]");
    }
    const double sum = T_.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "switch matrix row " << r << " sums to " << sum << ", expected 1";
      throw InvalidArgument(msg.str());
    }
  }
}

int ModelSwitchMatrix::sample_next(int current, Rng& rng) const {
  if (current < 0 || current >= T_.rows()) throw InvalidArgument("model index out of range");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index c = 0; c < T_.cols(); ++c) {
    if (T_(current, c) <= 0.0) continue;
    acc += T_(current, c);
    last_positive = c;
    if (u < acc) return static_cast<int>(c);
  }
  // rounding left u >= acc
  return static_cast<int>(last_positive);
}

}  // namespace skytrack
