#include "skytrack/geodesy.hpp"

#include "skytrack/common.hpp"

#include <cmath>

namespace skytrack::geodesy {

namespace {
constexpr double kE2 = kFlattening * (2.0 - kFlattening);
}

Eigen::Vector3d geodetic_to_ecef(const Geodetic& g) {
  const double lat = deg_to_rad(g.lat_deg);
  const double lon = deg_to_rad(g.lon_deg);
  const double s = std::sin(lat);
  const double n = kSemiMajor / std::sqrt(1.0 - kE2 * s * s);
  return {(n + g.alt_m) * std::cos(lat) * std::cos(lon),
          (n + g.alt_m) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - kE2) + g.alt_m) * s};
}

Geodetic ecef_to_geodetic(const Eigen::Vector3d& ecef) {
  const double x = ecef.x();
  const double y = ecef.y();
  const double z = ecef.z();
  const double p = std::hypot(x, y);
  const double lon = std::atan2(y, x);

  // Fixed-point iteration on latitude; converges to machine precision
  // within a handful of steps away from the poles.
  double lat = std::atan2(z, p * (1.0 - kE2));
  double alt = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double s = std::sin(lat);
    const double n = kSemiMajor / std::sqrt(1.0 - kE2 * s * s);
    alt = p / std::cos(lat) - n;
    const double next = std::atan2(z, p * (1.0 - kE2 * n / (n + alt)));
    if (std::abs(next - lat) < 1e-15) {
      lat = next;
      break;
    }
    lat = next;
  }
  const double s = std::sin(lat);
  const double n = kSemiMajor / std::sqrt(1.0 - kE2 * s * s);
  alt = p / std::cos(lat) - n;
  return {rad_to_deg(lat), rad_to_deg(lon), alt};
}

LocalFrame::LocalFrame(const Geodetic& origin)
    : origin_(origin), origin_ecef_(geodetic_to_ecef(origin)) {
  const double lat = deg_to_rad(origin.lat_deg);
  const double lon = deg_to_rad(origin.lon_deg);
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  ecef_to_neu_ << -sl * co, -sl * so, cl,
                  -so,      co,       0.0,
                  cl * co,  cl * so,  sl;
}

Eigen::Vector3d LocalFrame::to_local(const Geodetic& g) const {
  return ecef_to_neu_ * (geodetic_to_ecef(g) - origin_ecef_);
}

Geodetic LocalFrame::to_geodetic(const Eigen::Vector3d& neu) const {
  return ecef_to_geodetic(origin_ecef_ + ecef_to_neu_.transpose() * neu);
}

}  // namespace skytrack::geodesy
