#pragma once

#include <Eigen/Dense>

namespace skytrack::geodesy {

struct Geodetic {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double alt_m = 0.0;  // above the WGS-84 ellipsoid
};

inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;

Eigen::Vector3d geodetic_to_ecef(const Geodetic& g);
/// Iterated to sub-micrometer convergence.
Geodetic ecef_to_geodetic(const Eigen::Vector3d& ecef);

/// Tangent-plane frame at an origin. Local coordinates are ordered
/// (north, east, up).
class LocalFrame {
 public:
  explicit LocalFrame(const Geodetic& origin);

  Eigen::Vector3d to_local(const Geodetic& g) const;
  Geodetic to_geodetic(const Eigen::Vector3d& neu) const;

  const Geodetic& origin() const { return origin_; }

 private:
  Geodetic origin_;
  Eigen::Vector3d origin_ecef_;
  Eigen::Matrix3d ecef_to_neu_;
};

}  // namespace skytrack::geodesy
