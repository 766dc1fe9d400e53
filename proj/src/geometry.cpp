#include "tsipa/geometry.hpp"

#include <cmath>

namespace tsipa {

double euclidean_distance(const Position3& a, const Position3& b) {
  return (a - b).norm();
}

bool is_finite(const Position3& p) { return p.allFinite(); }

Vec3 direction_from_angles(double elevation_rad, double azimuth_rad) {
  const double ce = std::cos(elevation_rad);
  return {ce * std::cos(azimuth_rad), ce * std::sin(azimuth_rad),
          std::sin(elevation_rad)};
}

ElevationAzimuth angles_from_direction(const Vec3& d) {
  const double horizontal = std::hypot(d.x(), d.y());
  return {std::atan2(d.z(), horizontal), std::atan2(d.y(), d.x())};
}

double wrap_pi(double rad) {
  double w = std::remainder(rad, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace tsipa
