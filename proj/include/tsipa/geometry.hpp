#pragma once

#include <Eigen/Core>

namespace tsipa {

/// Position in the local right-handed Cartesian frame, meters.
using Position3 = Eigen::Vector3d;
/// Free 3-vector (directions, displacements).
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
/// Speed of light in vacuum, m/s (exact by definition).
inline constexpr double kSpeedOfLight = 299792458.0;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

double euclidean_distance(const Position3& a, const Position3& b);

bool is_finite(const Position3& p);

/// Unit vector from elevation (above the x-y plane) and azimuth
/// (counter-clockwise from +x), both radians.
Vec3 direction_from_angles(double elevation_rad, double azimuth_rad);

/// Elevation and azimuth of a (not necessarily unit) direction, radians.
/// Azimuth is in (-pi, pi].
struct ElevationAzimuth {
  double elevation_rad;
  double azimuth_rad;
};
ElevationAzimuth angles_from_direction(const Vec3& d);

/// Wraps an angle in radians to (-pi, pi].
double wrap_pi(double rad);

}  // namespace tsipa
