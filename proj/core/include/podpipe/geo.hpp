#pragma once

#include <span>
#include <vector>

namespace podpipe {

// WGS84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

/// Maximum origin-to-point distance the local projection accepts. The
/// flat-field approximation degrades beyond this.
inline constexpr double kMaxProjectionRangeM = 10000.0;

struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

/// East/north meters in the tangent plane anchored at a projection origin.
struct LocalPoint {
  double east_m = 0.0;
  double north_m = 0.0;
};

struct PathSample {
  double time_s = 0.0;
  LocalPoint position;
  double odometer_m = 0.0;
};

/// Throws a validation error naming the offending field when the
/// coordinates are outside [-90, 90] x [-180, 180].
void validate(const GeoPoint& p);

/// Meridian radius of curvature at the given latitude, meters.
double meridian_radius_m(double latitude_deg);

/// Radius of the parallel circle (prime-vertical radius times cos) at
/// the given latitude, meters.
double parallel_radius_m(double latitude_deg);

/// Equirectangular projection onto the tangent plane at `origin`, with
/// ellipsoid radii evaluated at the origin latitude. Accurate to
/// millimeters over a field-sized extent; refuses points farther than
/// kMaxProjectionRangeM from the origin.
LocalPoint project_to_local(const GeoPoint& origin, const GeoPoint& p);

/// Exact inverse of project_to_local for the same origin.
GeoPoint unproject_from_local(const GeoPoint& origin, const LocalPoint& p);

/// Sum of Euclidean segment lengths along the polyline. At least one
/// point is required.
double path_distance_m(std::span<const LocalPoint> points);

}  // namespace podpipe
