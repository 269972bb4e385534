#include "podpipe/geo.hpp"

#include <cmath>
#include <numbers>

#include "podpipe/errors.hpp"
#include "podpipe/series.hpp"
#include "podpipe/textio.hpp"

namespace podpipe {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

void validate(const GeoPoint& p) {
  if (!(p.latitude_deg >= -90.0 && p.latitude_deg <= 90.0))
    fail(Errc::validation, "latitude_deg out of range [-90, 90]: " + canon(p.latitude_deg));
  if (!(p.longitude_deg >= -180.0 && p.longitude_deg <= 180.0))
    fail(Errc::validation, "longitude_deg out of range [-180, 180]: " + canon(p.longitude_deg));
}

double meridian_radius_m(double latitude_deg) {
  const double s = std::sin(latitude_deg * kDegToRad);
  const double w = 1.0 - kWgs84E2 * s * s;
  return kWgs84A * (1.0 - kWgs84E2) / (w * std::sqrt(w));
}

double parallel_radius_m(double latitude_deg) {
  const double lat = latitude_deg * kDegToRad;
  const double s = std::sin(lat);
  return kWgs84A * std::cos(lat) / std::sqrt(1.0 - kWgs84E2 * s * s);
}

LocalPoint project_to_local(const GeoPoint& origin, const GeoPoint& p) {
  validate(origin);
  validate(p);
  const LocalPoint out{
      (p.longitude_deg - origin.longitude_deg) * kDegToRad * parallel_radius_m(origin.latitude_deg),
      (p.latitude_deg - origin.latitude_deg) * kDegToRad * meridian_radius_m(origin.latitude_deg)};
  const double d = std::hypot(out.east_m, out.north_m);
  if (d >= kMaxProjectionRangeM)
    fail(Errc::validation,
         "point is " + canon(d) + " m from origin; local projection is limited to " +
             canon(kMaxProjectionRangeM) + " m");
  return out;
}

GeoPoint unproject_from_local(const GeoPoint& origin, const LocalPoint& p) {
  validate(origin);
  const GeoPoint out{
      origin.latitude_deg + p.north_m / (kDegToRad * meridian_radius_m(origin.latitude_deg)),
      origin.longitude_deg + p.east_m / (kDegToRad * parallel_radius_m(origin.latitude_deg))};
  validate(out);
  return out;
}

double path_distance_m(std::span<const LocalPoint> points) {
  if (points.empty()) fail(Errc::validation, "path_distance: empty path");
  NeumaierSum acc;
  for (std::size_t i = 1; i < points.size(); ++i) {
    acc.add(std::hypot(points[i].east_m - points[i - 1].east_m,
                       points[i].north_m - points[i - 1].north_m));
  }
  return acc.value();
}

}  // namespace podpipe
