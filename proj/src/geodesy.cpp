#include "urbanfix/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "urbanfix/error.hpp"

namespace urbanfix {

namespace {

double wrap_longitude(double lon) {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  wrapped -= 180.0;
  // fmod can land exactly on 180 after the shift for inputs just below -180.
  if (wrapped >= 180.0) wrapped -= 360.0;
  return wrapped;
}

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 ||
      lat > 90.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid coordinate: lat=" + std::to_string(lat) +
                    " lon=" + std::to_string(lon));
  }
  lat_ = lat;
  lon_ = wrap_longitude(lon);
}

EarthModel::EarthModel(double radius) : radius_m(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "earth radius must be positive");
  }
}

double great_circle_distance(const GeoPoint& p1, const GeoPoint& p2,
                             const EarthModel& model,
                             DistanceBackend backend) {
  const double lat1 = deg_to_rad(p1.lat());
  const double lat2 = deg_to_rad(p2.lat());
  const double dlon = deg_to_rad(p2.lon() - p1.lon());

  if (backend == DistanceBackend::kLawOfCosines) {
    const double c = std::sin(lat1) * std::sin(lat2) +
                     std::cos(lat1) * std::cos(lat2) * std::cos(dlon);
    return std::acos(std::clamp(c, -1.0, 1.0)) * model.radius_m;
  }

  // The terms are symmetric under swapping p1 and p2 (sin^2 is even and the
  // cos product commutes), so the result is bitwise symmetric.
  const double sdlat = std::sin(0.5 * (lat2 - lat1));
  const double sdlon = std::sin(0.5 * dlon);
  double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * model.radius_m * std::asin(std::sqrt(h));
}

GeoPoint destination_point(const GeoPoint& origin, double bearing_deg,
                           double distance_m, const EarthModel& model) {
  if (!std::isfinite(bearing_deg) || !std::isfinite(distance_m) || distance_m < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "bearing must be finite and distance finite and non-negative");
  }
  const double delta = distance_m / model.radius_m;
  const double theta = deg_to_rad(bearing_deg);
  const double lat1 = deg_to_rad(origin.lat());
  const double lon1 = deg_to_rad(origin.lon());
  const double sin_lat2 = std::sin(lat1) * std::cos(delta) +
                          std::cos(lat1) * std::sin(delta) * std::cos(theta);
  const double lat2 = std::asin(std::clamp(sin_lat2, -1.0, 1.0));
  const double lon2 =
      lon1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(lat1),
                        std::cos(delta) - std::sin(lat1) * sin_lat2);
  return {std::clamp(rad_to_deg(lat2), -90.0, 90.0), rad_to_deg(lon2)};
}

double normalize_heading(double deg) {
  if (!std::isfinite(deg)) {
    throw Error(ErrorCode::kInvalidArgument, "heading must be finite");
  }
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

double heading_difference(double h1, double h2) {
  const double d = std::fabs(normalize_heading(h1) - normalize_heading(h2));
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace urbanfix
