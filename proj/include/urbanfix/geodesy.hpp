#pragma once

namespace urbanfix {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

// WGS84 coordinate in decimal degrees. Construction validates latitude and
// wraps longitude into [-180, 180).
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat, double lon);

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

// Spherical earth. The default radius is the conventional mean radius.
struct EarthModel {
  static constexpr double kDefaultRadiusM = 6371000.0;

  EarthModel() = default;
  explicit EarthModel(double radius);

  double radius_m = kDefaultRadiusM;
};

enum class DistanceBackend {
  // Haversine form; well conditioned for short separations.
  kStable,
  // Spherical law of cosines evaluated literally, arccos argument clamped.
  kLawOfCosines,
};

double great_circle_distance(const GeoPoint& p1, const GeoPoint& p2,
                             const EarthModel& model = EarthModel{},
                             DistanceBackend backend = DistanceBackend::kStable);

// Point reached by travelling `distance_m` along the great circle leaving
// `origin` at `bearing_deg` (clockwise from north).
GeoPoint destination_point(const GeoPoint& origin, double bearing_deg,
                           double distance_m,
                           const EarthModel& model = EarthModel{});

// Wraps any finite heading into [0, 360).
double normalize_heading(double deg);

// Minimal circular separation of two headings, in [0, 180].
double heading_difference(double h1, double h2);

}  // namespace urbanfix
