#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geoprop {

/// Conventional mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kKmPerMile = 1.609344;

/// A WGS84 coordinate in degrees. Latitude must lie in [-90, 90]; longitude
/// is wrapped into [-180, 180) on construction.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

double normalize_longitude(double lon);

/// A named spatial bucket (state, country, ...) used by focus and entropy.
struct Region {
  std::string key;
  std::optional<GeoPoint> centroid;
};

/// Great-circle distance in kilometers on a sphere of radius kEarthRadiusKm.
double haversine(const GeoPoint& a, const GeoPoint& b);

/// Curvature-aware center of a point set: mean of the unit 3-vectors,
/// projected back onto the sphere. Throws DegenerateMidpoint when the mean
/// vector vanishes (e.g. two antipodal points).
GeoPoint midpoint(std::span<const GeoPoint> points);

/// Nearest-centroid region. Ties go to the lexicographically smaller key;
/// regions without a centroid are skipped.
const Region& assign_region(const GeoPoint& point, std::span<const Region> regions);

/// Reads a `key,lat,lon` CSV (header required).
std::vector<Region> load_region_table(const std::filesystem::path& path);

}  // namespace geoprop
