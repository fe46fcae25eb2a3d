#include "geoprop/geodesy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"

namespace geoprop {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kDegenerateNorm = 1e-12;

std::array<double, 3> to_unit_vector(const GeoPoint& p) {
  const double lat = p.lat() * kDegToRad;
  const double lon = p.lon() * kDegToRad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

}  // namespace

double normalize_longitude(double lon) {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  return wrapped - 180.0;
}

GeoPoint::GeoPoint(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw Error(ErrorKind::InvalidArgument, "coordinates must be finite");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw Error(ErrorKind::InvalidArgument, "latitude out of range");
  }
  lat_ = lat;
  lon_ = normalize_longitude(lon);
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = (b.lat() - a.lat()) * kDegToRad;
  const double dlon = (b.lon() - a.lon()) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  double h = s_lat * s_lat +
             std::cos(a.lat() * kDegToRad) * std::cos(b.lat() * kDegToRad) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

GeoPoint midpoint(std::span<const GeoPoint> points) {
  if (points.empty()) throw Error(ErrorKind::EmptySet, "midpoint of an empty point set");
  if (std::all_of(points.begin() + 1, points.end(),
                  [&](const GeoPoint& p) { return p == points.front(); })) {
    return points.front();
  }

  double x = 0.0, y = 0.0, z = 0.0;
  for (const auto& p : points) {
    const auto v = to_unit_vector(p);
    x += v[0];
    y += v[1];
    z += v[2];
  }
  const double n = static_cast<double>(points.size());
  x /= n;
  y /= n;
  z /= n;
  if (std::sqrt(x * x + y * y + z * z) < kDegenerateNorm) {
    throw Error(ErrorKind::DegenerateMidpoint, "point set has no well-defined midpoint");
  }
  const double lat = std::atan2(z, std::hypot(x, y)) / kDegToRad;
  const double lon = std::atan2(y, x) / kDegToRad;
  return GeoPoint(std::clamp(lat, -90.0, 90.0), lon);
}

const Region& assign_region(const GeoPoint& point, std::span<const Region> regions) {
  if (regions.empty()) throw Error(ErrorKind::NoRegions, "no regions to assign from");
  const Region* best = nullptr;
  double best_distance = 0.0;
  for (const auto& region : regions) {
    if (!region.centroid) continue;
    const double d = haversine(point, *region.centroid);
    if (best == nullptr || d < best_distance || (d == best_distance && region.key < best->key)) {
      best = &region;
      best_distance = d;
    }
  }
  if (best == nullptr) throw Error(ErrorKind::NoRegions, "no region has a centroid");
  return *best;
}

std::vector<Region> load_region_table(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw Error(ErrorKind::FormatMismatch, path.string() + ": missing header");

  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::FormatMismatch,
                  path.string() + ": missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t key_col = column("key");
  const std::size_t lat_col = column("lat");
  const std::size_t lon_col = column("lon");

  std::vector<Region> regions;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::size_t needed = std::max({key_col, lat_col, lon_col});
    if (row.size() <= needed || row[key_col].empty()) {
      throw Error(ErrorKind::FormatMismatch,
                  path.string() + ": bad region row " + std::to_string(i + 1));
    }
    try {
      regions.push_back({row[key_col], GeoPoint(std::stod(row[lat_col]), std::stod(row[lon_col]))});
    } catch (const std::exception&) {
      throw Error(ErrorKind::FormatMismatch,
                  path.string() + ": bad coordinates on row " + std::to_string(i + 1));
    }
  }
  return regions;
}

}  // namespace geoprop
