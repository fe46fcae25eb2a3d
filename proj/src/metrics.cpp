#include "geoprop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"

namespace geoprop {

RegionCounts::RegionCounts(std::initializer_list<std::pair<const std::string, std::uint64_t>> init) {
  for (const auto& [key, n] : init) add(key, n);
}

void RegionCounts::add(std::string_view key, std::uint64_t n) {
  auto it = counts_.find(key);
  if (it == counts_.end()) it = counts_.emplace(std::string(key), 0).first;
  it->second += n;
  total_ += n;
}

double focus(const RegionCounts& counts) {
  if (counts.total() == 0) throw Error(ErrorKind::EmptySet, "focus of an empty message set");
  std::uint64_t largest = 0;
  for (const auto& [key, n] : counts.counts()) largest = std::max(largest, n);
  return static_cast<double>(largest) / static_cast<double>(counts.total());
}

double entropy(const RegionCounts& counts) {
  if (counts.total() == 0) throw Error(ErrorKind::EmptySet, "entropy of an empty message set");
  const double total = static_cast<double>(counts.total());
  double h = 0.0;
  for (const auto& [key, n] : counts.counts()) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double spread(std::span<const GeoPoint> points, const GeoPoint& center) {
  if (points.empty()) throw Error(ErrorKind::EmptySet, "spread of an empty point set");
  double sum = 0.0;
  for (const auto& p : points) sum += haversine(center, p);
  return sum / static_cast<double>(points.size());
}

double spread(std::span<const GeoPoint> points) { return spread(points, midpoint(points)); }

LocalityReport locality_report(std::span<const Message* const> messages, SpreadMode mode) {
  if (messages.empty()) throw Error(ErrorKind::EmptySet, "locality of an empty message set");

  RegionCounts counts;
  std::vector<GeoPoint> points;
  points.reserve(messages.size());
  std::map<std::string_view, std::vector<GeoPoint>> by_region;
  for (const Message* m : messages) {
    if (!m->region || !m->point) {
      throw Error(ErrorKind::InvalidArgument,
                  "message '" + m->id + "' lacks a region or a location");
    }
    counts.add(*m->region);
    points.push_back(*m->point);
    if (mode == SpreadMode::PerRegion) by_region[*m->region].push_back(*m->point);
  }

  LocalityReport report;
  report.n = messages.size();
  report.focus = focus(counts);
  report.entropy_bits = entropy(counts);
  report.midpoint = midpoint(points);
  if (mode == SpreadMode::PerMessage) {
    report.spread_km = spread(points, report.midpoint);
  } else {
    std::vector<GeoPoint> locations;
    locations.reserve(by_region.size());
    for (const auto& [key, region_points] : by_region) locations.push_back(midpoint(region_points));
    report.spread_km = spread(locations, report.midpoint);
  }
  return report;
}

LocalityReport locality_report(std::span<const Message> messages, SpreadMode mode) {
  std::vector<const Message*> refs;
  refs.reserve(messages.size());
  for (const auto& m : messages) refs.push_back(&m);
  return locality_report(std::span<const Message* const>(refs), mode);
}

std::vector<double> distance_cdf(std::span<const Message> messages, const GeoPoint& center,
                                 std::span<const double> thresholds_km) {
  if (messages.empty()) throw Error(ErrorKind::EmptySet, "distance CDF of an empty message set");
  for (std::size_t i = 1; i < thresholds_km.size(); ++i) {
    if (!(thresholds_km[i] > thresholds_km[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "CDF thresholds must be strictly ascending");
    }
  }

  std::vector<double> distances;
  distances.reserve(messages.size());
  for (const auto& m : messages) {
    if (!m.point) throw Error(ErrorKind::InvalidArgument, "message '" + m.id + "' has no location");
    distances.push_back(haversine(center, *m.point));
  }
  std::sort(distances.begin(), distances.end());

  std::vector<double> fractions;
  fractions.reserve(thresholds_km.size());
  const double n = static_cast<double>(distances.size());
  for (double t : thresholds_km) {
    const auto within = std::upper_bound(distances.begin(), distances.end(), t) - distances.begin();
    fractions.push_back(static_cast<double>(within) / n);
  }
  return fractions;
}

double from_km(double km, DistanceUnit unit) {
  return unit == DistanceUnit::Miles ? km / kKmPerMile : km;
}

double to_km(double value, DistanceUnit unit) {
  return unit == DistanceUnit::Miles ? value * kKmPerMile : value;
}

std::string_view unit_suffix(DistanceUnit unit) {
  return unit == DistanceUnit::Miles ? "mi" : "km";
}

void write_locality_csv(std::ostream& out, std::span<const ScopedReport> rows, DistanceUnit unit) {
  out << "scope,n,focus,entropy_bits,spread_" << unit_suffix(unit) << ",midpoint_lat,midpoint_lon\n";
  for (const auto& [scope, r] : rows) {
    out << csv_escape(scope) << ',' << r.n << ',' << format_double(r.focus) << ','
        << format_double(r.entropy_bits) << ',' << format_double(from_km(r.spread_km, unit)) << ','
        << format_double(r.midpoint.lat()) << ',' << format_double(r.midpoint.lon()) << '\n';
  }
}

}  // namespace geoprop
