#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoprop/corpus.hpp"
#include "geoprop/geodesy.hpp"

namespace geoprop {

/// Message counts per region key.
class RegionCounts {
 public:
  RegionCounts() = default;
  RegionCounts(std::initializer_list<std::pair<const std::string, std::uint64_t>> init);

  void add(std::string_view key, std::uint64_t n = 1);

  std::uint64_t total() const noexcept { return total_; }
  const std::map<std::string, std::uint64_t, std::less<>>& counts() const noexcept {
    return counts_;
  }

 private:
  std::map<std::string, std::uint64_t, std::less<>> counts_;
  std::uint64_t total_ = 0;
};

/// Largest share of messages held by a single region.
double focus(const RegionCounts& counts);

/// Shannon entropy (bits) of the regional distribution; 0 log 0 = 0.
double entropy(const RegionCounts& counts);

/// Mean great-circle distance from `center` to every point.
double spread(std::span<const GeoPoint> points, const GeoPoint& center);
/// Same, with `center` = midpoint(points).
double spread(std::span<const GeoPoint> points);

enum class SpreadMode {
  /// Mean over every message point.
  PerMessage,
  /// Mean over one representative point per region (the midpoint of that
  /// region's messages), the literal sum-over-locations form.
  PerRegion,
};

struct LocalityReport {
  double focus = 0.0;
  double entropy_bits = 0.0;
  double spread_km = 0.0;
  GeoPoint midpoint{0.0, 0.0};
  std::size_t n = 0;
};

/// Focus and entropy over the messages' regions, spread over their points.
/// Every message must carry both; throws EmptySet on an empty input.
LocalityReport locality_report(std::span<const Message> messages,
                               SpreadMode mode = SpreadMode::PerMessage);
LocalityReport locality_report(std::span<const Message* const> messages,
                               SpreadMode mode = SpreadMode::PerMessage);

/// Fraction of messages within each threshold (inclusive) of `center`.
/// Thresholds must be strictly ascending.
std::vector<double> distance_cdf(std::span<const Message> messages, const GeoPoint& center,
                                 std::span<const double> thresholds_km);

enum class DistanceUnit { Kilometers, Miles };

double from_km(double km, DistanceUnit unit);
double to_km(double value, DistanceUnit unit);
std::string_view unit_suffix(DistanceUnit unit);

struct ScopedReport {
  std::string scope;
  LocalityReport report;
};

/// Columns: scope, n, focus, entropy_bits, spread_<unit>, midpoint_lat,
/// midpoint_lon.
void write_locality_csv(std::ostream& out, std::span<const ScopedReport> rows,
                        DistanceUnit unit = DistanceUnit::Kilometers);

}  // namespace geoprop
