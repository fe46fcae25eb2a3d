#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoprop/corpus.hpp"
#include "geoprop/metrics.hpp"

namespace geoprop {

inline constexpr std::int64_t kDefaultWindowSecs = 1800;
inline constexpr std::int64_t kDefaultHorizonSecs = 2 * 24 * 3600;

/// Half-open windows [origin + k*width, origin + (k+1)*width), k < count.
struct WindowSpec {
  std::int64_t origin = 0;
  std::int64_t width = kDefaultWindowSecs;
  std::size_t count = 0;

  /// Window count covering `horizon` seconds from `origin`.
  static WindowSpec covering(std::int64_t origin, std::int64_t horizon,
                             std::int64_t width = kDefaultWindowSecs);

  std::int64_t start(std::size_t k) const { return origin + static_cast<std::int64_t>(k) * width; }
  std::int64_t end() const { return start(count); }
  std::optional<std::size_t> index_of(std::int64_t timestamp) const;
};

struct WindowSeries {
  WindowSpec spec;
  std::vector<std::vector<std::string>> buckets;  // message ids per window
  std::vector<std::size_t> counts;
  std::size_t out_of_range = 0;
};

WindowSeries bucket(std::span<const Message> messages, const WindowSpec& spec);

/// Index of the largest count, earliest on ties. Throws EmptySeries when no
/// window holds a message.
std::size_t find_peak(const WindowSeries& series);

/// Locality report per window, looked up by id in `corpus`. Empty windows,
/// and windows whose midpoint is degenerate, have no entry.
std::vector<std::optional<LocalityReport>> metric_series(const WindowSeries& series,
                                                         const Corpus& corpus,
                                                         SpreadMode mode = SpreadMode::PerMessage);

struct AlignedSeries {
  WindowSeries series;
  std::size_t peak = 0;
  std::vector<double> minutes_from_peak;
};

AlignedSeries align_to_peak(const WindowSeries& series, std::size_t peak);

struct LowessOptions {
  double frac = 0.3;
  int robust_iters = 3;
};

struct LowessFit {
  std::vector<double> fitted;
  /// Neighborhoods whose weights summed to zero; those points fall back to
  /// the tricube-weighted mean without robustness weights.
  std::size_t degenerate_fits = 0;
};

/// Robust locally weighted linear regression evaluated at every x. x must be
/// ascending (ties allowed); fewer than two points are returned unchanged.
LowessFit lowess(std::span<const double> x, std::span<const double> y,
                 const LowessOptions& options = {});

struct TimelineRow {
  std::int64_t window_start = 0;
  double minutes_from_peak = 0.0;
  std::size_t count = 0;
  std::optional<LocalityReport> report;
  std::optional<double> focus_lowess;
  std::optional<double> entropy_lowess;
  std::optional<double> spread_lowess;
};

/// Builds the per-window table; when `smoothing` is set each metric is
/// smoothed over the windows that have a report.
std::vector<TimelineRow> build_timeline(const AlignedSeries& aligned,
                                        std::span<const std::optional<LocalityReport>> metrics,
                                        const std::optional<LowessOptions>& smoothing);

void write_timeline_csv(std::ostream& out, std::span<const TimelineRow> rows, bool with_lowess,
                        DistanceUnit unit = DistanceUnit::Kilometers);

}  // namespace geoprop
