#include "geoprop/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"

namespace geoprop {

WindowSpec WindowSpec::covering(std::int64_t origin, std::int64_t horizon, std::int64_t width) {
  if (width <= 0) throw Error(ErrorKind::InvalidArgument, "window width must be positive");
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  return {origin, width, static_cast<std::size_t>((horizon + width - 1) / width)};
}

std::optional<std::size_t> WindowSpec::index_of(std::int64_t timestamp) const {
  if (timestamp < origin || timestamp >= end()) return std::nullopt;
  return static_cast<std::size_t>((timestamp - origin) / width);
}

WindowSeries bucket(std::span<const Message> messages, const WindowSpec& spec) {
  if (spec.width <= 0) throw Error(ErrorKind::InvalidArgument, "window width must be positive");
  WindowSeries series;
  series.spec = spec;
  series.buckets.resize(spec.count);
  series.counts.assign(spec.count, 0);
  for (const auto& m : messages) {
    if (const auto k = spec.index_of(m.timestamp)) {
      series.buckets[*k].push_back(m.id);
      ++series.counts[*k];
    } else {
      ++series.out_of_range;
    }
  }
  return series;
}

std::size_t find_peak(const WindowSeries& series) {
  const auto it = std::max_element(series.counts.begin(), series.counts.end());
  if (it == series.counts.end() || *it == 0) {
    throw Error(ErrorKind::EmptySeries, "no window contains a message");
  }
  return static_cast<std::size_t>(it - series.counts.begin());
}

std::vector<std::optional<LocalityReport>> metric_series(const WindowSeries& series,
                                                         const Corpus& corpus, SpreadMode mode) {
  std::vector<std::optional<LocalityReport>> out(series.buckets.size());
  std::vector<const Message*> window;
  for (std::size_t k = 0; k < series.buckets.size(); ++k) {
    if (series.buckets[k].empty()) continue;
    window.clear();
    for (const auto& id : series.buckets[k]) {
      const Message* m = corpus.find(id);
      if (m == nullptr) throw Error(ErrorKind::InvalidArgument, "unknown message id '" + id + "'");
      window.push_back(m);
    }
    try {
      out[k] = locality_report(std::span<const Message* const>(window), mode);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMidpoint) throw;
    }
  }
  return out;
}

AlignedSeries align_to_peak(const WindowSeries& series, std::size_t peak) {
  if (peak >= series.counts.size()) throw Error(ErrorKind::InvalidArgument, "peak out of range");
  AlignedSeries aligned{series, peak, {}};
  aligned.minutes_from_peak.reserve(series.counts.size());
  for (std::size_t k = 0; k < series.counts.size(); ++k) {
    const auto offset = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(peak);
    aligned.minutes_from_peak.push_back(static_cast<double>(offset * series.spec.width) / 60.0);
  }
  return aligned;
}

// ---- LOWESS ---------------------------------------------------------------

namespace {

double tricube(double u) {
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

struct LocalFitter {
  std::span<const double> x;
  std::span<const double> y;
  double range;
  std::vector<double> w;

  // Weighted local linear fit at x[i] over [left, right]; robustness
  // weights are applied when `rw` is non-empty. Returns nullopt when every
  // weight is zero.
  std::optional<double> fit(std::size_t i, std::size_t left, std::size_t right,
                            std::span<const double> rw) {
    const std::size_t n = x.size();
    const double xs = x[i];
    const double h = std::max(xs - x[left], x[right] - xs);
    const double h9 = 0.999 * h;
    const double h1 = 0.001 * h;

    double total = 0.0;
    std::size_t j = left;
    for (; j < n; ++j) {
      w[j] = 0.0;
      const double r = std::abs(x[j] - xs);
      if (r <= h9) {
        w[j] = r <= h1 ? 1.0 : tricube(r / h);
        if (!rw.empty()) w[j] *= rw[j];
        total += w[j];
      } else if (x[j] > xs) {
        break;
      }
    }
    const std::size_t last = j - 1;
    if (total <= 0.0) return std::nullopt;

    for (j = left; j <= last; ++j) w[j] /= total;
    if (h > 0.0) {
      double center = 0.0;
      for (j = left; j <= last; ++j) center += w[j] * x[j];
      double slope = xs - center;
      double spread = 0.0;
      for (j = left; j <= last; ++j) spread += w[j] * (x[j] - center) * (x[j] - center);
      if (std::sqrt(spread) > 0.001 * range) {
        slope /= spread;
        for (j = left; j <= last; ++j) w[j] *= 1.0 + slope * (x[j] - center);
      }
    }
    double value = 0.0;
    for (j = left; j <= last; ++j) value += w[j] * y[j];
    return value;
  }
};

double median_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  return (*std::max_element(v.begin(), mid) + *mid) / 2.0;
}

}  // namespace

LowessFit lowess(std::span<const double> x, std::span<const double> y,
                 const LowessOptions& options) {
  const std::size_t n = x.size();
  if (y.size() != n) throw Error(ErrorKind::InvalidArgument, "lowess: x and y differ in length");
  if (!(options.frac > 0.0 && options.frac <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lowess: frac must lie in (0, 1]");
  }
  if (options.robust_iters < 0) {
    throw Error(ErrorKind::InvalidArgument, "lowess: robust_iters must be non-negative");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::InvalidArgument, "lowess: non-finite input");
    }
    if (i > 0 && x[i] < x[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "lowess: x must be ascending");
    }
  }
  if (n < 2) return {std::vector<double>(y.begin(), y.end()), 0};

  // Neighbourhood size ceil(frac * n), guarding against 0.3 * 20 = 6.000...1.
  const auto span = static_cast<std::size_t>(
      std::clamp<double>(std::ceil(options.frac * static_cast<double>(n) - 1e-9), 2.0,
                         static_cast<double>(n)));

  double y_scale = 0.0;
  for (double v : y) y_scale = std::max(y_scale, std::abs(v));

  LocalFitter fitter{x, y, x[n - 1] - x[0], std::vector<double>(n, 0.0)};
  LowessFit result;
  result.fitted.assign(n, 0.0);
  std::vector<double> robustness;
  std::vector<double> residuals(n);
  std::vector<double> scratch(n);

  for (int iter = 0; iter <= options.robust_iters; ++iter) {
    std::size_t left = 0;
    std::size_t right = span - 1;
    for (std::size_t i = 0; i < n; ++i) {
      while (right < n - 1 && x[i] - x[left] > x[right + 1] - x[i]) {
        ++left;
        ++right;
      }
      auto value = fitter.fit(i, left, right, robustness);
      if (!value) {
        ++result.degenerate_fits;
        value = fitter.fit(i, left, right, {});
      }
      result.fitted[i] = value.value_or(y[i]);
    }
    if (iter == options.robust_iters) break;

    double mean_abs = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residuals[i] = y[i] - result.fitted[i];
      scratch[i] = std::abs(residuals[i]);
      mean_abs += scratch[i];
      max_abs = std::max(max_abs, scratch[i]);
    }
    mean_abs /= static_cast<double>(n);
    // An exact fit leaves only rounding noise; weighting by it would discard
    // arbitrary points.
    if (max_abs <= 1e-12 * y_scale) break;
    const double cmad = 6.0 * median_in_place(scratch);
    if (cmad < 1e-7 * mean_abs) break;  // residuals are effectively zero

    robustness.assign(n, 0.0);
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::abs(residuals[i]);
      if (r <= c1) {
        robustness[i] = 1.0;
      } else if (r <= c9) {
        const double u = r / cmad;
        robustness[i] = (1.0 - u * u) * (1.0 - u * u);
      }
    }
  }
  return result;
}

// ---- timeline table -------------------------------------------------------

std::vector<TimelineRow> build_timeline(const AlignedSeries& aligned,
                                        std::span<const std::optional<LocalityReport>> metrics,
                                        const std::optional<LowessOptions>& smoothing) {
  const auto& series = aligned.series;
  if (metrics.size() != series.counts.size()) {
    throw Error(ErrorKind::InvalidArgument, "metric series does not match the windows");
  }
  std::vector<TimelineRow> rows(series.counts.size());
  std::vector<std::size_t> observed;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].window_start = series.spec.start(k);
    rows[k].minutes_from_peak = aligned.minutes_from_peak[k];
    rows[k].count = series.counts[k];
    rows[k].report = metrics[k];
    if (metrics[k]) observed.push_back(k);
  }
  if (!smoothing || observed.empty()) return rows;

  std::vector<double> xs;
  for (std::size_t k : observed) xs.push_back(rows[k].minutes_from_peak);

  auto smooth = [&](auto get, auto set) {
    std::vector<double> ys;
    for (std::size_t k : observed) ys.push_back(get(*rows[k].report));
    const auto fit = lowess(xs, ys, *smoothing);
    for (std::size_t i = 0; i < observed.size(); ++i) set(rows[observed[i]], fit.fitted[i]);
  };
  smooth([](const LocalityReport& r) { return r.focus; },
         [](TimelineRow& row, double v) { row.focus_lowess = v; });
  smooth([](const LocalityReport& r) { return r.entropy_bits; },
         [](TimelineRow& row, double v) { row.entropy_lowess = v; });
  smooth([](const LocalityReport& r) { return r.spread_km; },
         [](TimelineRow& row, double v) { row.spread_lowess = v; });
  return rows;
}

void write_timeline_csv(std::ostream& out, std::span<const TimelineRow> rows, bool with_lowess,
                        DistanceUnit unit) {
  const auto suffix = unit_suffix(unit);
  out << "window_start_epoch,minutes_from_peak,count,focus,entropy_bits,spread_" << suffix;
  if (with_lowess) out << ",focus_lowess,entropy_bits_lowess,spread_" << suffix << "_lowess";
  out << '\n';

  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << format_double(*v);
  };
  for (const auto& row : rows) {
    out << row.window_start << ',' << format_double(row.minutes_from_peak) << ',' << row.count;
    if (row.report) {
      cell(row.report->focus);
      cell(row.report->entropy_bits);
      cell(from_km(row.report->spread_km, unit));
    } else {
      out << ",,,";
    }
    if (with_lowess) {
      cell(row.focus_lowess);
      cell(row.entropy_lowess);
      cell(row.spread_lowess ? std::optional<double>(from_km(*row.spread_lowess, unit))
                             : std::nullopt);
    }
    out << '\n';
  }
}

}  // namespace geoprop
