#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "geoprop/error.hpp"
#include "geoprop/metrics.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace geoprop;
using test::located;

TEST_CASE("focus") {
  CHECK(focus({{"A", 4}}) == 1.0);
  CHECK(focus({{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}}) == 0.25);
  CHECK(focus({{"A", 3}, {"B", 1}}) == 0.75);
  CHECK_THROWS_AS(focus(RegionCounts{}), Error);
}

TEST_CASE("entropy") {
  CHECK(entropy({{"A", 7}}) == 0.0);
  CHECK(entropy({{"A", 2}, {"B", 2}}) == 1.0);
  CHECK(std::abs(entropy({{"A", 3}, {"B", 1}}) - 0.811278) < 1e-6);
  CHECK(entropy({{"A", 3}, {"B", 0}}) == 0.0);
  for (int k : {2, 4, 8}) {
    RegionCounts c;
    for (int i = 0; i < k; ++i) c.add("R" + std::to_string(i), 5);
    CHECK(std::abs(entropy(c) - std::log2(k)) < 1e-12);
    CHECK(std::abs(focus(c) - 1.0 / k) < 1e-12);
  }
}

TEST_CASE("spread") {
  const std::vector<GeoPoint> same(4, GeoPoint{10, 10});
  CHECK(spread(same) == 0.0);
  const std::vector<GeoPoint> quarter{{0, 0}, {0, 90}};
  CHECK(std::abs(spread(quarter) - 5003.77) < 0.01);
  const std::vector<GeoPoint> cross{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  CHECK(std::abs(spread(cross) - 111.195) < 0.01);
  CHECK_THROWS_AS(spread(std::span<const GeoPoint>{}), Error);
}

TEST_CASE("locality_report") {
  SUBCASE("fully local") {
    std::vector<Message> ms;
    for (int i = 0; i < 5; ++i) ms.push_back(located(std::to_string(i), "A", {5, 5}));
    const auto r = locality_report(ms);
    CHECK(r.focus == 1.0);
    CHECK(r.entropy_bits == 0.0);
    CHECK(r.spread_km == 0.0);
    CHECK(r.n == 5);
  }
  SUBCASE("two regions a quarter circle apart") {
    const std::vector<Message> ms{located("1", "A", {0, 0}), located("2", "B", {0, 90})};
    const auto r = locality_report(ms);
    CHECK(r.focus == 0.5);
    CHECK(r.entropy_bits == 1.0);
    CHECK(std::abs(r.spread_km - 5003.77) < 0.01);
  }
  SUBCASE("regions and geometry are decoupled") {
    const std::vector<Message> ms{located("1", "A", {3, 3}), located("2", "A", {3, 3}),
                                  located("3", "A", {3, 3}), located("4", "B", {3, 3})};
    const auto r = locality_report(ms);
    CHECK(r.focus == 0.75);
    CHECK(std::abs(r.entropy_bits - 0.811278) < 1e-6);
    CHECK(r.spread_km == 0.0);
  }
  SUBCASE("per-region spread uses one point per region") {
    // Three messages at (0,0) in A, one at (0,90) in B: per message the
    // midpoint is pulled toward A; per region both count once.
    const std::vector<Message> ms{located("1", "A", {0, 0}), located("2", "A", {0, 0}),
                                  located("3", "A", {0, 0}), located("4", "B", {0, 90})};
    CHECK(std::abs(locality_report(ms, SpreadMode::PerRegion).spread_km - 5003.77) < 0.01);
    CHECK(locality_report(ms, SpreadMode::PerMessage).spread_km < 5003.77);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(locality_report(std::span<const Message>{}), Error);
    const std::vector<Message> no_region{test::msg("1", "u", 1)};
    CHECK_THROWS_AS(locality_report(no_region), Error);
  }
}

TEST_CASE("distance_cdf") {
  const GeoPoint center{0, 0};
  const std::vector<Message> at_center{located("1", "A", center), located("2", "A", center)};
  const std::vector<double> th{0, 10, 100};
  CHECK(distance_cdf(at_center, center, th) == std::vector<double>{1.0, 1.0, 1.0});

  // 10 km north of the center.
  const double ten_km_lat = 10.0 / kEarthRadiusKm * 180.0 / std::numbers::pi;
  const std::vector<Message> one{located("1", "A", {ten_km_lat, 0})};
  const std::vector<double> zero{0};
  CHECK(distance_cdf(one, center, zero) == std::vector<double>{0.0});

  const double deg_per_km = 180.0 / (std::numbers::pi * kEarthRadiusKm);
  const std::vector<Message> two{located("1", "A", {40 * deg_per_km, 0}),
                                 located("2", "A", {400 * deg_per_km, 0})};
  const std::vector<double> th2{50, 1000};
  CHECK(distance_cdf(two, center, th2) == std::vector<double>{0.5, 1.0});

  const std::vector<double> unsorted{100, 50};
  CHECK_THROWS_AS(distance_cdf(two, center, unsorted), Error);
}

TEST_CASE("units") {
  CHECK(from_km(kKmPerMile, DistanceUnit::Miles) == doctest::Approx(1.0));
  CHECK(to_km(1.0, DistanceUnit::Miles) == kKmPerMile);
  CHECK(from_km(5.0, DistanceUnit::Kilometers) == 5.0);
  CHECK(unit_suffix(DistanceUnit::Miles) == "mi");
}

TEST_CASE("write_locality_csv column order") {
  const std::vector<Message> ms{located("1", "A", {0, 0}), located("2", "B", {0, 90})};
  const std::vector<ScopedReport> rows{{"event", locality_report(ms)}};
  std::ostringstream km, mi;
  write_locality_csv(km, rows);
  write_locality_csv(mi, rows, DistanceUnit::Miles);
  CHECK(km.str().rfind("scope,n,focus,entropy_bits,spread_km,midpoint_lat,midpoint_lon\n", 0) == 0);
  CHECK(mi.str().rfind("scope,n,focus,entropy_bits,spread_mi,midpoint_lat,midpoint_lon\n", 0) == 0);
  CHECK(km.str().find("event,2,0.5,1,") != std::string::npos);
}

TEST_CASE("metric properties on random region counts") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 10);
    std::vector<std::uint64_t> n(k);
    for (auto& v : n) v = 1 + rng() % 30;
    RegionCounts c, permuted, scaled;
    std::vector<std::string> labels;
    for (int i = 0; i < k; ++i) labels.push_back("L" + std::to_string(i));
    auto shuffled = labels;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::uint64_t factor = 1 + rng() % 7;
    for (int i = 0; i < k; ++i) {
      c.add(labels[i], n[i]);
      permuted.add(shuffled[i], n[i]);
      scaled.add(labels[i], n[i] * factor);
    }
    const double f = focus(c), h = entropy(c);
    CHECK(f >= 1.0 / k - 1e-15);
    CHECK(f <= 1.0);
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(k) + 1e-12);
    CHECK(std::abs(entropy(permuted) - h) < 1e-12);
    CHECK(focus(scaled) == f);
    CHECK(std::abs(entropy(scaled) - h) < 1e-12);
  }
}
