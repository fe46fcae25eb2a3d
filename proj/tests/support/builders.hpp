#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geoprop/corpus.hpp"

namespace test {

inline geoprop::Message msg(std::string id, std::string user, std::int64_t t,
                            std::optional<geoprop::GeoPoint> point = geoprop::GeoPoint{0, 0},
                            std::string text = "ebola", std::string lang = "en",
                            std::optional<std::string> region = std::nullopt) {
  geoprop::Message m;
  m.id = std::move(id);
  m.user_id = std::move(user);
  m.timestamp = t;
  m.point = point;
  m.text = std::move(text);
  m.language = std::move(lang);
  m.region = std::move(region);
  return m;
}

/// Message at `point` tagged with `region`.
inline geoprop::Message located(std::string id, std::string region, geoprop::GeoPoint point,
                                std::int64_t t = 100, std::string user = "u") {
  return msg(std::move(id), std::move(user), t, point, "ebola", "en", std::move(region));
}

inline std::vector<std::string> ids(const geoprop::Corpus& c) {
  std::vector<std::string> out;
  for (const auto& m : c.messages()) out.push_back(m.id);
  return out;
}

}  // namespace test
