#include "geoprop/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"
#include "geoprop/text.hpp"

namespace geoprop {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool message_less(const Message& a, const Message& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
}

std::optional<std::string> json_id(const json& v) {
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const long long v = std::stoll(std::string(s), &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<double> parse_real(std::string_view s) {
  std::size_t used = 0;
  try {
    const double v = std::stod(std::string(s), &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<GeoSource> parse_geo_source(std::string_view s) {
  if (s.empty() || s == "native") return GeoSource::Native;
  if (s == "estimated") return GeoSource::Estimated;
  return std::nullopt;
}

// Shared validation for both input formats.
bool finish_message(Message& m, std::optional<double> lat, std::optional<double> lon) {
  if (m.id.empty() || m.user_id.empty() || m.timestamp <= 0 || m.language.empty()) return false;
  if (lat.has_value() != lon.has_value()) return false;
  if (lat) {
    try {
      m.point = GeoPoint(*lat, *lon);
    } catch (const Error&) {
      return false;
    }
  }
  return m.geo_source == GeoSource::Native || m.point.has_value();
}

void check_mismatch(const std::filesystem::path& path, const LoadStats& stats) {
  if (stats.records > 0 && stats.malformed * 2 > stats.records) {
    throw Error(ErrorKind::FormatMismatch,
                path.string() + ": " + std::to_string(stats.malformed) + " of " +
                    std::to_string(stats.records) + " records are malformed");
  }
}

std::vector<Message> parse_ndjson(const std::string& content, LoadStats& stats) {
  std::vector<Message> out;
  std::size_t begin = 0;
  while (begin < content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + begin, end - begin);
    begin = end + 1;
    if (text::trim(line).empty()) continue;
    ++stats.records;
    if (auto m = parse_message_json(line)) {
      out.push_back(std::move(*m));
    } else {
      ++stats.malformed;
    }
  }
  return out;
}

std::vector<Message> parse_csv_messages(const std::filesystem::path& path,
                                        const std::string& content, LoadStats& stats) {
  const char delimiter = path.extension() == ".tsv" ? '\t' : ',';
  const auto rows = parse_csv(content, delimiter);
  if (rows.empty()) return {};

  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id = column("id"), user = column("user_id"), ts = column("timestamp"),
             lat = column("lat"), lon = column("lon"), lang = column("lang"),
             body = column("text");
  if (!id || !user || !ts || !lat || !lon || !lang || !body) {
    throw Error(ErrorKind::FormatMismatch,
                path.string() + ": header must name id,user_id,timestamp,lat,lon,lang,text");
  }
  const auto region = column("region"), topic = column("topic"), source = column("geo_source");

  std::vector<Message> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ++stats.records;
    if (row.size() != header.size()) {
      ++stats.malformed;
      continue;
    }
    Message m;
    m.id = row[*id];
    m.user_id = row[*user];
    m.language = ascii_lower(text::trim(row[*lang]));
    m.text = row[*body];
    const auto timestamp = parse_int(row[*ts]);
    std::optional<double> la, lo;
    bool ok = timestamp.has_value();
    if (ok) m.timestamp = *timestamp;
    if (!row[*lat].empty()) ok = ok && (la = parse_real(row[*lat])).has_value();
    if (!row[*lon].empty()) ok = ok && (lo = parse_real(row[*lon])).has_value();
    if (region && !row[*region].empty()) m.region = row[*region];
    if (topic && !row[*topic].empty()) {
      const auto t = parse_int(row[*topic]);
      ok = ok && t.has_value();
      if (t) m.topic = static_cast<int>(*t);
    }
    if (source) {
      const auto s = parse_geo_source(row[*source]);
      ok = ok && s.has_value();
      if (s) m.geo_source = *s;
    }
    if (ok && finish_message(m, la, lo)) {
      out.push_back(std::move(m));
    } else {
      ++stats.malformed;
    }
  }
  return out;
}

// Keeps the first occurrence of each id, in input order.
std::vector<Message> drop_duplicate_ids(std::vector<Message> messages, LoadStats& stats) {
  std::set<std::string, std::less<>> seen;
  std::vector<Message> out;
  out.reserve(messages.size());
  for (auto& m : messages) {
    if (seen.insert(m.id).second) {
      out.push_back(std::move(m));
    } else {
      ++stats.duplicate_ids;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(GeoSource source) {
  return source == GeoSource::Native ? "native" : "estimated";
}

Corpus::Corpus(std::vector<Message> messages, Provenance provenance)
    : messages_(std::move(messages)), provenance_(std::move(provenance)) {
  std::sort(messages_.begin(), messages_.end(), message_less);
  by_id_.reserve(messages_.size());
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    if (!by_id_.emplace(messages_[i].id, i).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate message id '" + messages_[i].id + "'");
    }
  }
}

const Message* Corpus::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &messages_[it->second];
}

Corpus Corpus::derive(std::vector<Message> messages, std::string_view stage) const {
  Provenance p = provenance_;
  const std::size_t kept = messages.size();
  p.log.push_back({std::string(stage), kept, messages_.size() >= kept ? messages_.size() - kept : 0});
  return Corpus(std::move(messages), std::move(p));
}

InputFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = ascii_lower(path.extension().string());
  return (ext == ".csv" || ext == ".tsv") ? InputFormat::Csv : InputFormat::Ndjson;
}

std::optional<Message> parse_message_json(std::string_view line) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return std::nullopt;

  auto field = [&](const char* name) -> const json* {
    const auto it = j.find(name);
    return it == j.end() ? nullptr : &*it;
  };

  Message m;
  const json* id = field("id");
  const json* user = field("user_id");
  const json* ts = field("timestamp");
  const json* lang = field("lang");
  const json* body = field("text");
  if (!id || !user || !ts || !lang || !body) return std::nullopt;

  auto id_str = json_id(*id);
  auto user_str = json_id(*user);
  if (!id_str || !user_str) return std::nullopt;
  m.id = std::move(*id_str);
  m.user_id = std::move(*user_str);

  if (ts->is_number_integer()) {
    m.timestamp = ts->get<std::int64_t>();
  } else if (ts->is_number_unsigned() && ts->get<std::uint64_t>() <= INT64_MAX) {
    m.timestamp = static_cast<std::int64_t>(ts->get<std::uint64_t>());
  } else {
    return std::nullopt;
  }
  if (!lang->is_string() || !body->is_string()) return std::nullopt;
  m.language = ascii_lower(text::trim(lang->get<std::string>()));
  m.text = body->get<std::string>();

  std::optional<double> lat, lon;
  for (auto [name, out] : {std::pair{"lat", &lat}, std::pair{"lon", &lon}}) {
    const json* v = field(name);
    if (v == nullptr || v->is_null()) continue;
    if (!v->is_number()) return std::nullopt;
    *out = v->get<double>();
  }
  if (const json* r = field("region"); r && !r->is_null()) {
    if (!r->is_string()) return std::nullopt;
    m.region = r->get<std::string>();
  }
  if (const json* t = field("topic"); t && !t->is_null()) {
    if (!t->is_number_integer()) return std::nullopt;
    m.topic = t->get<int>();
  }
  if (const json* s = field("geo_source"); s && !s->is_null()) {
    if (!s->is_string()) return std::nullopt;
    const auto source = parse_geo_source(s->get<std::string>());
    if (!source) return std::nullopt;
    m.geo_source = *source;
  }
  if (!finish_message(m, lat, lon)) return std::nullopt;
  return m;
}

LoadResult load_corpus(const std::filesystem::path& path, InputFormat format) {
  const std::string content = read_file(path);
  LoadStats stats;
  auto messages = format == InputFormat::Csv ? parse_csv_messages(path, content, stats)
                                             : parse_ndjson(content, stats);
  check_mismatch(path, stats);
  messages = drop_duplicate_ids(std::move(messages), stats);

  Provenance provenance;
  provenance.sources.push_back(path.string());
  provenance.log.push_back({"load", messages.size(), stats.malformed + stats.duplicate_ids});
  return {Corpus(std::move(messages), std::move(provenance)), stats};
}

LoadResult load_corpus(const std::filesystem::path& path) {
  return load_corpus(path, format_for_path(path));
}

LoadResult load_corpora(std::span<const std::filesystem::path> paths) {
  std::vector<Message> all;
  LoadStats stats;
  Provenance provenance;
  for (const auto& path : paths) {
    const std::string content = read_file(path);
    LoadStats file_stats;
    auto messages = format_for_path(path) == InputFormat::Csv
                        ? parse_csv_messages(path, content, file_stats)
                        : parse_ndjson(content, file_stats);
    check_mismatch(path, file_stats);
    stats.records += file_stats.records;
    stats.malformed += file_stats.malformed;
    std::move(messages.begin(), messages.end(), std::back_inserter(all));
    provenance.sources.push_back(path.string());
  }
  all = drop_duplicate_ids(std::move(all), stats);
  provenance.log.push_back({"load", all.size(), stats.malformed + stats.duplicate_ids});
  return {Corpus(std::move(all), std::move(provenance)), stats};
}

void write_message_json(std::ostream& out, const Message& m) {
  ordered_json j;
  j["id"] = m.id;
  j["user_id"] = m.user_id;
  j["timestamp"] = m.timestamp;
  if (m.point) {
    j["lat"] = m.point->lat();
    j["lon"] = m.point->lon();
  } else {
    j["lat"] = nullptr;
    j["lon"] = nullptr;
  }
  j["lang"] = m.language;
  j["text"] = m.text;
  j["geo_source"] = to_string(m.geo_source);
  if (m.region) j["region"] = *m.region;
  if (m.topic) j["topic"] = *m.topic;
  out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& m : corpus.messages()) write_message_json(out, m);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_corpus(out, corpus);
  if (!out.flush()) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
}

// ---- keyword filter -------------------------------------------------------

KeywordSet::KeywordSet(std::map<std::string, std::vector<std::string>> by_language,
                       std::vector<std::string> fallback) {
  auto fold_all = [](const std::vector<std::string>& words) {
    std::vector<std::string> out;
    for (const auto& w : words) {
      auto trimmed = text::trim(w);
      if (trimmed.empty()) throw Error(ErrorKind::InvalidArgument, "blank keyword");
      out.push_back(text::casefold(trimmed));
    }
    return out;
  };
  bool any = !fallback.empty();
  for (const auto& [language, words] : by_language) {
    any = any || !words.empty();
    by_language_.emplace(ascii_lower(language), fold_all(words));
  }
  fallback_ = fold_all(fallback);
  if (!any) throw Error(ErrorKind::InvalidArgument, "keyword set is empty");
}

std::span<const std::string> KeywordSet::folded_for(std::string_view language) const {
  const auto it = by_language_.find(language);
  return it == by_language_.end() ? std::span<const std::string>(fallback_)
                                  : std::span<const std::string>(it->second);
}

KeywordSet load_keywords(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (!j.is_object()) {
    throw Error(ErrorKind::FormatMismatch, path.string() + ": expected a JSON object");
  }
  std::map<std::string, std::vector<std::string>> by_language;
  std::vector<std::string> fallback;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) {
      throw Error(ErrorKind::FormatMismatch, path.string() + ": '" + key + "' is not a list");
    }
    std::vector<std::string> words;
    for (const auto& w : value) {
      if (!w.is_string()) {
        throw Error(ErrorKind::FormatMismatch, path.string() + ": keywords must be strings");
      }
      words.push_back(w.get<std::string>());
    }
    if (key == "default") {
      fallback = std::move(words);
    } else {
      by_language.emplace(key, std::move(words));
    }
  }
  return KeywordSet(std::move(by_language), std::move(fallback));
}

Corpus filter_keyword(const Corpus& corpus, const KeywordSet& keywords, MatchMode mode) {
  if (keywords.empty()) throw Error(ErrorKind::InvalidArgument, "keyword set is empty");
  const bool whole_token = mode == MatchMode::Token;
  return corpus.filtered("keyword", [&](const Message& m) {
    const auto words = keywords.folded_for(m.language);
    if (words.empty()) return false;
    const std::string folded = text::casefold(m.text);
    return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
      return text::contains_folded(folded, w, whole_token);
    });
  });
}

Corpus dedup(const Corpus& corpus) {
  std::set<std::pair<std::string, std::string>> seen;
  return corpus.filtered("dedup", [&](const Message& m) {
    return seen.emplace(m.language, text::normalize_for_dedup(m.text)).second;
  });
}

Corpus prune_languages(const Corpus& corpus, std::size_t min_count) {
  if (min_count < 1) throw Error(ErrorKind::InvalidArgument, "min_count must be at least 1");
  std::map<std::string, std::size_t, std::less<>> per_language;
  for (const auto& m : corpus.messages()) ++per_language[m.language];
  return corpus.filtered("language_prune", [&](const Message& m) {
    return per_language.find(m.language)->second >= min_count;
  });
}

// ---- home location --------------------------------------------------------

namespace {

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / 2.0;
}

}  // namespace

GeoPoint estimate_home(const UserTrace& trace, std::size_t min_points) {
  if (trace.points.empty() || trace.points.size() < min_points) {
    throw Error(ErrorKind::InsufficientEvidence,
                "user '" + trace.user_id + "' has " + std::to_string(trace.points.size()) +
                    " geotagged points");
  }
  std::vector<double> lats, lons;
  lats.reserve(trace.points.size());
  lons.reserve(trace.points.size());
  for (const auto& p : trace.points) {
    lats.push_back(p.lat());
    lons.push_back(p.lon());
  }
  return GeoPoint(median_of(std::move(lats)), median_of(std::move(lons)));
}

TraceMap load_traces(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  TraceMap traces;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin < content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;

    auto fail = [&] {
      return Error(ErrorKind::FormatMismatch,
                   path.string() + ": malformed trace on line " + std::to_string(line_no));
    };
    const json j = json::parse(line, nullptr, false);
    if (!j.is_object() || !j.contains("user_id") || !j.contains("points") ||
        !j["points"].is_array()) {
      throw fail();
    }
    const auto user = json_id(j["user_id"]);
    if (!user) throw fail();
    auto& trace = traces[*user];
    trace.user_id = *user;
    for (const auto& p : j["points"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) throw fail();
      try {
        trace.points.emplace_back(p[0].get<double>(), p[1].get<double>());
      } catch (const Error&) {
        throw fail();
      }
    }
  }
  return traces;
}

Corpus attach_estimated_locations(const Corpus& corpus, const TraceMap& traces,
                                  std::size_t min_points) {
  std::map<std::string, std::optional<GeoPoint>, std::less<>> homes;
  auto home_of = [&](const std::string& user) -> const std::optional<GeoPoint>& {
    auto it = homes.find(user);
    if (it != homes.end()) return it->second;
    std::optional<GeoPoint> home;
    if (const auto t = traces.find(user); t != traces.end() && !t->second.points.empty() &&
                                         t->second.points.size() >= min_points) {
      home = estimate_home(t->second, min_points);
    }
    return homes.emplace(user, home).first->second;
  };

  std::vector<Message> out;
  out.reserve(corpus.size());
  for (const auto& m : corpus.messages()) {
    if (m.point) {
      out.push_back(m);
      continue;
    }
    if (const auto& home = home_of(m.user_id)) {
      Message located = m;
      located.point = *home;
      located.geo_source = GeoSource::Estimated;
      out.push_back(std::move(located));
    }
  }
  return corpus.derive(std::move(out), "locate");
}

}  // namespace geoprop
