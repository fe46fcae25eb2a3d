#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoprop/geodesy.hpp"

namespace geoprop {

enum class GeoSource { Native, Estimated };

std::string_view to_string(GeoSource source);

/// One geotagged post. `topic` is 1-indexed once assigned.
struct Message {
  std::string id;
  std::string user_id;
  std::int64_t timestamp = 0;
  std::optional<GeoPoint> point;
  std::string language;
  std::string text;
  std::optional<std::string> region;
  std::optional<int> topic;
  GeoSource geo_source = GeoSource::Native;
};

struct FilterLogEntry {
  std::string stage;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

struct Provenance {
  std::vector<std::string> sources;
  std::vector<FilterLogEntry> log;
};

/// Immutable message collection, ordered by (timestamp, id) with unique ids.
class Corpus {
 public:
  Corpus() = default;
  /// Sorts the messages; throws InvalidArgument on a repeated id.
  explicit Corpus(std::vector<Message> messages, Provenance provenance = {});

  std::span<const Message> messages() const noexcept { return messages_; }
  std::size_t size() const noexcept { return messages_.size(); }
  bool empty() const noexcept { return messages_.empty(); }
  const Message& operator[](std::size_t i) const { return messages_[i]; }

  const Message* find(std::string_view id) const;

  const Provenance& provenance() const noexcept { return provenance_; }

  /// Copy of this corpus restricted to messages satisfying `keep`, with a
  /// log entry for `stage` appended.
  template <typename Pred>
  Corpus filtered(std::string_view stage, Pred&& keep) const {
    std::vector<Message> out;
    out.reserve(messages_.size());
    for (const auto& m : messages_) {
      if (keep(m)) out.push_back(m);
    }
    return derive(std::move(out), stage);
  }

  /// New corpus with replacement messages, inheriting provenance plus a log
  /// entry whose dropped count is size() - messages.size().
  Corpus derive(std::vector<Message> messages, std::string_view stage) const;

 private:
  std::vector<Message> messages_;
  Provenance provenance_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class InputFormat { Ndjson, Csv };

/// Guesses the format from the extension (.csv / .tsv are CSV, anything
/// else NDJSON).
InputFormat format_for_path(const std::filesystem::path& path);

struct LoadStats {
  std::size_t records = 0;
  std::size_t malformed = 0;
  std::size_t duplicate_ids = 0;
};

struct LoadResult {
  Corpus corpus;
  LoadStats stats;
};

/// Reads one message file. Malformed records are skipped and counted; a
/// repeated id keeps the first occurrence. Throws UnreadableFile if the file
/// cannot be opened and FormatMismatch if more than half the records are
/// malformed.
LoadResult load_corpus(const std::filesystem::path& path, InputFormat format);
LoadResult load_corpus(const std::filesystem::path& path);

/// Loads several files into one corpus; ids are unique across all of them.
LoadResult load_corpora(std::span<const std::filesystem::path> paths);

/// Parses one NDJSON line; returns nullopt when the record is malformed.
std::optional<Message> parse_message_json(std::string_view line);

void write_message_json(std::ostream& out, const Message& message);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// ---- keyword filter -------------------------------------------------------

enum class MatchMode { Substring, Token };

/// Per-language keyword lists. Languages without an entry fall back to
/// `fallback`.
class KeywordSet {
 public:
  KeywordSet() = default;
  /// Throws InvalidArgument if every list is empty or a keyword is blank.
  KeywordSet(std::map<std::string, std::vector<std::string>> by_language,
             std::vector<std::string> fallback);

  std::span<const std::string> folded_for(std::string_view language) const;
  bool empty() const noexcept { return by_language_.empty() && fallback_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> by_language_;
  std::vector<std::string> fallback_;
};

/// JSON object mapping language -> keyword list; the key "default" holds the
/// fallback list.
KeywordSet load_keywords(const std::filesystem::path& path);

Corpus filter_keyword(const Corpus& corpus, const KeywordSet& keywords,
                      MatchMode mode = MatchMode::Substring);

/// Removes messages whose normalized text repeats an earlier message in the
/// same language; the earliest (timestamp, id) survives.
Corpus dedup(const Corpus& corpus);

/// Drops every message of a language that has fewer than `min_count`
/// messages.
Corpus prune_languages(const Corpus& corpus, std::size_t min_count = 100);

// ---- home location --------------------------------------------------------

struct UserTrace {
  std::string user_id;
  std::vector<GeoPoint> points;
};

/// Per-axis median of the trace; an even count averages the middle pair.
/// Throws InsufficientEvidence when fewer than `min_points` points exist.
GeoPoint estimate_home(const UserTrace& trace, std::size_t min_points = 2);

using TraceMap = std::map<std::string, UserTrace, std::less<>>;

/// NDJSON: {"user_id": ..., "points": [[lat, lon], ...]} per line.
TraceMap load_traces(const std::filesystem::path& path);

/// Geolocates messages without a point from their author's trace. Messages
/// still lacking a point afterwards are dropped.
Corpus attach_estimated_locations(const Corpus& corpus, const TraceMap& traces,
                                  std::size_t min_points = 2);

}  // namespace geoprop
