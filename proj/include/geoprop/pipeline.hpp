#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoprop/corpus.hpp"
#include "geoprop/geodesy.hpp"
#include "geoprop/metrics.hpp"
#include "geoprop/temporal.hpp"

namespace geoprop {

/// Settings shared by every subcommand. Paths are used as given.
struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;

  // prepare
  std::optional<std::filesystem::path> keyword_file;
  std::vector<std::string> keywords{"ebola"};
  MatchMode match_mode = MatchMode::Substring;
  std::optional<std::filesystem::path> traces_file;
  std::size_t min_language_count = 100;
  std::size_t min_trace_points = 2;

  // event scope
  std::int64_t window_secs = kDefaultWindowSecs;
  std::optional<std::int64_t> event_start;
  std::int64_t horizon_secs = kDefaultHorizonSecs;
  std::optional<std::filesystem::path> region_table;
  DistanceUnit units = DistanceUnit::Kilometers;
  SpreadMode spread_mode = SpreadMode::PerMessage;

  // metrics
  std::optional<GeoPoint> center;
  std::vector<double> cdf_thresholds{50, 100, 500, 1000, 1500};

  // timeline
  bool lowess = true;
  LowessOptions lowess_options;

  // topics
  std::string language = "en";
  std::optional<std::filesystem::path> stopword_file;
  std::uint32_t min_df = 2;
  std::size_t news_min_other_users = 20;
  std::vector<std::size_t> topic_candidates{6};
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t lda_iterations = 1000;
  double heldout_frac = 0.1;

  // propagation
  std::optional<std::filesystem::path> graph_file;
  bool graph_users_only = false;

  /// Throws BadConfig on non-positive settings or missing files.
  void validate() const;
};

struct PrepareStats {
  std::size_t input_records = 0;
  std::size_t malformed = 0;
  std::size_t duplicate_ids = 0;
  std::size_t loaded = 0;
  std::size_t after_keyword = 0;
  std::size_t after_dedup = 0;
  std::size_t after_language_prune = 0;
  std::size_t estimated_locations = 0;
  std::size_t output = 0;
};

/// load -> filter_keyword -> dedup -> prune_languages ->
/// attach_estimated_locations. Writes prepared.ndjson and prepare_stats.json.
PrepareStats cmd_prepare(const PipelineConfig& config);

/// Writes locality.csv and distance_cdf.csv for the event scope.
LocalityReport cmd_metrics(const PipelineConfig& config);

/// Writes timeline.csv; returns the peak window index.
std::size_t cmd_timeline(const PipelineConfig& config);

struct TopicsSummary {
  std::size_t topics = 0;
  std::size_t labeled_messages = 0;
  std::size_t unknown_user_messages = 0;
};

/// Writes topic_model.json, topic_report.csv, labeled.ndjson,
/// region_topics.csv and, with more than one candidate,
/// topic_perplexity.csv.
TopicsSummary cmd_topics(const PipelineConfig& config);

struct PropagationSummary {
  std::size_t users = 0;
  std::size_t children = 0;
  std::size_t peak = 0;
};

/// Writes classification.csv and child_curve.csv.
PropagationSummary cmd_propagation(const PipelineConfig& config);

/// Writes languages.csv, regions.csv and, when messages carry topic labels,
/// topic_locality.csv.
void cmd_report(const PipelineConfig& config);

/// Synthetic event whose regional dispersion widens over time.
struct SynthSpec {
  GeoPoint center{32.8121, -96.8378};
  std::size_t messages = 2000;
  std::size_t users = 400;
  std::size_t regions = 12;
  /// Growth of the probability of posting outside the center region per
  /// unit of elapsed horizon; 0 keeps every message in the center region.
  double spread_growth = 1.0;
  /// Probability that a given user follows a given other user.
  double follow_density = 0.01;
  /// Share of users whose messages carry no coordinates and rely on a
  /// trace.
  double untagged_user_share = 0.2;
  std::int64_t start = 1412121600;  // 2014-10-01T00:00:00Z
  std::int64_t horizon_secs = kDefaultHorizonSecs;
  std::int64_t window_secs = kDefaultWindowSecs;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthOutput {
  std::filesystem::path messages;
  std::filesystem::path traces;
  std::filesystem::path edges;
  std::filesystem::path regions;
};

/// Writes synth_messages.ndjson, synth_traces.ndjson, synth_edges.csv and
/// synth_regions.csv into `output_dir`.
SynthOutput cmd_synth(const SynthSpec& spec, const std::filesystem::path& output_dir);

/// Loads the inputs, fills missing regions from the region table and keeps
/// the event horizon. Messages without a point are dropped.
struct EventScope {
  Corpus corpus;
  WindowSpec windows;
};
EventScope load_event(const PipelineConfig& config);

}  // namespace geoprop
