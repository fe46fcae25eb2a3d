// geoprop: command-line front end for corpus preparation, locality metrics,
// timelines, topic modeling, propagation analysis and synthetic events.
//
// Exit codes: 0 success, 2 bad configuration, 3 empty result, 4 I/O failure.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "geoprop/error.hpp"
#include "geoprop/pipeline.hpp"

namespace {

using geoprop::Error;
using geoprop::ErrorKind;

constexpr int kExitBadConfig = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitIo = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnreadableFile:
    case ErrorKind::FormatMismatch:
      return kExitIo;
    case ErrorKind::EmptySet:
    case ErrorKind::EmptySeries:
    case ErrorKind::EmptyAfterPreprocess:
    case ErrorKind::NoTokens:
    case ErrorKind::EmptyForest:
    case ErrorKind::InsufficientEvidence:
    case ErrorKind::DegenerateMidpoint:
      return kExitEmpty;
    case ErrorKind::InvalidArgument:
    case ErrorKind::NoRegions:
    case ErrorKind::BadConfig:
      return kExitBadConfig;
  }
  return kExitBadConfig;
}

geoprop::GeoPoint parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::BadConfig, "expected LAT,LON: " + text);
  try {
    return geoprop::GeoPoint(std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1)));
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadConfig, "invalid coordinate: " + text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locality, timeline, topic and propagation analysis of geotagged message streams"};
  app.set_config("--config", "", "key=value configuration file (flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();

  geoprop::PipelineConfig config;
  std::vector<std::string> inputs;
  std::string units = "km";
  std::string spread_mode = "message";
  std::int64_t event_start = 0;

  app.add_option("-i,--input", inputs, "Input message files (NDJSON or CSV)");
  app.add_option("-o,--output-dir", config.output_dir, "Directory for output files");
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_option("--window-secs", config.window_secs, "Window width in seconds")->capture_default_str();
  auto* start_opt = app.add_option("--event-start", event_start, "Event start (UTC epoch seconds)");
  app.add_option("--horizon-secs", config.horizon_secs, "Event horizon in seconds")->capture_default_str();
  app.add_option("--region-table", config.region_table, "Region centroid CSV (key,lat,lon)");
  app.add_option("--units", units, "Distance units for output")
      ->check(CLI::IsMember({"km", "miles"}))
      ->capture_default_str();
  app.add_option("--spread-mode", spread_mode, "Spread over every message or one point per region")
      ->check(CLI::IsMember({"message", "region"}))
      ->capture_default_str();

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Filter, deduplicate and geolocate a raw corpus");
  std::string match = "substring";
  prepare->add_option("--keywords", config.keyword_file, "JSON file: language -> keyword list");
  prepare->add_option("--keyword", config.keywords, "Keyword used for every language")
      ->capture_default_str();
  prepare->add_option("--match", match, "Keyword matching mode")
      ->check(CLI::IsMember({"substring", "token"}))
      ->capture_default_str();
  prepare->add_option("--traces", config.traces_file, "User trace NDJSON for home locations");
  prepare->add_option("--min-lang-count", config.min_language_count,
                      "Drop languages with fewer messages")
      ->capture_default_str();
  prepare->add_option("--min-trace-points", config.min_trace_points,
                      "Geotagged points needed for a home estimate")
      ->capture_default_str();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Focus, entropy, spread and distance CDF of an event");
  std::string center;
  metrics->add_option("--center", center, "CDF center LAT,LON (default: event midpoint)");
  metrics->add_option("--cdf-thresholds", config.cdf_thresholds, "Ascending CDF thresholds")
      ->delimiter(',')
      ->capture_default_str();

  // timeline
  auto* timeline = app.add_subcommand("timeline", "Per-window metrics aligned to the peak window");
  bool no_lowess = false;
  timeline->add_flag("--no-lowess", no_lowess, "Skip LOWESS columns");
  timeline->add_option("--lowess-frac", config.lowess_options.frac, "LOWESS span fraction")
      ->capture_default_str();
  timeline->add_option("--lowess-iters", config.lowess_options.robust_iters,
                       "LOWESS robustness iterations")
      ->capture_default_str();

  // topics
  auto* topics = app.add_subcommand("topics", "LDA topics per user, per message and per region");
  topics->add_option("--language", config.language, "Language to model")->capture_default_str();
  topics->add_option("--stopwords", config.stopword_file, "Stopword list, one per line");
  topics->add_option("--min-df", config.min_df, "Minimum document frequency")->capture_default_str();
  topics->add_option("--news-min-users", config.news_min_other_users,
                     "Drop texts shared by at least this many other users (0 = off)")
      ->capture_default_str();
  topics->add_option("--topics", config.topic_candidates,
                     "Topic count, or candidates chosen by held-out perplexity")
      ->delimiter(',')
      ->capture_default_str();
  topics->add_option("--alpha", config.alpha, "Document-topic prior (default 50/K)");
  topics->add_option("--beta", config.beta, "Topic-word prior")->capture_default_str();
  topics->add_option("--iters", config.lda_iterations, "Gibbs sweeps")->capture_default_str();
  topics->add_option("--heldout-frac", config.heldout_frac, "Held-out share for choosing K")
      ->capture_default_str();

  // propagation
  auto* propagation = app.add_subcommand("propagation", "Root/child classification over a follow graph");
  propagation->add_option("--graph", config.graph_file, "Edge list follower_id,followee_id")
      ->required();
  propagation->add_flag("--graph-users-only", config.graph_users_only,
                        "Ignore posters absent from the graph");

  // report
  auto* report = app.add_subcommand("report", "Language, region and per-topic distributions");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic event, traces, graph and regions");
  geoprop::SynthSpec spec;
  std::string synth_center;
  synth->add_option("--messages", spec.messages, "Message count")->capture_default_str();
  synth->add_option("--users", spec.users, "User count")->capture_default_str();
  synth->add_option("--regions", spec.regions, "Region count")->capture_default_str();
  synth->add_option("--spread-growth", spec.spread_growth, "Dispersion growth over the horizon")
      ->capture_default_str();
  synth->add_option("--follow-density", spec.follow_density, "Follow probability per user pair")
      ->capture_default_str();
  synth->add_option("--untagged-share", spec.untagged_user_share,
                    "Share of users posting without coordinates")
      ->capture_default_str();
  synth->add_option("--center", synth_center, "Event center LAT,LON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadConfig;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    for (const auto& p : inputs) config.inputs.emplace_back(p);
    config.units = units == "miles" ? geoprop::DistanceUnit::Miles : geoprop::DistanceUnit::Kilometers;
    config.spread_mode =
        spread_mode == "region" ? geoprop::SpreadMode::PerRegion : geoprop::SpreadMode::PerMessage;
    config.match_mode = match == "token" ? geoprop::MatchMode::Token : geoprop::MatchMode::Substring;
    config.lowess = !no_lowess;
    if (start_opt->count() > 0) config.event_start = event_start;
    if (!center.empty()) config.center = parse_point(center);

    if (*prepare) {
      const auto stats = geoprop::cmd_prepare(config);
      std::cerr << "prepare: " << stats.input_records << " records -> " << stats.output
                << " messages\n";
    } else if (*metrics) {
      geoprop::cmd_metrics(config);
    } else if (*timeline) {
      const auto peak = geoprop::cmd_timeline(config);
      std::cerr << "timeline: peak window " << peak << '\n';
    } else if (*topics) {
      const auto summary = geoprop::cmd_topics(config);
      std::cerr << "topics: K=" << summary.topics << ", " << summary.labeled_messages
                << " labeled messages\n";
    } else if (*propagation) {
      const auto summary = geoprop::cmd_propagation(config);
      std::cerr << "propagation: " << summary.children << " of " << summary.users
                << " users are children\n";
    } else if (*report) {
      geoprop::cmd_report(config);
    } else if (*synth) {
      spec.seed = config.seed;
      spec.horizon_secs = config.horizon_secs;
      spec.window_secs = config.window_secs;
      if (config.event_start) spec.start = *config.event_start;
      if (!synth_center.empty()) spec.center = parse_point(synth_center);
      geoprop::cmd_synth(spec, config.output_dir);
    }
  } catch (const Error& e) {
    std::cerr << "geoprop " << stage << ": " << geoprop::to_string(e.kind()) << ": " << e.what()
              << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "geoprop " << stage << ": " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
