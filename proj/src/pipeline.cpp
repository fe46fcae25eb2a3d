#include "geoprop/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"
#include "geoprop/propagation.hpp"
#include "geoprop/random.hpp"
#include "geoprop/topics.hpp"

namespace geoprop {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad_config(const std::string& message) {
  throw Error(ErrorKind::BadConfig, message);
}

void require_file(const std::optional<fs::path>& path, std::string_view what) {
  if (path && !fs::is_regular_file(*path)) {
    bad_config(std::string(what) + " not found: " + path->string());
  }
}

void finish(std::ofstream& out, const fs::path& path) {
  if (!out.flush()) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
}

// Fills missing regions from the region table, when one is configured.
Corpus with_regions(const Corpus& corpus, const PipelineConfig& config) {
  if (!config.region_table) return corpus;
  const auto regions = load_region_table(*config.region_table);
  std::vector<Message> out(corpus.messages().begin(), corpus.messages().end());
  for (auto& m : out) {
    if (!m.region && m.point) m.region = assign_region(*m.point, regions).key;
  }
  return corpus.derive(std::move(out), "assign_region");
}

void require_regions(const Corpus& corpus) {
  const auto missing = std::find_if(corpus.messages().begin(), corpus.messages().end(),
                                    [](const Message& m) { return !m.region.has_value(); });
  if (missing != corpus.messages().end()) {
    bad_config("message '" + missing->id + "' has no region; pass --region-table");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (inputs.empty()) bad_config("no input files given");
  for (const auto& p : inputs) {
    if (!fs::is_regular_file(p)) bad_config("input not found: " + p.string());
  }
  require_file(keyword_file, "keyword file");
  require_file(traces_file, "traces file");
  require_file(region_table, "region table");
  require_file(stopword_file, "stopword file");
  require_file(graph_file, "follow graph");
  if (!keyword_file && keywords.empty()) bad_config("no keywords given");
  if (window_secs <= 0) bad_config("window width must be positive");
  if (horizon_secs <= 0) bad_config("horizon must be positive");
  if (min_language_count < 1) bad_config("minimum language count must be positive");
  if (min_trace_points < 1) bad_config("minimum trace points must be positive");
  if (!(lowess_options.frac > 0.0 && lowess_options.frac <= 1.0)) bad_config("LOWESS frac must lie in (0, 1]");
  if (lowess_options.robust_iters < 0) bad_config("LOWESS robustness iterations must be >= 0");
  if (topic_candidates.empty()) bad_config("no topic count given");
  for (auto k : topic_candidates) {
    if (k < 2) bad_config("topic counts must be at least 2");
  }
  if (alpha && !(*alpha > 0.0)) bad_config("alpha must be positive");
  if (!(beta > 0.0)) bad_config("beta must be positive");
  if (lda_iterations < 1) bad_config("LDA iterations must be positive");
  if (min_df < 1) bad_config("min_df must be positive");
  if (!(heldout_frac > 0.0 && heldout_frac < 1.0)) bad_config("held-out fraction must lie in (0, 1)");
  for (std::size_t i = 0; i < cdf_thresholds.size(); ++i) {
    if (!(cdf_thresholds[i] >= 0.0) || (i > 0 && !(cdf_thresholds[i] > cdf_thresholds[i - 1]))) {
      bad_config("CDF thresholds must be non-negative and strictly ascending");
    }
  }
}

// ---- prepare --------------------------------------------------------------

PrepareStats cmd_prepare(const PipelineConfig& config) {
  config.validate();
  const auto keywords = config.keyword_file ? load_keywords(*config.keyword_file)
                                            : KeywordSet({}, config.keywords);
  const TraceMap traces = config.traces_file ? load_traces(*config.traces_file) : TraceMap{};

  auto loaded = load_corpora(config.inputs);
  PrepareStats stats;
  stats.input_records = loaded.stats.records;
  stats.malformed = loaded.stats.malformed;
  stats.duplicate_ids = loaded.stats.duplicate_ids;
  stats.loaded = loaded.corpus.size();

  const Corpus matched = filter_keyword(loaded.corpus, keywords, config.match_mode);
  stats.after_keyword = matched.size();
  const Corpus unique = dedup(matched);
  stats.after_dedup = unique.size();
  const Corpus pruned = prune_languages(unique, config.min_language_count);
  stats.after_language_prune = pruned.size();
  const Corpus located = attach_estimated_locations(pruned, traces, config.min_trace_points);
  stats.output = located.size();
  stats.estimated_locations = static_cast<std::size_t>(
      std::count_if(located.messages().begin(), located.messages().end(),
                    [](const Message& m) { return m.geo_source == GeoSource::Estimated; }));

  write_corpus(config.output_dir / "prepared.ndjson", located);

  nlohmann::ordered_json j;
  j["input_records"] = stats.input_records;
  j["malformed"] = stats.malformed;
  j["duplicate_ids"] = stats.duplicate_ids;
  j["loaded"] = stats.loaded;
  j["after_keyword"] = stats.after_keyword;
  j["after_dedup"] = stats.after_dedup;
  j["after_language_prune"] = stats.after_language_prune;
  j["estimated_locations"] = stats.estimated_locations;
  j["output"] = stats.output;
  j["dropped"] = {
      {"malformed", stats.malformed},
      {"duplicate_ids", stats.duplicate_ids},
      {"keyword", stats.loaded - stats.after_keyword},
      {"dedup", stats.after_keyword - stats.after_dedup},
      {"language_prune", stats.after_dedup - stats.after_language_prune},
      {"no_location", stats.after_language_prune - stats.output},
  };
  const auto stats_path = config.output_dir / "prepare_stats.json";
  auto out = open_output(stats_path);
  out << j.dump(2) << '\n';
  finish(out, stats_path);
  return stats;
}

// ---- event scope ----------------------------------------------------------

EventScope load_event(const PipelineConfig& config) {
  config.validate();
  const auto loaded = load_corpora(config.inputs);
  const Corpus located = loaded.corpus.filtered(
      "geotagged", [](const Message& m) { return m.point.has_value(); });

  std::int64_t origin = 0;
  if (config.event_start) {
    origin = *config.event_start;
  } else if (!located.empty()) {
    origin = located.messages().front().timestamp;
  }
  const auto windows = WindowSpec::covering(origin, config.horizon_secs, config.window_secs);
  const Corpus in_event = located.filtered(
      "event", [&](const Message& m) { return windows.index_of(m.timestamp).has_value(); });
  return {with_regions(in_event, config), windows};
}

// ---- metrics --------------------------------------------------------------

LocalityReport cmd_metrics(const PipelineConfig& config) {
  const auto scope = load_event(config);
  const Corpus& corpus = scope.corpus;
  if (corpus.empty()) throw Error(ErrorKind::EmptySet, "no geotagged messages in the event scope");
  require_regions(corpus);

  std::vector<ScopedReport> rows;
  rows.push_back({"event", locality_report(corpus.messages(), config.spread_mode)});

  std::map<int, std::vector<const Message*>> by_topic;
  for (const auto& m : corpus.messages()) {
    if (m.topic) by_topic[*m.topic].push_back(&m);
  }
  for (const auto& [topic, messages] : by_topic) {
    try {
      rows.push_back({"topic:" + std::to_string(topic),
                      locality_report(std::span<const Message* const>(messages), config.spread_mode)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMidpoint) throw;
    }
  }

  const auto locality_path = config.output_dir / "locality.csv";
  auto locality = open_output(locality_path);
  write_locality_csv(locality, rows, config.units);
  finish(locality, locality_path);

  const GeoPoint center = config.center.value_or(rows.front().report.midpoint);
  std::vector<double> thresholds_km;
  for (double t : config.cdf_thresholds) thresholds_km.push_back(to_km(t, config.units));
  const auto fractions = distance_cdf(corpus.messages(), center, thresholds_km);

  const auto cdf_path = config.output_dir / "distance_cdf.csv";
  auto cdf = open_output(cdf_path);
  cdf << "threshold_" << unit_suffix(config.units) << ",fraction\n";
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    cdf << format_double(config.cdf_thresholds[i]) << ',' << format_double(fractions[i]) << '\n';
  }
  finish(cdf, cdf_path);
  return rows.front().report;
}

// ---- timeline -------------------------------------------------------------

std::size_t cmd_timeline(const PipelineConfig& config) {
  const auto scope = load_event(config);
  require_regions(scope.corpus);
  const auto series = bucket(scope.corpus.messages(), scope.windows);
  const std::size_t peak = find_peak(series);
  const auto metrics = metric_series(series, scope.corpus, config.spread_mode);
  const auto aligned = align_to_peak(series, peak);
  const auto rows = build_timeline(
      aligned, metrics,
      config.lowess ? std::optional<LowessOptions>(config.lowess_options) : std::nullopt);

  const auto path = config.output_dir / "timeline.csv";
  auto out = open_output(path);
  write_timeline_csv(out, rows, config.lowess, config.units);
  finish(out, path);
  return peak;
}

// ---- topics ---------------------------------------------------------------

TopicsSummary cmd_topics(const PipelineConfig& config) {
  config.validate();
  const Corpus corpus = with_regions(load_corpora(config.inputs).corpus, config);

  PreprocessOptions pre;
  pre.language = config.language;
  pre.min_df = config.min_df;
  pre.news_min_other_users = config.news_min_other_users;
  if (config.stopword_file) {
    pre.stopwords = load_stopwords(*config.stopword_file);
  } else if (config.language == "en") {
    pre.stopwords = default_english_stopwords();
  }
  const DocumentSet docs = preprocess(corpus, pre);

  LdaOptions lda;
  lda.alpha = config.alpha;
  lda.beta = config.beta;
  lda.iterations = config.lda_iterations;
  lda.seed = config.seed;
  lda.topics = config.topic_candidates.front();
  if (config.topic_candidates.size() > 1) {
    ChooseKOptions choose;
    choose.heldout_frac = config.heldout_frac;
    choose.seed = config.seed;
    choose.lda = lda;
    choose.perplexity.seed = config.seed;
    const auto chosen = choose_k(docs, config.topic_candidates, choose);
    lda.topics = chosen.best;

    const auto path = config.output_dir / "topic_perplexity.csv";
    auto out = open_output(path);
    out << "topics,perplexity\n";
    for (const auto& [k, value] : chosen.perplexities) out << k << ',' << format_double(value) << '\n';
    finish(out, path);
  }

  const TopicModel model = gibbs_train(docs, lda);
  save_model(config.output_dir / "topic_model.json", model);

  const auto assigned = assign_topics(model, corpus);
  write_corpus(config.output_dir / "labeled.ndjson", assigned.labeled);
  const auto counts = topic_counts(assigned.labeled);

  const auto report_path = config.output_dir / "topic_report.csv";
  auto report = open_output(report_path);
  write_topic_report(report, model, counts);
  finish(report, report_path);

  const auto region_path = config.output_dir / "region_topics.csv";
  auto regions = open_output(region_path);
  regions << "region,topic\n";
  for (const auto& [region, topic] : dominant_topic_by_region(assigned.labeled)) {
    regions << csv_escape(region) << ',' << topic << '\n';
  }
  finish(regions, region_path);

  TopicsSummary summary;
  summary.topics = model.topics;
  summary.unknown_user_messages = assigned.unknown_user_messages;
  for (const auto& [topic, n] : counts) summary.labeled_messages += n;
  return summary;
}

// ---- propagation ----------------------------------------------------------

PropagationSummary cmd_propagation(const PipelineConfig& config) {
  if (!config.graph_file) bad_config("propagation needs --graph");
  const auto scope = load_event(config);
  const FollowGraph graph = load_graph(*config.graph_file);

  const auto series = bucket(scope.corpus.messages(), scope.windows);
  const std::size_t peak = find_peak(series);
  const auto forest =
      classify(scope.corpus.messages(), graph, ClassifyOptions{config.graph_users_only});
  const auto curve = child_proportion_curve(forest, scope.windows, peak);

  const auto class_path = config.output_dir / "classification.csv";
  auto classes = open_output(class_path);
  write_classification_csv(classes, forest);
  finish(classes, class_path);

  const auto curve_path = config.output_dir / "child_curve.csv";
  auto out = open_output(curve_path);
  write_curve_csv(out, curve);
  finish(out, curve_path);

  return {forest.classification.size(), forest.child_count(), peak};
}

// ---- report ---------------------------------------------------------------

void cmd_report(const PipelineConfig& config) {
  config.validate();
  const Corpus corpus = with_regions(load_corpora(config.inputs).corpus, config);
  if (corpus.empty()) throw Error(ErrorKind::EmptySet, "no messages to report on");

  auto write_distribution = [&](const fs::path& path, std::string_view column,
                                const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> rows(counts.begin(), counts.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t total = 0;
    for (const auto& [key, n] : rows) total += n;
    auto out = open_output(path);
    out << column << ",count,fraction\n";
    for (const auto& [key, n] : rows) {
      out << csv_escape(key) << ',' << n << ','
          << format_double(static_cast<double>(n) / static_cast<double>(total)) << '\n';
    }
    finish(out, path);
  };

  std::map<std::string, std::size_t> languages, regions;
  std::map<int, std::vector<const Message*>> by_topic;
  for (const auto& m : corpus.messages()) {
    ++languages[m.language];
    if (m.region) ++regions[*m.region];
    if (m.topic && m.region && m.point) by_topic[*m.topic].push_back(&m);
  }
  write_distribution(config.output_dir / "languages.csv", "language", languages);
  write_distribution(config.output_dir / "regions.csv", "region", regions);

  if (by_topic.empty()) return;
  std::vector<ScopedReport> rows;
  for (const auto& [topic, messages] : by_topic) {
    try {
      rows.push_back({"topic:" + std::to_string(topic),
                      locality_report(std::span<const Message* const>(messages), config.spread_mode)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMidpoint) throw;
    }
  }
  const auto path = config.output_dir / "topic_locality.csv";
  auto out = open_output(path);
  write_locality_csv(out, rows, config.units);
  finish(out, path);
}

// ---- synthetic events -----------------------------------------------------

void SynthSpec::validate() const {
  if (messages == 0 || users == 0 || regions == 0) bad_config("synthetic counts must be positive");
  if (!(spread_growth >= 0.0)) bad_config("spread growth must be non-negative");
  if (!(follow_density >= 0.0 && follow_density <= 1.0)) bad_config("follow density must lie in [0, 1]");
  if (!(untagged_user_share >= 0.0 && untagged_user_share <= 1.0)) {
    bad_config("untagged user share must lie in [0, 1]");
  }
  if (start <= 0) bad_config("start must be a positive epoch");
  if (horizon_secs <= 0 || window_secs <= 0) bad_config("horizon and window must be positive");
}

namespace {

constexpr std::size_t kPlantedTopics = 3;
constexpr std::size_t kWordsPerTopic = 20;
constexpr std::size_t kSynthVocabulary = kPlantedTopics * kWordsPerTopic;
constexpr std::size_t kWordsPerMessage = 8;
constexpr double kOnTopicShare = 0.85;
constexpr double kMaxDispersion = 0.9;
constexpr double kJitterDegrees = 0.1;

// Point `km` away from `origin` along `bearing_deg`.
GeoPoint destination(const GeoPoint& origin, double bearing_deg, double km) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double delta = km / kEarthRadiusKm;
  const double theta = bearing_deg * rad;
  const double lat1 = origin.lat() * rad;
  const double lon1 = origin.lon() * rad;
  const double lat2 = std::asin(std::sin(lat1) * std::cos(delta) +
                                std::cos(lat1) * std::sin(delta) * std::cos(theta));
  const double lon2 = lon1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(lat1),
                                        std::cos(delta) - std::sin(lat1) * std::sin(lat2));
  return GeoPoint(lat2 / rad, lon2 / rad);
}

std::string padded(char prefix, std::size_t n, int width) {
  std::string digits = std::to_string(n);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

SynthOutput cmd_synth(const SynthSpec& spec, const fs::path& output_dir) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<Region> regions;
  regions.push_back({"R00", spec.center});
  for (std::size_t i = 1; i < spec.regions; ++i) {
    const double bearing = 360.0 * static_cast<double>(i - 1) / static_cast<double>(spec.regions - 1);
    const double km = 200.0 + 150.0 * static_cast<double>((i - 1) % 3);
    regions.push_back({padded('R', i, 2), destination(spec.center, bearing, km)});
  }
  auto jitter = [&](const GeoPoint& c) {
    const double lat = std::clamp(c.lat() + (rng.uniform() - 0.5) * 2.0 * kJitterDegrees, -90.0, 90.0);
    return GeoPoint(lat, c.lon() + (rng.uniform() - 0.5) * 2.0 * kJitterDegrees);
  };

  // Rising then decaying activity profile over the windows.
  const std::size_t windows =
      static_cast<std::size_t>((spec.horizon_secs + spec.window_secs - 1) / spec.window_secs);
  const std::size_t rise = std::max<std::size_t>(1, windows / 4);
  std::vector<double> cumulative(windows);
  double acc = 0.0;
  for (std::size_t k = 0; k < windows; ++k) {
    const double w = k <= rise ? static_cast<double>(k + 1) / static_cast<double>(rise + 1)
                               : std::max(0.15, std::exp(-static_cast<double>(k - rise) /
                                                         static_cast<double>(rise)));
    acc += w;
    cumulative[k] = acc;
  }

  struct SynthUser {
    std::string id;
    std::size_t topic;
    bool untagged;
    std::optional<std::size_t> home;
  };
  std::vector<SynthUser> users;
  for (std::size_t u = 0; u < spec.users; ++u) {
    users.push_back({padded('u', u + 1, 5), rng.below(kPlantedTopics),
                     rng.uniform() < spec.untagged_user_share, std::nullopt});
  }

  std::vector<Message> messages;
  messages.reserve(spec.messages);
  for (std::size_t i = 0; i < spec.messages; ++i) {
    const double target = rng.uniform() * acc;
    const auto k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
    const std::size_t window = std::min(k, windows - 1);
    auto& user = users[rng.below(spec.users)];

    const double elapsed = static_cast<double>(window) / static_cast<double>(windows);
    const double dispersion = std::min(kMaxDispersion, spec.spread_growth * elapsed);
    std::size_t region = 0;
    if (spec.regions > 1 && rng.uniform() < dispersion) region = 1 + rng.below(spec.regions - 1);

    Message m;
    m.id = padded('m', i + 1, 7);
    m.user_id = user.id;
    m.timestamp = spec.start + static_cast<std::int64_t>(window) * spec.window_secs +
                  static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.window_secs)));
    m.language = "en";
    if (user.untagged) {
      if (!user.home) user.home = region;
    } else {
      m.point = jitter(*regions[region].centroid);
    }

    std::string text = "ebola";
    for (std::size_t w = 0; w < kWordsPerMessage; ++w) {
      const std::size_t word = rng.uniform() < kOnTopicShare
                                   ? user.topic * kWordsPerTopic + rng.below(kWordsPerTopic)
                                   : rng.below(kSynthVocabulary);
      text += ' ';
      text += padded('w', word, 2);
    }
    m.text = std::move(text);
    messages.push_back(std::move(m));
  }

  const Corpus corpus(std::move(messages));
  SynthOutput out{output_dir / "synth_messages.ndjson", output_dir / "synth_traces.ndjson",
                  output_dir / "synth_edges.csv", output_dir / "synth_regions.csv"};
  write_corpus(out.messages, corpus);

  {
    auto f = open_output(out.traces);
    for (const auto& user : users) {
      if (!user.untagged || !user.home) continue;
      // A share of untagged users lack enough evidence for a home estimate.
      const std::size_t n = rng.uniform() < 0.15 ? 1 : 3 + rng.below(4);
      nlohmann::ordered_json j;
      j["user_id"] = user.id;
      auto points = nlohmann::ordered_json::array();
      for (std::size_t p = 0; p < n; ++p) {
        const auto point = jitter(*regions[*user.home].centroid);
        points.push_back({point.lat(), point.lon()});
      }
      j["points"] = std::move(points);
      f << j.dump() << '\n';
    }
    finish(f, out.traces);
  }
  {
    auto f = open_output(out.edges);
    f << "follower_id,followee_id\n";
    for (const auto& a : users) {
      for (const auto& b : users) {
        if (&a != &b && rng.uniform() < spec.follow_density) f << a.id << ',' << b.id << '\n';
      }
    }
    finish(f, out.edges);
  }
  {
    auto f = open_output(out.regions);
    f << "key,lat,lon\n";
    for (const auto& r : regions) {
      f << r.key << ',' << format_double(r.centroid->lat()) << ',' << format_double(r.centroid->lon())
        << '\n';
    }
    finish(f, out.regions);
  }
  return out;
}

}  // namespace geoprop
