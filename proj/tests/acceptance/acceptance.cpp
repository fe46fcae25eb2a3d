// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "geoprop/error.hpp"
#include "geoprop/geodesy.hpp"
#include "geoprop/io.hpp"
#include "geoprop/metrics.hpp"
#include "geoprop/pipeline.hpp"
#include "geoprop/propagation.hpp"
#include "geoprop/temporal.hpp"
#include "geoprop/topics.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "support/topic_fixtures.hpp"

using namespace geoprop;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Message make_message(std::size_t i, const std::string& region, double lat, double lon,
                     std::int64_t t = 1000, const std::string& user = "u") {
  Message m;
  m.id = std::to_string(i);
  m.user_id = user;
  m.timestamp = t;
  m.point = GeoPoint(lat, lon);
  m.language = "en";
  m.text = "ebola";
  m.region = region;
  return m;
}

// 1 -------------------------------------------------------------------------
Outcome metric_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> lat(-60, 60), lon(-180, 180), jitter(-5, 5);
  double worst_fe = 0.0, worst_spread = 0.0;
  std::size_t degenerate = 0, mismatched_degenerate = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t regions = 1 + rng() % 10;
    const std::size_t n = 1 + rng() % 200;
    std::vector<std::pair<double, double>> centers;
    for (std::size_t r = 0; r < regions; ++r) centers.emplace_back(lat(rng), lon(rng));

    std::vector<Message> messages;
    std::vector<oracle::RawMessage> raw;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = rng() % regions;
      const double la = centers[r].first + jitter(rng);
      const double lo = normalize_longitude(centers[r].second + jitter(rng));
      const std::string key = "R" + std::to_string(r);
      messages.push_back(make_message(i, key, la, lo));
      raw.push_back({key, la, lo});
      // Every 50th instance is built from antipodal pairs, so its midpoint
      // is undefined.
      if (trial % 50 == 0) {
        const double alat = -la, alon = normalize_longitude(lo + 180.0);
        messages.push_back(make_message(n + i, "X", alat, alon));
        raw.push_back({"X", alat, alon});
      }
    }

    const auto expected_spread = oracle::spread_km(raw);
    try {
      const auto r = locality_report(messages);
      worst_fe = std::max({worst_fe, std::abs(r.focus - oracle::focus(raw)),
                           std::abs(r.entropy_bits - oracle::entropy_bits(raw))});
      if (!expected_spread) {
        ++mismatched_degenerate;
      } else {
        worst_spread = std::max(worst_spread, std::abs(r.spread_km - *expected_spread));
      }
    } catch (const Error& e) {
      ++degenerate;
      if (e.kind() != ErrorKind::DegenerateMidpoint || expected_spread) ++mismatched_degenerate;
      RegionCounts counts;
      for (const auto& m : messages) counts.add(*m.region);
      worst_fe = std::max({worst_fe, std::abs(focus(counts) - oracle::focus(raw)),
                           std::abs(entropy(counts) - oracle::entropy_bits(raw))});
    }
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = worst_fe <= 1e-12 && worst_spread <= 1e-6 && mismatched_degenerate == 0 && elapsed < 10.0;
  o.detail = fmt::format("max |d focus/entropy| {:.3g} (tol 1e-12), max |d spread| {:.3g} km (tol 1e-6), "
                         "degenerate {} mismatched {}, {:.2f} s (limit 10 s)",
                         worst_fe, worst_spread, degenerate, mismatched_degenerate, elapsed);
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome closed_form_geodesy() {
  const double quarter = haversine({0, 0}, {0, 90});
  const double degree = haversine({0, 0}, {1, 0});
  const std::vector<GeoPoint> pair{{0, 0}, {0, 90}};
  const double s = spread(pair);
  Outcome o;
  o.pass = std::abs(quarter - 10007.54) <= 0.01 && std::abs(degree - 111.195) <= 0.001 &&
           std::abs(s - 5003.77) <= 0.01;
  o.detail = fmt::format("quarter {:.4f} km, degree {:.5f} km, spread {:.4f} km", quarter, degree, s);
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome entropy_focus_extremes() {
  Outcome o;
  const RegionCounts single{{"A", 17}};
  o.pass = focus(single) == 1.0 && entropy(single) == 0.0;
  double worst = 0.0;
  for (int k : {2, 4, 8}) {
    RegionCounts c;
    for (int i = 0; i < k; ++i) c.add("R" + std::to_string(i), 3);
    worst = std::max({worst, std::abs(focus(c) - 1.0 / k), std::abs(entropy(c) - std::log2(k))});
  }
  o.pass = o.pass && worst <= 1e-12;
  o.detail = fmt::format("single region (1, 0); uniform k in {{2,4,8}} max error {:.3g} (tol 1e-12)", worst);
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome rotation_invariance() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> lat(-70, 70), lon(-180, 180), jitter(-15, 15);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 100;
    const double clat = lat(rng), clon = lon(rng);
    std::vector<GeoPoint> pts, rotated;
    for (std::size_t i = 0; i < n; ++i) {
      const double la = std::clamp(clat + jitter(rng), -90.0, 90.0);
      const double lo = clon + jitter(rng);
      pts.emplace_back(la, lo);
      rotated.emplace_back(la, lo + 37.0);
    }
    const double a = spread(pts), b = spread(rotated);
    worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
  }
  return {worst < 1e-6, fmt::format("100 sets, max relative change {:.3g} (tol 1e-6)", worst)};
}

// 5 -------------------------------------------------------------------------
Outcome lowess_checks() {
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(0.25 * i + (i % 4) * 0.03);
    y.push_back(-3.5 * x.back() + 2.0);
  }
  double affine = 0.0;
  for (double frac : {0.2, 0.3, 0.5, 1.0}) {
    const auto fit = lowess(x, y, {frac, 3});
    for (std::size_t i = 0; i < x.size(); ++i) affine = std::max(affine, std::abs(fit.fitted[i] - y[i]));
  }

  const auto rows = parse_csv(read_file(GEOPROP_TEST_DATA_DIR "/lowess_sine20.csv"));
  std::vector<double> fx, fy, expected;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    fx.push_back(std::stod(rows[i][0]));
    fy.push_back(std::stod(rows[i][1]));
    expected.push_back(std::stod(rows[i][2]));
  }
  const auto fit = lowess(fx, fy, {0.5, 3});
  double reference = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    reference = std::max(reference, std::abs(fit.fitted[i] - expected[i]));
  }
  return {affine <= 1e-9 && reference <= 1e-6 && fx.size() == 20,
          fmt::format("affine max error {:.3g} (tol 1e-9); {}-point fixture max error {:.3g} (tol 1e-6)",
                      affine, fx.size(), reference)};
}

// 6 -------------------------------------------------------------------------
double max_row_error(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (double v : m.row(r)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

Outcome lda_checks() {
  const auto start = Clock::now();
  double row_error = 0.0;
  std::size_t conservation_failures = 0, iterations_seen = 0;

  const auto planted = oracle::planted_corpus(2024);
  const auto docs = test::to_document_set(planted);
  const std::size_t tokens = docs.token_count();

  auto observer = [&](const SamplerState& s) {
    ++iterations_seen;
    std::size_t a = 0, b = 0, c = 0;
    for (auto v : s.topic_totals) a += v;
    for (auto v : s.word_topic) b += v;
    for (auto v : s.doc_topic) c += v;
    if (a != tokens || b != tokens || c != tokens) ++conservation_failures;
  };

  double recovery = 0.0;
  for (std::size_t k : {2u, 3u, 8u}) {
    LdaOptions opts;
    opts.topics = k;
    opts.iterations = 200;
    opts.seed = 3;
    const auto model = gibbs_train(docs, opts, observer);
    row_error = std::max({row_error, max_row_error(model.phi), max_row_error(model.theta)});
    if (k == 3) recovery = oracle::matched_min_cosine(test::phi_rows(model), planted.phi);
  }

  int hits = 0;
  std::string picks;
  const std::vector<std::size_t> candidates{2, 3, 8};
  for (int run = 0; run < 10; ++run) {
    const auto corpus = test::to_document_set(oracle::planted_corpus(100 + run));
    ChooseKOptions opts;
    opts.seed = opts.lda.seed = opts.perplexity.seed = static_cast<std::uint64_t>(run + 1);
    opts.lda.iterations = 200;
    const auto result = choose_k(corpus, candidates, opts);
    hits += result.best == 3 ? 1 : 0;
    picks += (picks.empty() ? "" : ",") + std::to_string(result.best);
  }
  const double elapsed = seconds_since(start);

  Outcome o;
  o.pass = row_error <= 1e-9 && conservation_failures == 0 && recovery >= 0.8 && hits >= 8 &&
           elapsed < 120.0;
  o.detail = fmt::format(
      "(a) max row-sum error {:.3g}; (b) {} sampler states, {} conservation failures; "
      "(c) matched min cosine {:.4f} (>= 0.8); (d) K=3 chosen {}/10 [{}] (>= 8); {:.1f} s (limit 120 s)",
      row_error, iterations_seen, conservation_failures, recovery, hits, picks, elapsed);
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome perplexity_closed_form() {
  double worst = 0.0;
  for (std::size_t V : {10u, 100u}) {
    const auto model = test::fixed_model({std::vector<double>(V, 1.0 / V), std::vector<double>(V, 1.0 / V),
                                          std::vector<double>(V, 1.0 / V)});
    DocumentSet held;
    for (std::size_t w = 0; w < V; ++w) held.vocabulary.intern(test::word_name(w));
    std::mt19937_64 rng(V);
    for (int d = 0; d < 5; ++d) {
      Document doc{"d" + std::to_string(d), {}};
      for (int i = 0; i < 20; ++i) doc.tokens.push_back(static_cast<std::uint32_t>(rng() % V));
      held.docs.push_back(doc);
    }
    worst = std::max(worst, std::abs(perplexity(model, held).perplexity - static_cast<double>(V)));
  }
  return {worst <= 1e-6, fmt::format("V in {{10,100}}, max |perplexity - V| {:.3g} (tol 1e-6)", worst)};
}

// 8 -------------------------------------------------------------------------
using Edges = std::vector<std::pair<std::string, std::string>>;

FollowGraph graph_of(const Edges& edges) {
  FollowGraph g;
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

std::vector<Message> posts_to_messages(const std::vector<oracle::Post>& posts) {
  std::vector<Message> ms;
  for (std::size_t i = 0; i < posts.size(); ++i) ms.push_back(make_message(i, "A", 0, 0, posts[i].t, posts[i].user));
  return ms;
}

bool matches_enumeration(const std::vector<oracle::Post>& posts, const Edges& edges) {
  const auto expected = oracle::enumerate_children(posts, edges);
  const auto forest = classify(posts_to_messages(posts), graph_of(edges));
  if (forest.classification.size() != expected.size()) return false;
  for (const auto& [user, child] : expected) {
    if ((forest.classification.at(user) == NodeKind::Child) != child) return false;
  }
  return true;
}

Outcome propagation_checks() {
  // a starts, b and e follow a, c follows b and a, d follows c, f follows e
  // but posts at the same second. b's second post is ignored.
  const std::vector<oracle::Post> scripted{{"a", 100}, {"b", 200}, {"c", 300}, {"d", 300},
                                           {"e", 150}, {"f", 150}, {"b", 400}};
  const Edges scripted_edges{{"b", "a"}, {"c", "b"}, {"c", "a"}, {"d", "c"}, {"e", "a"},
                             {"f", "e"}, {"a", "f"}, {"d", "d"}, {"b", "a"}};
  const bool scenario = matches_enumeration(scripted, scripted_edges);

  std::mt19937_64 rng(808);
  std::size_t monotone_violations = 0, tie_children = 0, mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t users = 2 + rng() % 12;
    std::vector<oracle::Post> posts;
    for (std::size_t i = 0, n = 1 + rng() % 30; i < n; ++i) {
      posts.push_back({"u" + std::to_string(rng() % users), static_cast<std::int64_t>(rng() % 5)});
    }
    Edges edges;
    for (std::size_t i = 0, m = rng() % 40; i < m; ++i) {
      edges.emplace_back("u" + std::to_string(rng() % users), "u" + std::to_string(rng() % users));
    }
    if (!matches_enumeration(posts, edges)) ++mismatches;

    const auto ms = posts_to_messages(posts);
    const auto before = classify(ms, graph_of(edges));
    for (const auto& [user, parents] : before.parent_candidates) {
      for (const auto& p : parents) {
        if (!(before.first_post.at(p) < before.first_post.at(user))) ++tie_children;
      }
    }
    auto grown = edges;
    grown.emplace_back("u" + std::to_string(rng() % users), "u" + std::to_string(rng() % users));
    const auto after = classify(ms, graph_of(grown));
    for (const auto& [user, kind] : before.classification) {
      if (kind == NodeKind::Child && after.classification.at(user) != NodeKind::Child) ++monotone_violations;
    }
  }

  // Everyone posts in the same second over a complete graph: no children.
  std::vector<oracle::Post> same;
  Edges complete;
  for (int i = 0; i < 6; ++i) {
    same.push_back({"v" + std::to_string(i), 42});
    for (int j = 0; j < 6; ++j) complete.emplace_back("v" + std::to_string(i), "v" + std::to_string(j));
  }
  const auto tied = classify(posts_to_messages(same), graph_of(complete));

  Outcome o;
  o.pass = scenario && mismatches == 0 && monotone_violations == 0 && tie_children == 0 &&
           tied.child_count() == 0;
  o.detail = fmt::format("6-node scenario {}; 200 instances: {} enumeration mismatches, {} monotonicity "
                         "violations, {} tie children; all-tied complete graph children {}",
                         scenario ? "matches" : "differs", mismatches, monotone_violations, tie_children,
                         tied.child_count());
  return o;
}

// 9 -------------------------------------------------------------------------
std::vector<std::optional<double>> timeline_entropy(const fs::path& dir, const SynthSpec& spec) {
  const auto synth = cmd_synth(spec, dir / "synth");
  PipelineConfig prep;
  prep.inputs = {synth.messages};
  prep.traces_file = synth.traces;
  prep.output_dir = dir / "prep";
  cmd_prepare(prep);

  PipelineConfig cfg;
  cfg.inputs = {prep.output_dir / "prepared.ndjson"};
  cfg.region_table = synth.regions;
  cfg.event_start = spec.start;
  cfg.output_dir = dir / "timeline";
  cmd_timeline(cfg);

  std::vector<std::optional<double>> out;
  const auto rows = parse_csv(read_file(cfg.output_dir / "timeline.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    out.push_back(rows[i][4].empty() ? std::nullopt : std::optional<double>(std::stod(rows[i][4])));
  }
  return out;
}

Outcome end_to_end() {
  const auto start = Clock::now();
  test::TempDir dir;
  SynthSpec growing;
  growing.spread_growth = 1.0;
  const auto h = timeline_entropy(dir.path() / "growing", growing);

  auto quartile_mean = [&](std::size_t q) {
    const std::size_t lo = q * h.size() / 4, hi = (q + 1) * h.size() / 4;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (h[i]) {
        sum += *h[i];
        ++n;
      }
    }
    return n == 0 ? std::nan("") : sum / static_cast<double>(n);
  };
  const double first = quartile_mean(0), last = quartile_mean(3);

  SynthSpec flat;
  flat.spread_growth = 0.0;
  const auto z = timeline_entropy(dir.path() / "flat", flat);
  std::size_t windows = 0, nonzero = 0;
  for (const auto& v : z) {
    if (!v) continue;
    ++windows;
    nonzero += *v != 0.0 ? 1 : 0;
  }
  const double elapsed = seconds_since(start);

  Outcome o;
  o.pass = last > first && windows > 0 && nonzero == 0 && elapsed < 30.0;
  o.detail = fmt::format("growth 1: first-quartile mean entropy {:.4f} < last-quartile {:.4f}; "
                         "growth 0: {} windows with data, {} nonzero; {:.2f} s (limit 30 s)",
                         first, last, windows, nonzero, elapsed);
  return o;
}

// 10 ------------------------------------------------------------------------
void run_all_commands(const fs::path& dir) {
  SynthSpec spec;
  spec.messages = 800;
  spec.users = 150;
  spec.seed = 12;
  const auto synth = cmd_synth(spec, dir / "synth");

  PipelineConfig prep;
  prep.inputs = {synth.messages};
  prep.traces_file = synth.traces;
  prep.output_dir = dir / "prep";
  cmd_prepare(prep);

  PipelineConfig cfg;
  cfg.inputs = {prep.output_dir / "prepared.ndjson"};
  cfg.region_table = synth.regions;
  cfg.graph_file = synth.edges;
  cfg.event_start = spec.start;
  cfg.seed = 12;
  cfg.topic_candidates = {2, 3};
  cfg.lda_iterations = 60;
  cfg.output_dir = dir / "out";
  cmd_metrics(cfg);
  cmd_timeline(cfg);
  cmd_topics(cfg);
  cmd_propagation(cfg);

  PipelineConfig labeled = cfg;
  labeled.inputs = {cfg.output_dir / "labeled.ndjson"};
  labeled.output_dir = dir / "report";
  cmd_report(labeled);
}

Outcome determinism() {
  test::TempDir dir;
  run_all_commands(dir.path() / "a");
  run_all_commands(dir.path() / "b");
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.path() / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), dir.path() / "a");
    if (test::slurp(entry.path()) != test::slurp(dir.path() / "b" / rel)) ++differing;
  }
  return {files >= 15 && differing == 0,
          fmt::format("{} output files from synth, prepare, metrics, timeline, topics, propagation, "
                      "report; {} differ",
                      files, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 metric oracle equivalence", metric_oracle},
      {"2 closed-form geodesy", closed_form_geodesy},
      {"3 entropy/focus extremes", entropy_focus_extremes},
      {"4 longitude-rotation invariance", rotation_invariance},
      {"5 LOWESS", lowess_checks},
      {"6 LDA", lda_checks},
      {"7 perplexity closed form", perplexity_closed_form},
      {"8 propagation", propagation_checks},
      {"9 end-to-end synthetic pipeline", end_to_end},
      {"10 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} AC{}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}
