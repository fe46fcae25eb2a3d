#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "geoprop/corpus.hpp"
#include "geoprop/error.hpp"
#include "geoprop/geodesy.hpp"
#include "geoprop/metrics.hpp"
#include "geoprop/pipeline.hpp"
#include "geoprop/propagation.hpp"
#include "geoprop/temporal.hpp"
#include "geoprop/topics.hpp"

namespace py = pybind11;
using namespace geoprop;

namespace {

using LatLon = std::pair<double, double>;

GeoPoint to_point(const LatLon& p) { return {p.first, p.second}; }
LatLon from_point(const GeoPoint& p) { return {p.lat(), p.lon()}; }

std::vector<GeoPoint> to_points(const std::vector<LatLon>& pts) {
  std::vector<GeoPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(to_point(p));
  return out;
}

RegionCounts to_counts(const std::map<std::string, std::uint64_t>& counts) {
  RegionCounts c;
  for (const auto& [k, v] : counts) c.add(k, v);
  return c;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
  return rows;
}

/// Documents from token lists; the vocabulary is built in first-seen order.
DocumentSet make_documents(const std::vector<std::string>& users,
                           const std::vector<std::vector<std::string>>& tokens) {
  if (users.size() != tokens.size()) throw Error(ErrorKind::InvalidArgument, "users and documents differ in length");
  DocumentSet set;
  for (std::size_t d = 0; d < users.size(); ++d) {
    Document doc{users[d], {}};
    for (const auto& t : tokens[d]) doc.tokens.push_back(set.vocabulary.intern(t));
    set.docs.push_back(std::move(doc));
  }
  return set;
}

}  // namespace

PYBIND11_MODULE(_geoprop, m) {
  m.doc() = "Locality, timeline, topic and propagation analysis of geotagged message streams";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::exception<Error>(m, "GeopropError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object exc = type(std::string(to_string(e.kind())) + ": " + e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.attr("EARTH_RADIUS_KM") = kEarthRadiusKm;

  // geodesy
  m.def("haversine", [](const LatLon& a, const LatLon& b) { return haversine(to_point(a), to_point(b)); },
        py::arg("a"), py::arg("b"), "Great-circle distance in km between (lat, lon) pairs.");
  m.def("midpoint", [](const std::vector<LatLon>& pts) { return from_point(midpoint(to_points(pts))); },
        py::arg("points"));
  m.def(
      "assign_region",
      [](const LatLon& p, const std::map<std::string, LatLon>& centroids) {
        std::vector<Region> regions;
        for (const auto& [k, c] : centroids) regions.push_back({k, to_point(c)});
        return assign_region(to_point(p), regions).key;
      },
      py::arg("point"), py::arg("centroids"));

  // metrics
  m.def("focus", [](const std::map<std::string, std::uint64_t>& c) { return focus(to_counts(c)); },
        py::arg("counts"));
  m.def("entropy", [](const std::map<std::string, std::uint64_t>& c) { return entropy(to_counts(c)); },
        py::arg("counts"), "Shannon entropy in bits.");
  m.def(
      "spread",
      [](const std::vector<LatLon>& pts, std::optional<LatLon> center) {
        const auto points = to_points(pts);
        return center ? spread(points, to_point(*center)) : spread(points);
      },
      py::arg("points"), py::arg("center") = py::none());

  py::class_<LocalityReport>(m, "LocalityReport")
      .def_readonly("focus", &LocalityReport::focus)
      .def_readonly("entropy_bits", &LocalityReport::entropy_bits)
      .def_readonly("spread_km", &LocalityReport::spread_km)
      .def_readonly("n", &LocalityReport::n)
      .def_property_readonly("midpoint", [](const LocalityReport& r) { return from_point(r.midpoint); })
      .def("__repr__", [](const LocalityReport& r) {
        return "LocalityReport(focus=" + std::to_string(r.focus) + ", entropy_bits=" +
               std::to_string(r.entropy_bits) + ", spread_km=" + std::to_string(r.spread_km) +
               ", n=" + std::to_string(r.n) + ")";
      });

  // temporal
  m.def(
      "lowess",
      [](const std::vector<double>& x, const std::vector<double>& y, double frac, int robust_iters) {
        return lowess(x, y, {frac, robust_iters}).fitted;
      },
      py::arg("x"), py::arg("y"), py::arg("frac") = 0.3, py::arg("robust_iters") = 3);

  // corpus
  py::class_<Message>(m, "Message")
      .def_readonly("id", &Message::id)
      .def_readonly("user_id", &Message::user_id)
      .def_readonly("timestamp", &Message::timestamp)
      .def_readonly("language", &Message::language)
      .def_readonly("text", &Message::text)
      .def_readonly("region", &Message::region)
      .def_readonly("topic", &Message::topic)
      .def_property_readonly("point",
                             [](const Message& msg) -> std::optional<LatLon> {
                               if (!msg.point) return std::nullopt;
                               return from_point(*msg.point);
                             })
      .def_property_readonly("estimated", [](const Message& msg) { return msg.geo_source == GeoSource::Estimated; })
      .def("__repr__", [](const Message& msg) { return "Message(id='" + msg.id + "', user_id='" + msg.user_id + "')"; });

  py::class_<Corpus>(m, "Corpus")
      .def("__len__", &Corpus::size)
      .def("__getitem__",
           [](const Corpus& c, std::size_t i) {
             if (i >= c.size()) throw py::index_error();
             return c[i];
           })
      .def("__iter__",
           [](const Corpus& c) { return py::make_iterator(c.messages().begin(), c.messages().end()); },
           py::keep_alive<0, 1>())
      .def(
          "locality_report",
          [](const Corpus& c, bool per_region) {
            return locality_report(c.messages(), per_region ? SpreadMode::PerRegion : SpreadMode::PerMessage);
          },
          py::arg("per_region") = false);

  py::class_<LoadStats>(m, "LoadStats")
      .def_readonly("records", &LoadStats::records)
      .def_readonly("malformed", &LoadStats::malformed)
      .def_readonly("duplicate_ids", &LoadStats::duplicate_ids);

  m.def(
      "load_corpus",
      [](const std::filesystem::path& path) {
        auto r = load_corpus(path);
        return py::make_tuple(std::move(r.corpus), r.stats);
      },
      py::arg("path"), "Returns (Corpus, LoadStats).");

  // topics
  py::class_<TopicModel>(m, "TopicModel")
      .def_readonly("topics", &TopicModel::topics)
      .def_readonly("alpha", &TopicModel::alpha)
      .def_readonly("beta", &TopicModel::beta)
      .def_readonly("vocabulary", &TopicModel::vocabulary)
      .def_readonly("doc_users", &TopicModel::doc_users)
      .def_property_readonly("phi", [](const TopicModel& t) { return to_rows(t.phi); })
      .def_property_readonly("theta", [](const TopicModel& t) { return to_rows(t.theta); })
      .def("top_words", [](const TopicModel& t, std::size_t k, std::size_t n) { return top_words(t, k, n); },
           py::arg("topic"), py::arg("n") = 10)
      .def("save", [](const TopicModel& t, const std::filesystem::path& p) { save_model(p, t); });

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "train_lda",
      [](const std::vector<std::string>& users, const std::vector<std::vector<std::string>>& docs,
         std::size_t topics, std::size_t iterations, std::uint64_t seed, std::optional<double> alpha,
         double beta) {
        LdaOptions opts;
        opts.topics = topics;
        opts.iterations = iterations;
        opts.seed = seed;
        opts.alpha = alpha;
        opts.beta = beta;
        const auto set = make_documents(users, docs);
        py::gil_scoped_release release;
        return gibbs_train(set, opts);
      },
      py::arg("users"), py::arg("documents"), py::arg("topics") = 6, py::arg("iterations") = 1000,
      py::arg("seed") = 1, py::arg("alpha") = py::none(), py::arg("beta") = 0.01,
      "Collapsed Gibbs LDA over token lists, one per user.");
  m.def(
      "perplexity",
      [](const TopicModel& model, const std::vector<std::vector<std::string>>& docs, std::uint64_t seed) {
        const auto set = make_documents(std::vector<std::string>(docs.size(), ""), docs);
        PerplexityOptions opts;
        opts.seed = seed;
        return perplexity(model, set, opts).perplexity;
      },
      py::arg("model"), py::arg("documents"), py::arg("seed") = 1);
  m.def(
      "choose_k",
      [](const std::vector<std::string>& users, const std::vector<std::vector<std::string>>& docs,
         const std::vector<std::size_t>& candidates, std::size_t iterations, double heldout_frac,
         std::uint64_t seed) {
        ChooseKOptions opts;
        opts.heldout_frac = heldout_frac;
        opts.seed = opts.lda.seed = opts.perplexity.seed = seed;
        opts.lda.iterations = iterations;
        const auto set = make_documents(users, docs);
        ChooseKResult r;
        {
          py::gil_scoped_release release;
          r = choose_k(set, candidates, opts);
        }
        return py::make_tuple(r.best, r.perplexities);
      },
      py::arg("users"), py::arg("documents"), py::arg("candidates"), py::arg("iterations") = 1000,
      py::arg("heldout_frac") = 0.1, py::arg("seed") = 1, "Returns (best K, {K: perplexity}).");
  m.def("tokenize", &tokenize, py::arg("text"));

  // propagation
  m.def(
      "classify",
      [](const std::vector<std::pair<std::string, std::int64_t>>& posts,
         const std::vector<std::pair<std::string, std::string>>& edges) {
        std::vector<Message> messages;
        for (std::size_t i = 0; i < posts.size(); ++i) {
          Message msg;
          msg.id = std::to_string(i);
          msg.user_id = posts[i].first;
          msg.timestamp = posts[i].second;
          messages.push_back(std::move(msg));
        }
        FollowGraph graph;
        for (const auto& [a, b] : edges) graph.add_edge(a, b);
        std::map<std::string, std::string> out;
        for (const auto& [user, kind] : classify(messages, graph).classification) {
          out.emplace(user, std::string(to_string(kind)));
        }
        return out;
      },
      py::arg("posts"), py::arg("edges"),
      "posts: (user_id, timestamp) pairs; edges: (follower, followee) pairs. Returns user -> 'root'|'child'.");

  // commands
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("inputs", &PipelineConfig::inputs)
      .def_readwrite("output_dir", &PipelineConfig::output_dir)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("keyword_file", &PipelineConfig::keyword_file)
      .def_readwrite("keywords", &PipelineConfig::keywords)
      .def_readwrite("traces_file", &PipelineConfig::traces_file)
      .def_readwrite("min_language_count", &PipelineConfig::min_language_count)
      .def_readwrite("min_trace_points", &PipelineConfig::min_trace_points)
      .def_readwrite("window_secs", &PipelineConfig::window_secs)
      .def_readwrite("event_start", &PipelineConfig::event_start)
      .def_readwrite("horizon_secs", &PipelineConfig::horizon_secs)
      .def_readwrite("region_table", &PipelineConfig::region_table)
      .def_property(
          "miles", [](const PipelineConfig& c) { return c.units == DistanceUnit::Miles; },
          [](PipelineConfig& c, bool v) { c.units = v ? DistanceUnit::Miles : DistanceUnit::Kilometers; })
      .def_property(
          "token_match", [](const PipelineConfig& c) { return c.match_mode == MatchMode::Token; },
          [](PipelineConfig& c, bool v) { c.match_mode = v ? MatchMode::Token : MatchMode::Substring; })
      .def_readwrite("cdf_thresholds", &PipelineConfig::cdf_thresholds)
      .def_readwrite("lowess", &PipelineConfig::lowess)
      .def_readwrite("language", &PipelineConfig::language)
      .def_readwrite("stopword_file", &PipelineConfig::stopword_file)
      .def_readwrite("min_df", &PipelineConfig::min_df)
      .def_readwrite("topic_candidates", &PipelineConfig::topic_candidates)
      .def_readwrite("alpha", &PipelineConfig::alpha)
      .def_readwrite("beta", &PipelineConfig::beta)
      .def_readwrite("lda_iterations", &PipelineConfig::lda_iterations)
      .def_readwrite("heldout_frac", &PipelineConfig::heldout_frac)
      .def_readwrite("graph_file", &PipelineConfig::graph_file)
      .def_readwrite("graph_users_only", &PipelineConfig::graph_users_only);

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("messages", &SynthSpec::messages)
      .def_readwrite("users", &SynthSpec::users)
      .def_readwrite("regions", &SynthSpec::regions)
      .def_readwrite("spread_growth", &SynthSpec::spread_growth)
      .def_readwrite("follow_density", &SynthSpec::follow_density)
      .def_readwrite("untagged_user_share", &SynthSpec::untagged_user_share)
      .def_readwrite("start", &SynthSpec::start)
      .def_readwrite("horizon_secs", &SynthSpec::horizon_secs)
      .def_readwrite("window_secs", &SynthSpec::window_secs)
      .def_readwrite("seed", &SynthSpec::seed);

  m.def(
      "prepare",
      [](const PipelineConfig& c) {
        const auto s = cmd_prepare(c);
        return std::map<std::string, std::size_t>{{"input_records", s.input_records},
                                                  {"malformed", s.malformed},
                                                  {"duplicate_ids", s.duplicate_ids},
                                                  {"loaded", s.loaded},
                                                  {"after_keyword", s.after_keyword},
                                                  {"after_dedup", s.after_dedup},
                                                  {"after_language_prune", s.after_language_prune},
                                                  {"estimated_locations", s.estimated_locations},
                                                  {"output", s.output}};
      },
      py::arg("config"));
  m.def("metrics", &cmd_metrics, py::arg("config"));
  m.def("timeline", &cmd_timeline, py::arg("config"), "Writes timeline.csv; returns the peak window.");
  m.def(
      "topics",
      [](const PipelineConfig& c) {
        const auto s = cmd_topics(c);
        return py::dict(py::arg("topics") = s.topics, py::arg("labeled_messages") = s.labeled_messages,
                        py::arg("unknown_user_messages") = s.unknown_user_messages);
      },
      py::arg("config"));
  m.def(
      "propagation",
      [](const PipelineConfig& c) {
        const auto s = cmd_propagation(c);
        return py::dict(py::arg("users") = s.users, py::arg("children") = s.children, py::arg("peak") = s.peak);
      },
      py::arg("config"));
  m.def("report", &cmd_report, py::arg("config"));
  m.def(
      "synth",
      [](const SynthSpec& spec, const std::filesystem::path& out) {
        const auto o = cmd_synth(spec, out);
        return py::dict(py::arg("messages") = o.messages, py::arg("traces") = o.traces,
                        py::arg("edges") = o.edges, py::arg("regions") = o.regions);
      },
      py::arg("spec"), py::arg("output_dir"));
}
