#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "geoprop/error.hpp"
#include "geoprop/topics.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "support/topic_fixtures.hpp"

using namespace geoprop;
using test::msg;

namespace {

void check_row_stochastic(const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (double v : m.row(r)) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

DocumentSet small_docs(std::uint64_t seed, std::size_t docs = 40) {
  return test::to_document_set(oracle::planted_corpus(seed, docs, 30));
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Ebola scares me http://t.co/x @bob") ==
        std::vector<std::string>{"ebola", "scares", "me"});
  CHECK(tokenize("#EbolaOutbreak in www.cdc.gov/ebola, don't panic!") ==
        std::vector<std::string>{"ebolaoutbreak", "in", "don't", "panic"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("ÉBOLA à Paris") == std::vector<std::string>{"ébola", "à", "paris"});
}

TEST_CASE("preprocess") {
  PreprocessOptions opts;
  opts.stopwords = {"me"};
  opts.min_df = 1;

  SUBCASE("rule application") {
    const Corpus c({msg("1", "u", 1, GeoPoint{0, 0}, "Ebola scares me http://t.co/x @bob")});
    const auto docs = preprocess(c, opts);
    REQUIRE(docs.docs.size() == 1);
    std::vector<std::string> words;
    for (auto t : docs.docs[0].tokens) words.push_back(docs.vocabulary.word(t));
    CHECK(words == std::vector<std::string>{"ebola", "scares"});
  }
  SUBCASE("one document per user") {
    const Corpus c({msg("1", "u", 1, GeoPoint{0, 0}, "ebola fear"),
                    msg("2", "u", 2, GeoPoint{0, 0}, "ebola news"),
                    msg("3", "v", 3, GeoPoint{0, 0}, "ebola")});
    const auto docs = preprocess(c, opts);
    REQUIRE(docs.docs.size() == 2);
    CHECK(docs.docs[0].user_id == "u");
    CHECK(docs.docs[0].tokens.size() == 4);
    CHECK(docs.token_count() == 5);
  }
  SUBCASE("min_df removes rare words") {
    opts.min_df = 2;
    const Corpus c({msg("1", "u", 1, GeoPoint{0, 0}, "ebola fear"),
                    msg("2", "v", 2, GeoPoint{0, 0}, "ebola news")});
    const auto docs = preprocess(c, opts);
    CHECK(docs.vocabulary.size() == 1);
    CHECK(docs.vocabulary.word(0) == "ebola");
  }
  SUBCASE("other languages are ignored and emptiness is an error") {
    const Corpus c({msg("1", "u", 1, GeoPoint{0, 0}, "ébola miedo", "es")});
    CHECK_THROWS_AS(preprocess(c, opts), Error);
  }
  SUBCASE("texts shared by many users are removed") {
    std::vector<Message> ms;
    for (int i = 0; i < 4; ++i) {
      ms.push_back(msg("h" + std::to_string(i), "u" + std::to_string(i), 1 + i, GeoPoint{0, 0},
                       "Breaking headline"));
    }
    ms.push_back(msg("own", "u0", 10, GeoPoint{0, 0}, "personal words"));
    opts.news_min_other_users = 3;
    const auto docs = preprocess(Corpus(ms), opts);
    REQUIRE(docs.docs.size() == 1);
    CHECK_FALSE(docs.vocabulary.find("breaking").has_value());
  }
}

TEST_CASE("gibbs_train invariants") {
  const auto docs = small_docs(1);
  LdaOptions opts;
  opts.topics = 4;
  opts.iterations = 30;
  opts.seed = 9;

  const std::size_t tokens = docs.token_count();
  std::size_t calls = 0;
  const auto model = gibbs_train(docs, opts, [&](const SamplerState& s) {
    ++calls;
    const std::size_t K = s.topics;
    CHECK(std::accumulate(s.topic_totals.begin(), s.topic_totals.end(), std::size_t{0}) == tokens);
    CHECK(std::accumulate(s.word_topic.begin(), s.word_topic.end(), std::size_t{0}) == tokens);
    CHECK(std::accumulate(s.doc_topic.begin(), s.doc_topic.end(), std::size_t{0}) == tokens);
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t col = 0;
      for (std::size_t w = 0; w < s.word_topic.size() / K; ++w) col += s.word_topic[w * K + k];
      CHECK(col == s.topic_totals[k]);
    }
  });
  CHECK(calls == opts.iterations + 1);
  check_row_stochastic(model.phi);
  check_row_stochastic(model.theta);
  CHECK(model.alpha == 50.0 / 4);
  CHECK(model.assignments.size() == docs.docs.size());

  const auto again = gibbs_train(docs, opts);
  CHECK(again.assignments == model.assignments);
  CHECK(again.phi == model.phi);
  CHECK(again.theta == model.theta);

  opts.seed = 10;
  CHECK(gibbs_train(docs, opts).assignments != model.assignments);

  opts.topics = 1;
  CHECK_THROWS_AS(gibbs_train(docs, opts), Error);
}

TEST_CASE("gibbs_train recovers planted topics") {
  const auto planted = oracle::planted_corpus(2024);
  const auto docs = test::to_document_set(planted);
  LdaOptions opts;
  opts.topics = 3;
  opts.iterations = 200;
  opts.seed = 3;
  const auto model = gibbs_train(docs, opts);
  CHECK(oracle::matched_min_cosine(test::phi_rows(model), planted.phi) >= 0.8);
}

TEST_CASE("perplexity closed forms") {
  for (std::size_t V : {10u, 100u}) {
    const auto model = test::fixed_model({std::vector<double>(V, 1.0 / V), std::vector<double>(V, 1.0 / V)});
    DocumentSet held;
    for (std::size_t w = 0; w < V; ++w) held.vocabulary.intern(test::word_name(w));
    held.docs.push_back({"a", {0, 1, 2, 3, 4, 5}});
    held.docs.push_back({"b", {7, 7, 7}});
    for (auto est : {PerplexityEstimator::FoldIn, PerplexityEstimator::DocumentCompletion}) {
      PerplexityOptions opts;
      opts.estimator = est;
      CHECK(std::abs(perplexity(model, held, opts).perplexity - static_cast<double>(V)) < 1e-6);
    }
  }

  std::vector<double> certain(5, 0.0);
  certain[2] = 1.0;
  const auto single = test::fixed_model({certain});
  DocumentSet repeat;
  for (std::size_t w = 0; w < 5; ++w) repeat.vocabulary.intern(test::word_name(w));
  repeat.docs.push_back({"a", {2, 2, 2, 2}});
  CHECK(std::abs(perplexity(single, repeat).perplexity - 1.0) < 1e-12);

  DocumentSet oov;
  oov.vocabulary.intern("never_seen");
  oov.docs.push_back({"a", {0, 0}});
  try {
    perplexity(single, oov);
    FAIL("expected NoTokens");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoTokens);
  }

  DocumentSet mixed = repeat;
  const auto extra = mixed.vocabulary.intern("never_seen");
  mixed.docs[0].tokens.push_back(extra);
  const auto r = perplexity(single, mixed, {50, 1, PerplexityEstimator::FoldIn});
  CHECK(r.out_of_vocabulary == 1);
  CHECK(r.tokens == 4);
}

TEST_CASE("choose_k") {
  const auto docs = small_docs(5);
  ChooseKOptions opts;
  opts.lda.iterations = 20;
  const std::vector<std::size_t> six{6};
  const auto r = choose_k(docs, six, opts);
  CHECK(r.best == 6);
  CHECK(r.perplexities.size() == 1);

  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(choose_k(docs, none, opts), Error);

  const std::vector<std::size_t> several{2, 3, 4};
  const auto a = choose_k(docs, several, opts);
  const auto b = choose_k(docs, several, opts);
  CHECK(a.perplexities == b.perplexities);
  CHECK(a.perplexities.at(a.best) == std::min({a.perplexities.at(2), a.perplexities.at(3),
                                                 a.perplexities.at(4)}));
}

TEST_CASE("dominant_topic") {
  const std::vector<double> a{0.1, 0.7, 0.2}, b{0.5, 0.5};
  CHECK(dominant_topic(a) == 2);
  CHECK(dominant_topic(b) == 1);
}

TEST_CASE("assign_topics and regional majorities") {
  TopicModel model = test::fixed_model({{0.5, 0.5}, {0.5, 0.5}});
  model.doc_users = {"u", "v"};
  model.theta = Matrix(2, 2);
  model.theta(0, 0) = 0.2;
  model.theta(0, 1) = 0.8;
  model.theta(1, 0) = 0.6;
  model.theta(1, 1) = 0.4;

  const Corpus c({msg("1", "u", 1, GeoPoint{0, 0}, "a", "en", "A"),
                  msg("2", "u", 2, GeoPoint{0, 0}, "b", "en", "A"),
                  msg("3", "u", 3, GeoPoint{0, 0}, "c", "en", "B"),
                  msg("4", "v", 4, GeoPoint{0, 0}, "d", "en", "B"),
                  msg("5", "w", 5, GeoPoint{0, 0}, "e", "en", "C")});
  const auto a = assign_topics(model, c);
  CHECK(a.unknown_user_messages == 1);
  CHECK(a.labeled.find("1")->topic == 2);
  CHECK(a.labeled.find("2")->topic == 2);
  CHECK(a.labeled.find("3")->topic == 2);
  CHECK(a.labeled.find("4")->topic == 1);
  CHECK_FALSE(a.labeled.find("5")->topic.has_value());

  const auto counts = topic_counts(a.labeled);
  CHECK(counts.at(1) == 1);
  CHECK(counts.at(2) == 3);

  const auto by_region = dominant_topic_by_region(a.labeled);
  CHECK(by_region.at("A") == 2);
  CHECK(by_region.at("B") == 1);  // one message each for topics 1 and 2
  CHECK_FALSE(by_region.contains("C"));
}

TEST_CASE("dominant_topic_by_region majority") {
  auto labeled = [](std::vector<int> topics) {
    std::vector<Message> ms;
    for (std::size_t i = 0; i < topics.size(); ++i) {
      auto m = msg(std::to_string(i), "u", 1 + static_cast<std::int64_t>(i), GeoPoint{0, 0}, "x", "en", "R");
      m.topic = topics[i];
      ms.push_back(m);
    }
    return Corpus(ms);
  };
  CHECK(dominant_topic_by_region(labeled({2, 2, 6})).at("R") == 2);
  CHECK(dominant_topic_by_region(labeled({6, 5})).at("R") == 5);
  CHECK(dominant_topic_by_region(Corpus{}).empty());
}

TEST_CASE("model persistence") {
  const auto docs = small_docs(8, 20);
  LdaOptions opts;
  opts.topics = 3;
  opts.iterations = 10;
  const auto model = gibbs_train(docs, opts);
  test::TempDir dir;
  save_model(dir.path() / "m.json", model);
  const auto back = load_model(dir.path() / "m.json");
  CHECK(back.phi == model.phi);
  CHECK(back.theta == model.theta);
  CHECK(back.vocabulary == model.vocabulary);
  CHECK(back.doc_users == model.doc_users);
  CHECK(back.alpha == model.alpha);
  save_model(dir.path() / "m2.json", back);
  CHECK(test::slurp(dir.path() / "m.json") == test::slurp(dir.path() / "m2.json"));

  CHECK_THROWS_AS(load_model(dir.write("bad.json", "{}")), Error);
  CHECK(top_words(model, 0, 5).size() == 5);
}
