#include "geoprop/topics.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <set>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"
#include "geoprop/random.hpp"
#include "geoprop/text.hpp"

namespace geoprop {

std::uint32_t Vocabulary::intern(std::string_view word) {
  const auto [it, inserted] =
      index_.emplace(std::string(word), static_cast<std::uint32_t>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t DocumentSet::token_count() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.tokens.size();
  return n;
}

DocumentSet DocumentSet::subset(std::span<const std::size_t> indices) const {
  DocumentSet out;
  out.vocabulary = vocabulary;
  out.docs.reserve(indices.size());
  for (std::size_t i : indices) out.docs.push_back(docs.at(i));
  return out;
}

// ---- preprocessing --------------------------------------------------------

namespace {

bool is_word(UChar32 c) { return u_isalnum(c) || c == '_'; }
bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019; }

void split_chunk(const icu::UnicodeString& chunk, std::vector<std::string>& out) {
  icu::UnicodeString current;
  bool skipping_mention = false;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string word;
      current.toUTF8String(word);
      out.push_back(std::move(word));
      current.remove();
    }
  };
  const int32_t len = chunk.length();
  for (int32_t i = 0; i < len;) {
    const UChar32 c = chunk.char32At(i);
    const int32_t next = i + U16_LENGTH(c);
    if (is_word(c)) {
      if (!skipping_mention) current.append(c);
    } else if (is_apostrophe(c) && !current.isEmpty() && next < len && is_word(chunk.char32At(next))) {
      current.append(c);
    } else {
      flush();
      // '@' that opens a word starts a mention; skip its word characters.
      skipping_mention = c == '@';
      i = next;
      continue;
    }
    i = next;
  }
  flush();
}

bool is_url(const icu::UnicodeString& chunk) {
  return chunk.indexOf(icu::UnicodeString("://")) >= 0 ||
         chunk.startsWith(icu::UnicodeString("www."));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view input) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(input.data(), static_cast<int32_t>(input.size())));
  s.foldCase(U_FOLD_CASE_DEFAULT);

  std::vector<std::string> tokens;
  icu::UnicodeString chunk;
  auto take_chunk = [&] {
    if (!chunk.isEmpty() && !is_url(chunk)) split_chunk(chunk, tokens);
    chunk.remove();
  };
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      take_chunk();
    } else {
      chunk.append(c);
    }
  }
  take_chunk();
  return tokens;
}

std::unordered_set<std::string> default_english_stopwords() {
  return {"a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",
          "are",   "as",    "at",    "be",    "been",  "but",   "by",    "can",   "could",
          "did",   "do",    "does",  "for",   "from",  "had",   "has",   "have",  "he",
          "her",   "him",   "his",   "how",   "i",     "i'm",   "if",    "in",    "into",
          "is",    "it",    "it's",  "its",   "just",  "me",    "more",  "my",    "no",
          "not",   "now",   "of",    "on",    "one",   "or",    "our",   "out",   "rt",
          "she",   "so",    "some",  "than",  "that",  "the",   "their", "them",  "then",
          "there", "these", "they",  "this",  "to",    "up",    "us",    "was",   "we",
          "were",  "what",  "when",  "which", "who",   "why",   "will",  "with",  "would",
          "you",   "your"};
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::unordered_set<std::string> words;
  std::size_t begin = 0;
  while (begin <= content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string::npos) end = content.size();
    auto line = text::trim(std::string_view(content).substr(begin, end - begin));
    begin = end + 1;
    if (!line.empty() && line.front() != '#') words.insert(text::casefold(line));
  }
  return words;
}

DocumentSet preprocess(const Corpus& corpus, const PreprocessOptions& options) {
  std::vector<const Message*> selected;
  for (const auto& m : corpus.messages()) {
    if (m.language == options.language) selected.push_back(&m);
  }

  if (options.news_min_other_users > 0) {
    std::map<std::string, std::set<std::string_view>> posters;
    std::vector<std::string> normalized;
    normalized.reserve(selected.size());
    for (const Message* m : selected) {
      normalized.push_back(text::normalize_for_dedup(m->text));
      posters[normalized.back()].insert(m->user_id);
    }
    std::vector<const Message*> kept;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (posters[normalized[i]].size() <= options.news_min_other_users) kept.push_back(selected[i]);
    }
    selected = std::move(kept);
  }

  std::map<std::string, std::vector<std::string>> by_user;
  for (const Message* m : selected) {
    auto& bag = by_user[m->user_id];
    for (auto& token : tokenize(m->text)) {
      if (text::codepoint_length(token) < 2 || options.stopwords.contains(token)) continue;
      bag.push_back(std::move(token));
    }
  }

  std::map<std::string, std::uint32_t> df;
  for (const auto& [user, tokens] : by_user) {
    const std::set<std::string_view> distinct(tokens.begin(), tokens.end());
    for (auto word : distinct) ++df[std::string(word)];
  }

  DocumentSet out;
  for (const auto& [word, n] : df) {
    if (n >= options.min_df) {
      out.vocabulary.intern(word);
      out.vocabulary.doc_freq.push_back(n);
    }
  }
  for (const auto& [user, tokens] : by_user) {
    Document doc{user, {}};
    for (const auto& token : tokens) {
      if (const auto id = out.vocabulary.find(token)) doc.tokens.push_back(*id);
    }
    if (!doc.tokens.empty()) out.docs.push_back(std::move(doc));
  }
  if (out.docs.empty()) {
    throw Error(ErrorKind::EmptyAfterPreprocess, "no documents survive preprocessing");
  }
  return out;
}

// ---- collapsed Gibbs sampler ----------------------------------------------

namespace {

std::size_t sample_index(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

}  // namespace

TopicModel gibbs_train(const DocumentSet& docs, const LdaOptions& options,
                       const SamplerObserver& observer) {
  const std::size_t K = options.topics;
  const std::size_t V = docs.vocabulary.size();
  const std::size_t D = docs.docs.size();
  if (K < 2) throw Error(ErrorKind::InvalidArgument, "LDA needs at least two topics");
  if (K > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "too many topics");
  }
  if (options.iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
  if (V == 0 || D == 0) throw Error(ErrorKind::InvalidArgument, "empty document set");
  const double alpha = options.resolved_alpha();
  const double beta = options.beta;
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha and beta must be positive");
  }
  const double v_beta = static_cast<double>(V) * beta;

  std::vector<std::uint32_t> word_topic(V * K, 0);
  std::vector<std::uint32_t> doc_topic(D * K, 0);
  std::vector<std::uint32_t> topic_totals(K, 0);
  std::vector<std::vector<std::uint16_t>> z(D);

  Rng rng(options.seed);
  for (std::size_t d = 0; d < D; ++d) {
    const auto& tokens = docs.docs[d].tokens;
    z[d].resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto k = static_cast<std::uint16_t>(rng.below(K));
      z[d][i] = k;
      ++word_topic[tokens[i] * K + k];
      ++doc_topic[d * K + k];
      ++topic_totals[k];
    }
  }

  auto notify = [&](std::size_t iteration) {
    if (observer) observer({iteration, topic_totals, word_topic, doc_topic, K});
  };
  notify(0);

  std::vector<double> cumulative(K);
  for (std::size_t iter = 1; iter <= options.iterations; ++iter) {
    for (std::size_t d = 0; d < D; ++d) {
      const auto& tokens = docs.docs[d].tokens;
      std::uint32_t* nd = &doc_topic[d * K];
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::uint32_t* nw = &word_topic[tokens[i] * K];
        std::uint16_t k = z[d][i];
        --nw[k];
        --nd[k];
        --topic_totals[k];

        double acc = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
          acc += (nw[t] + beta) / (topic_totals[t] + v_beta) * (nd[t] + alpha);
          cumulative[t] = acc;
        }
        k = static_cast<std::uint16_t>(sample_index(cumulative, rng.uniform()));

        z[d][i] = k;
        ++nw[k];
        ++nd[k];
        ++topic_totals[k];
      }
    }
    notify(iter);
  }

  TopicModel model;
  model.topics = K;
  model.alpha = alpha;
  model.beta = beta;
  model.iterations = options.iterations;
  model.seed = options.seed;
  model.vocabulary.assign(docs.vocabulary.words().begin(), docs.vocabulary.words().end());
  for (const auto& doc : docs.docs) model.doc_users.push_back(doc.user_id);

  model.phi = Matrix(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = topic_totals[k] + v_beta;
    for (std::size_t w = 0; w < V; ++w) model.phi(k, w) = (word_topic[w * K + k] + beta) / denom;
  }
  model.theta = Matrix(D, K);
  const double k_alpha = static_cast<double>(K) * alpha;
  for (std::size_t d = 0; d < D; ++d) {
    const double denom = static_cast<double>(docs.docs[d].tokens.size()) + k_alpha;
    for (std::size_t k = 0; k < K; ++k) model.theta(d, k) = (doc_topic[d * K + k] + alpha) / denom;
  }
  model.assignments = std::move(z);
  return model;
}

// ---- held-out evaluation --------------------------------------------------

PerplexityResult perplexity(const TopicModel& model, const DocumentSet& heldout,
                            const PerplexityOptions& options) {
  const std::size_t K = model.topics;
  if (K == 0 || model.phi.rows() != K || model.phi.cols() != model.vocabulary.size()) {
    throw Error(ErrorKind::InvalidArgument, "model is not trained");
  }
  std::unordered_map<std::string_view, std::uint32_t> model_index;
  for (std::size_t w = 0; w < model.vocabulary.size(); ++w) {
    model_index.emplace(model.vocabulary[w], static_cast<std::uint32_t>(w));
  }

  PerplexityResult result;
  Rng rng(options.seed);
  double log_likelihood = 0.0;
  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> scored;
  std::vector<std::uint32_t> counts(K);
  std::vector<std::size_t> z;
  std::vector<double> cumulative(K);
  std::vector<double> theta(K);
  const double alpha = model.alpha;

  for (const auto& doc : heldout.docs) {
    words.clear();
    for (auto token : doc.tokens) {
      const auto it = model_index.find(heldout.vocabulary.word(token));
      if (it == model_index.end()) {
        ++result.out_of_vocabulary;
      } else {
        words.push_back(it->second);
      }
    }
    if (words.empty()) continue;

    // Document completion: infer theta from even positions, score the odd
    // ones. Single-token documents are scored on the token they were fit to.
    scored.clear();
    if (options.estimator == PerplexityEstimator::DocumentCompletion && words.size() >= 2) {
      std::size_t kept = 0;
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i % 2 == 1) {
          scored.push_back(words[i]);
        } else {
          words[kept++] = words[i];
        }
      }
      words.resize(kept);
    } else {
      scored = words;
    }

    // Fold-in: resample this document's assignments with phi held fixed.
    std::fill(counts.begin(), counts.end(), 0);
    z.assign(words.size(), 0);
    for (auto& k : z) {
      k = rng.below(K);
      ++counts[k];
    }
    for (std::size_t iter = 0; iter < options.fold_in_iterations; ++iter) {
      for (std::size_t i = 0; i < words.size(); ++i) {
        --counts[z[i]];
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          acc += model.phi(k, words[i]) * (counts[k] + alpha);
          cumulative[k] = acc;
        }
        z[i] = sample_index(cumulative, rng.uniform());
        ++counts[z[i]];
      }
    }
    const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * alpha;
    for (std::size_t k = 0; k < K; ++k) theta[k] = (counts[k] + alpha) / denom;

    for (auto w : scored) {
      double p = 0.0;
      for (std::size_t k = 0; k < K; ++k) p += theta[k] * model.phi(k, w);
      log_likelihood += std::log(p);
    }
    result.tokens += scored.size();
  }
  if (result.tokens == 0) {
    throw Error(ErrorKind::NoTokens, "no held-out token is in the model vocabulary");
  }
  result.perplexity = std::exp(-log_likelihood / static_cast<double>(result.tokens));
  return result;
}

ChooseKResult choose_k(const DocumentSet& docs, std::span<const std::size_t> candidates,
                       const ChooseKOptions& options) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no candidate topic counts");
  const std::size_t D = docs.docs.size();
  if (!(options.heldout_frac > 0.0 && options.heldout_frac < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "heldout_frac must lie in (0, 1)");
  }
  const auto heldout_n = static_cast<std::size_t>(
      std::ceil(options.heldout_frac * static_cast<double>(D) - 1e-9));
  if (heldout_n == 0 || heldout_n >= D) {
    throw Error(ErrorKind::InvalidArgument, "held-out split would leave a side empty");
  }

  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);
  for (std::size_t i = D - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<std::size_t> heldout_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(heldout_n));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(heldout_n), order.end());
  std::sort(heldout_idx.begin(), heldout_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  const DocumentSet train = docs.subset(train_idx);
  const DocumentSet heldout = docs.subset(heldout_idx);

  std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  ChooseKResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k : sorted) {
    LdaOptions lda = options.lda;
    lda.topics = k;
    if (!options.lda.alpha) lda.alpha.reset();
    const TopicModel model = gibbs_train(train, lda);
    const double value = perplexity(model, heldout, options.perplexity).perplexity;
    result.perplexities[k] = value;
    if (value < best) {
      best = value;
      result.best = k;
    }
  }
  return result;
}

// ---- labeling -------------------------------------------------------------

int dominant_topic(std::span<const double> theta_row) {
  if (theta_row.empty()) throw Error(ErrorKind::InvalidArgument, "empty theta row");
  const auto it = std::max_element(theta_row.begin(), theta_row.end());
  return static_cast<int>(it - theta_row.begin()) + 1;
}

TopicAssignment assign_topics(const TopicModel& model, const Corpus& corpus) {
  std::unordered_map<std::string_view, int> user_topic;
  for (std::size_t d = 0; d < model.doc_users.size(); ++d) {
    user_topic.emplace(model.doc_users[d], dominant_topic(model.theta.row(d)));
  }
  TopicAssignment out;
  std::vector<Message> labeled;
  labeled.reserve(corpus.size());
  for (const auto& m : corpus.messages()) {
    Message copy = m;
    if (const auto it = user_topic.find(m.user_id); it != user_topic.end()) {
      copy.topic = it->second;
    } else {
      copy.topic.reset();
      ++out.unknown_user_messages;
    }
    labeled.push_back(std::move(copy));
  }
  Provenance p = corpus.provenance();
  p.log.push_back({"assign_topics", labeled.size(), 0});
  out.labeled = Corpus(std::move(labeled), std::move(p));
  return out;
}

std::map<std::string, int> dominant_topic_by_region(const Corpus& labeled) {
  std::map<std::string, std::map<int, std::size_t>> tallies;
  for (const auto& m : labeled.messages()) {
    if (m.region && m.topic) ++tallies[*m.region][*m.topic];
  }
  std::map<std::string, int> out;
  for (const auto& [region, counts] : tallies) {
    int best_topic = 0;
    std::size_t best_count = 0;
    for (const auto& [topic, n] : counts) {  // ascending topic, so ties keep the lower one
      if (n > best_count) {
        best_topic = topic;
        best_count = n;
      }
    }
    out.emplace(region, best_topic);
  }
  return out;
}

std::map<int, std::size_t> topic_counts(const Corpus& labeled) {
  std::map<int, std::size_t> counts;
  for (const auto& m : labeled.messages()) {
    if (m.topic) ++counts[*m.topic];
  }
  return counts;
}

std::vector<std::string> top_words(const TopicModel& model, std::size_t topic, std::size_t n) {
  const auto row = model.phi.row(topic);
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return row[a] != row[b] ? row[a] > row[b] : a < b;
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(model.vocabulary[order[i]]);
  return out;
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr const char* kModelFormat = "geoprop-lda";
constexpr int kModelVersion = 1;

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) {
    throw Error(ErrorKind::FormatMismatch, "model matrix has the wrong shape");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw Error(ErrorKind::FormatMismatch, "model matrix has the wrong shape");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const std::filesystem::path& path, const TopicModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["topics"] = model.topics;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["iterations"] = model.iterations;
  j["seed"] = model.seed;
  j["vocabulary"] = model.vocabulary;
  j["doc_users"] = model.doc_users;
  j["phi"] = matrix_json(model.phi);
  j["theta"] = matrix_json(model.theta);
  auto out = open_output(path);
  out << j.dump() << '\n';
  if (!out.flush()) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
}

TopicModel load_model(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (!j.is_object() || j.value("format", "") != kModelFormat ||
      j.value("version", 0) != kModelVersion) {
    throw Error(ErrorKind::FormatMismatch, path.string() + ": not a topic model file");
  }
  try {
    TopicModel m;
    m.topics = j.at("topics").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    m.doc_users = j.at("doc_users").get<std::vector<std::string>>();
    m.phi = matrix_from_json(j.at("phi"), m.topics, m.vocabulary.size());
    m.theta = matrix_from_json(j.at("theta"), m.doc_users.size(), m.topics);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatMismatch, path.string() + ": " + e.what());
  }
}

void write_topic_report(std::ostream& out, const TopicModel& model,
                        const std::map<int, std::size_t>& counts, std::size_t words) {
  out << "topic,tweet_count,top_words\n";
  for (std::size_t k = 0; k < model.topics; ++k) {
    const int topic = static_cast<int>(k) + 1;
    const auto it = counts.find(topic);
    std::string joined;
    for (const auto& w : top_words(model, k, words)) {
      if (!joined.empty()) joined.push_back(' ');
      joined += w;
    }
    out << topic << ',' << (it == counts.end() ? 0 : it->second) << ',' << csv_escape(joined)
        << '\n';
  }
}

}  // namespace geoprop
