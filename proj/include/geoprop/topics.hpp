#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "geoprop/corpus.hpp"

namespace geoprop {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class Vocabulary {
 public:
  /// Index of `word`, inserting it if new.
  std::uint32_t intern(std::string_view word);
  std::optional<std::uint32_t> find(std::string_view word) const;

  const std::string& word(std::uint32_t id) const { return words_[id]; }
  std::span<const std::string> words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }

  /// Documents containing each word (filled by preprocess).
  std::vector<std::uint32_t> doc_freq;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Document {
  std::string user_id;
  std::vector<std::uint32_t> tokens;
};

struct DocumentSet {
  std::vector<Document> docs;
  Vocabulary vocabulary;

  std::size_t token_count() const;
  /// Same vocabulary, only the documents at `indices`.
  DocumentSet subset(std::span<const std::size_t> indices) const;
};

/// Lowercased tokens of a message: URLs and @-mentions removed, hashtags
/// reduced to their body, split on anything that is not a letter, digit,
/// apostrophe-inside-word or underscore.
std::vector<std::string> tokenize(std::string_view text);

struct PreprocessOptions {
  std::string language = "en";
  std::unordered_set<std::string> stopwords;
  std::uint32_t min_df = 2;
  /// Messages whose normalized text is also posted by at least this many
  /// other users are treated as headline shares and removed. 0 disables.
  std::size_t news_min_other_users = 20;
};

/// One document per user (ordered by user id) from the target-language
/// messages. Throws EmptyAfterPreprocess when nothing survives.
DocumentSet preprocess(const Corpus& corpus, const PreprocessOptions& options);

/// Stopword file: one word per line, '#' comments allowed.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);
/// A small built-in English list.
std::unordered_set<std::string> default_english_stopwords();

struct LdaOptions {
  std::size_t topics = 6;
  /// Defaults to 50 / topics.
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;

  double resolved_alpha() const { return alpha.value_or(50.0 / static_cast<double>(topics)); }
};

struct TopicModel {
  std::size_t topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> vocabulary;
  std::vector<std::string> doc_users;
  Matrix phi;    // topics x vocabulary
  Matrix theta;  // documents x topics
  std::vector<std::vector<std::uint16_t>> assignments;
};

/// Count tables exposed to the per-iteration observer.
struct SamplerState {
  std::size_t iteration = 0;
  std::span<const std::uint32_t> topic_totals;  // K
  std::span<const std::uint32_t> word_topic;    // V x K
  std::span<const std::uint32_t> doc_topic;     // D x K
  std::size_t topics = 0;
};

using SamplerObserver = std::function<void(const SamplerState&)>;

/// Collapsed Gibbs sampling; phi and theta are the smoothed point estimates
/// from the final sample. Identical inputs and seed give identical output.
TopicModel gibbs_train(const DocumentSet& docs, const LdaOptions& options,
                       const SamplerObserver& observer = {});

enum class PerplexityEstimator {
  /// Theta is inferred from the tokens it then scores.
  FoldIn,
  /// Theta is inferred from alternate tokens and the others are scored.
  DocumentCompletion,
};

struct PerplexityOptions {
  std::size_t fold_in_iterations = 50;
  std::uint64_t seed = 1;
  PerplexityEstimator estimator = PerplexityEstimator::DocumentCompletion;
};

struct PerplexityResult {
  double perplexity = 0.0;
  std::size_t tokens = 0;  // scored
  std::size_t out_of_vocabulary = 0;
};

/// exp(-sum log p(w) / N) over scored held-out tokens. Each held-out theta is
/// inferred by Gibbs fold-in with phi fixed. Throws NoTokens when no token
/// is in the model vocabulary.
PerplexityResult perplexity(const TopicModel& model, const DocumentSet& heldout,
                            const PerplexityOptions& options = {});

struct ChooseKOptions {
  double heldout_frac = 0.1;
  std::uint64_t seed = 1;
  LdaOptions lda;  // topics is overridden per candidate
  PerplexityOptions perplexity;
};

struct ChooseKResult {
  std::size_t best = 0;
  std::map<std::size_t, double> perplexities;
};

/// Trains each candidate on a seeded training split and keeps the lowest
/// held-out perplexity (smaller K on ties).
ChooseKResult choose_k(const DocumentSet& docs, std::span<const std::size_t> candidates,
                       const ChooseKOptions& options = {});

/// Argmax of a theta row as a 1-indexed topic, lowest index on ties.
int dominant_topic(std::span<const double> theta_row);

struct TopicAssignment {
  Corpus labeled;
  std::size_t unknown_user_messages = 0;
};

/// Every message inherits its author's dominant topic. Messages whose author
/// has no document stay unlabeled and are counted.
TopicAssignment assign_topics(const TopicModel& model, const Corpus& corpus);

/// Most frequent topic per region among labeled messages, lower topic on
/// ties. Regions without labeled messages are absent.
std::map<std::string, int> dominant_topic_by_region(const Corpus& labeled);

/// Messages per topic (1-indexed key).
std::map<int, std::size_t> topic_counts(const Corpus& labeled);

std::vector<std::string> top_words(const TopicModel& model, std::size_t topic, std::size_t n);

void save_model(const std::filesystem::path& path, const TopicModel& model);
TopicModel load_model(const std::filesystem::path& path);

/// Columns: topic, tweet_count, top_words (space separated, by phi).
void write_topic_report(std::ostream& out, const TopicModel& model,
                        const std::map<int, std::size_t>& counts, std::size_t words = 20);

}  // namespace geoprop
