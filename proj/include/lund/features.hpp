#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lund/preprocess.hpp"

namespace lund::features {

using preprocess::TokenSequence;

enum class Weighting { Counts, TfIdf };

struct NgramRange {
  unsigned lo = 1;
  unsigned hi = 1;
  bool operator==(const NgramRange&) const = default;
};

struct FeatureConfig {
  NgramRange word_ngrams{1, 2};
  std::optional<NgramRange> char_ngrams;
  std::size_t min_df = 2;
  std::optional<std::size_t> max_features = 50000;
  Weighting weighting = Weighting::TfIdf;
  bool include_sentiment = false;
  bool include_lexical_stats = false;

  // Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

nlohmann::ordered_json to_json(const FeatureConfig& config);
FeatureConfig feature_config_from_json(const nlohmann::json& j);

// Sparse id -> weight vector with entries sorted by id and no stored zeros.
// `space` tags the feature space that produced it (0 = untagged).
class FeatureVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  FeatureVector() = default;
  // Sorts by id, sums repeated ids and drops zeros. Throws
  // Error(NonFiniteFeature) on NaN or infinite weights.
  static FeatureVector from_entries(std::vector<Entry> entries,
                                    std::uint64_t space = 0);

  const std::vector<Entry>& entries() const { return entries_; }
  double norm() const { return norm_; }
  bool empty() const { return entries_.empty(); }
  std::uint64_t space() const { return space_; }
  std::uint32_t max_id() const { return entries_.empty() ? 0 : entries_.back().first; }

  double get(std::uint32_t id) const;
  double dot(std::span<const double> dense) const;
  double dot(const FeatureVector& other) const;
  FeatureVector scaled(double factor) const;

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<Entry> entries_;
  double norm_ = 0.0;
  std::uint64_t space_ = 0;
};

// Term dictionary. Id 0 is reserved for unknown terms; real terms occupy the
// contiguous range [1, size()] in byte (= codepoint) order.
class Vocabulary {
 public:
  static constexpr std::uint32_t kUnk = 0;

  Vocabulary();

  std::size_t size() const { return terms_.size() - 1; }
  std::uint32_t id_of(std::string_view term) const;
  const std::string& term(std::uint32_t id) const;
  std::uint64_t doc_freq(std::uint32_t id) const { return doc_freq_.at(id); }
  std::uint64_t n_docs() const { return n_docs_; }
  std::uint64_t hash() const;

  // Builds from explicit (term, doc_freq) rows; ids are reassigned in term
  // order. Used by loaders and tests.
  static Vocabulary from_rows(std::vector<std::pair<std::string, std::uint64_t>> rows,
                              std::uint64_t n_docs);

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> doc_freq_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t n_docs_ = 0;
};

// Word n-grams joined with '_' and '#'-prefixed char n-grams of each token,
// with repetition, in document order.
std::vector<std::string> extract_terms(const TokenSequence& tokens,
                                       const FeatureConfig& config);

// Throws Error(EmptyCorpus) when `documents` is empty.
Vocabulary build_vocabulary(std::span<const TokenSequence> documents,
                            const FeatureConfig& config);

// ln((1 + n_docs) / (1 + doc_freq)) + 1
double idf(const Vocabulary& vocabulary, std::uint32_t id);

// Sparse block only: raw counts, or L2-normalized tf * idf.
FeatureVector vectorize(const TokenSequence& tokens,
                        const Vocabulary& vocabulary,
                        const FeatureConfig& config);

using Lexicon = std::map<std::string, int>;
Lexicon parse_lexicon(std::string_view tsv);
std::string serialize_lexicon(const Lexicon& lexicon);
const Lexicon& default_lexicon();

// (positive - negative) / max(1, hits); 0 without hits.
double sentiment_score(const TokenSequence& tokens, const Lexicon& lexicon);

// token count, mean token length (codepoints), type/token ratio,
// punctuation count, digit-token count.
using LexicalStats = std::array<double, 5>;
LexicalStats lexical_stats(const TokenSequence& tokens);

// A fitted feature space: preprocessing, vocabulary and the dense trailing
// blocks. Ids above the vocabulary are reserved for lexical stats and then
// sentiment, when enabled.
class FeatureSpace {
 public:
  static FeatureSpace fit(std::span<const std::string> texts,
                          preprocess::PreprocessConfig preprocess_config,
                          FeatureConfig feature_config,
                          Lexicon lexicon = default_lexicon(),
                          std::size_t jobs = 1);

  FeatureVector featurize(std::string_view text) const;
  // Same as featurize() for text already passed through clean_text().
  FeatureVector featurize_cleaned(std::string_view cleaned) const;
  std::vector<FeatureVector> featurize_all(std::span<const std::string> texts,
                                           std::size_t jobs = 1) const;

  std::size_t dimension() const;
  std::uint32_t lexical_base() const;
  std::uint32_t sentiment_id() const;
  std::uint64_t hash() const { return hash_; }

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const FeatureConfig& feature_config() const { return feature_config_; }
  const preprocess::PreprocessConfig& preprocess_config() const {
    return preprocess_config_;
  }
  const Lexicon& lexicon() const { return lexicon_; }

  // UTF-8 TSV: one '#'-prefixed JSON header line, then term, id, doc_freq.
  std::string serialize() const;
  static FeatureSpace parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static FeatureSpace load(const std::filesystem::path& path);

 private:
  FeatureSpace(Vocabulary vocabulary, preprocess::PreprocessConfig pp,
               FeatureConfig fc, Lexicon lexicon);

  Vocabulary vocabulary_;
  preprocess::PreprocessConfig preprocess_config_;
  FeatureConfig feature_config_;
  Lexicon lexicon_;
  std::uint64_t hash_ = 0;
};

}  // namespace lund::features
