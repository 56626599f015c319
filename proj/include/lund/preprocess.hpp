#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lund::features {
class Vocabulary;
}

namespace lund::preprocess {

using TokenSequence = std::vector<std::string>;
using Stoplist = std::set<std::string>;

// Ordered suffix-stripping rules. Rules are kept longest-suffix-first
// (measured in codepoints); among equal lengths the input order is kept.
class SuffixTable {
 public:
  struct Rule {
    std::string suffix;
    std::string replacement;
    bool operator==(const Rule&) const = default;
  };

  SuffixTable() = default;
  // Throws std::invalid_argument for an empty suffix or a replacement longer
  // than its suffix (stemming must never lengthen a token).
  explicit SuffixTable(std::vector<Rule> rules);

  // `suffix<TAB>replacement` per line; '#' comments and blank lines skipped.
  static SuffixTable parse(std::string_view tsv);
  std::string serialize() const;

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<Rule> rules_;
};

Stoplist parse_stoplist(std::string_view text);
std::string serialize_stoplist(const Stoplist& stoplist);

const Stoplist& default_stoplist();
const SuffixTable& default_suffix_table();

struct PreprocessConfig {
  Stoplist stoplist = default_stoplist();
  SuffixTable suffix_table = default_suffix_table();
  bool strip_urls = true;
  bool strip_ips = true;
  bool keep_question_mark = true;
  bool strip_diacritics = false;
  bool apply_stemming = true;

  static const PreprocessConfig& defaults();
};

nlohmann::ordered_json to_json(const PreprocessConfig& config);
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j);
std::uint64_t config_hash(const PreprocessConfig& config);

// Sentence punctuation kept by cleaning: ۔ ؟ ، . ? ,
bool is_sentence_punctuation(char32_t c);
bool is_sentence_punctuation(std::string_view token);

// Removes URLs, dotted-quad IPs and every symbol outside Urdu/Arabic letters,
// digits and sentence punctuation; folds Arabic-Indic digits to ASCII;
// collapses whitespace. Idempotent.
std::string clean_text(std::string_view text,
                       const PreprocessConfig& config = PreprocessConfig::defaults());

// Splits after ۔ ؟ . ? runs. Terminators stay on their sentence; a '.'
// between two digits is a decimal point, not a boundary.
std::vector<std::string> segment_sentences(std::string_view text);

// Splits on whitespace and ZWNJ; sentence punctuation becomes its own token.
TokenSequence tokenize(std::string_view text);

// Drops stop words and punctuation tokens, keeping order.
TokenSequence remove_stopwords(const TokenSequence& tokens,
                               const Stoplist& stoplist);

// Applies the longest matching rule whose result keeps at least two
// codepoints. At most one rule fires.
std::string stem(std::string_view token, const SuffixTable& table);

// clean -> tokenize -> stop words -> stem.
TokenSequence run_pipeline(std::string_view text, const PreprocessConfig& config);

// Maps tokens to vocabulary ids; out-of-vocabulary tokens map to 0 (UNK).
std::vector<std::uint32_t> encode(const TokenSequence& tokens,
                                  const features::Vocabulary& vocabulary);
TokenSequence decode(const std::vector<std::uint32_t>& ids,
                     const features::Vocabulary& vocabulary);

}  // namespace lund::preprocess
