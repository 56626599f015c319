#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "lund/preprocess.hpp"

namespace lund {

enum class Label : std::uint8_t { Legit = 0, Fake = 1 };

constexpr std::array<Label, 2> kLabels{Label::Legit, Label::Fake};

constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }
constexpr Label other(Label l) { return l == Label::Fake ? Label::Legit : Label::Fake; }

std::string_view to_string(Label label);
// Accepts "legit" / "fake" (case-insensitive).
std::optional<Label> parse_label(std::string_view text);

struct NewsRecord {
  std::string id;
  std::string text;
  Label label = Label::Legit;
  std::optional<std::string> domain;
  std::string source_id;
  std::uint64_t fingerprint = 0;

  bool operator==(const NewsRecord&) const = default;
};

// Unvalidated input as read from a source.
struct RawRecord {
  std::string id;
  std::string text;
  std::optional<Label> label;
  std::optional<std::string> domain;
  std::string source_id;
};

// Hash of the cleaned, whitespace-collapsed text.
std::uint64_t fingerprint(std::string_view text);

// Single-record validation: trims text, lower-cases the domain tag and
// computes the fingerprint. Throws Error(EmptyText | MissingLabel).
NewsRecord validate_record(RawRecord candidate);

// Batch validation that also enforces id uniqueness (Error(DuplicateId)).
class RecordValidator {
 public:
  NewsRecord validate(RawRecord candidate);
  bool seen(const std::string& id) const { return ids_.contains(id); }

 private:
  std::unordered_set<std::string> ids_;
};

struct TermFrequency {
  std::string term;
  std::uint64_t count = 0;
  bool operator==(const TermFrequency&) const = default;
};

struct CorpusStats {
  std::uint64_t total = 0;
  std::array<std::uint64_t, 2> per_label{};
  std::map<std::string, std::uint64_t> per_domain;
  std::uint64_t total_words = 0;
  std::uint64_t unique_words = 0;
  std::uint64_t shared_vocabulary = 0;
  std::array<std::vector<TermFrequency>, 2> top_terms;
};

// Word counts use raw whitespace tokens (no cleaning or stemming). Top terms
// use cleaned tokens with stop words and punctuation removed.
CorpusStats compute_stats(std::span<const NewsRecord> corpus, std::size_t top_k = 50,
                          const preprocess::Stoplist& stoplist = preprocess::default_stoplist());

// k most frequent post-stop-word terms for a class; ties in codepoint order.
std::vector<TermFrequency> top_terms(std::span<const NewsRecord> corpus, Label label,
                                     std::size_t k,
                                     const preprocess::Stoplist& stoplist =
                                         preprocess::default_stoplist());

nlohmann::ordered_json to_json(const CorpusStats& stats);
std::string top_terms_tsv(const std::vector<TermFrequency>& terms);

// Line-delimited JSON with keys id, text, label, domain, source_id.
nlohmann::ordered_json to_json(const NewsRecord& record);
NewsRecord record_from_json(const nlohmann::json& j);
std::string write_corpus(std::span<const NewsRecord> corpus);
// Validates every line; Error(ParseError) carries the line number.
std::vector<NewsRecord> read_corpus(std::string_view jsonl);
void save_corpus(const std::filesystem::path& path, std::span<const NewsRecord> corpus);
std::vector<NewsRecord> load_corpus(const std::filesystem::path& path);

}  // namespace lund
