#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lund/corpus.hpp"

namespace lund::harmonize {

enum class SourceFormat { DelimitedTable, TreeStructured, Markup };

std::string_view to_string(SourceFormat format);
// Accepts "delimited"/"csv"/"tsv", "tree"/"json"/"jsonl", "markup"/"xml".
SourceFormat parse_format(std::string_view name);

// Result of label normalization: a binary label, or an explicit drop.
struct LabelDecision {
  std::optional<Label> label;  // nullopt = Drop
  bool is_drop() const { return !label.has_value(); }
  bool operator==(const LabelDecision&) const = default;
};

class LabelMap {
 public:
  // Canonical form of a raw label: trimmed, ASCII lower case, '_' and runs of
  // whitespace folded to one space.
  static std::string normalize_key(std::string_view raw);

  // nullopt target = Drop.
  void set(std::string_view raw, std::optional<Label> target);
  std::optional<LabelDecision> find(std::string_view raw) const;
  void merge(const LabelMap& other);  // entries of `other` win

  // Mappings worth a second look by the manifest author: a plain "true"
  // routed to Fake.
  std::vector<std::string> review_flags() const;

  const std::map<std::string, std::optional<Label>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  // Partial-truth categories -> Fake, verified categories -> Legit.
  static const LabelMap& default_map();

 private:
  std::map<std::string, std::optional<Label>> entries_;
};

// Throws Error(UnmappedLabel) naming the raw label.
LabelDecision normalize_label(std::string_view raw, const LabelMap& label_map);

struct ExpectedCounts {
  std::uint64_t total = 0;
  std::uint64_t fake = 0;
  std::uint64_t legit = 0;
  bool operator==(const ExpectedCounts&) const = default;
};

struct SourceManifest {
  std::string source_id;
  std::string url;
  SourceFormat format = SourceFormat::DelimitedTable;
  // canonical field (text, label, domain, id) -> column name or
  // slash-separated path; "@name" addresses an XML attribute.
  std::map<std::string, std::string> field_map;
  LabelMap label_map;
  std::optional<ExpectedCounts> expected_counts;
  // Tree: slash path to the record array (empty = document root or JSON
  // lines). Markup: slash path of the repeated record element.
  std::string record_path;
  char delimiter = ',';
  std::optional<std::filesystem::path> payload;

  // Throws Error(InvalidManifest) when text/label are not mapped.
  void validate() const;
  static SourceManifest from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
  static SourceManifest load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

struct IngestResult {
  std::vector<NewsRecord> records;
  std::uint64_t rows = 0;
  std::uint64_t dropped = 0;       // rows whose label mapped to Drop
  std::uint64_t skipped_empty = 0; // rows with blank text
};

// Parses `payload` under the manifest's format. Throws Error(ParseError |
// UnmappedLabel | FieldMissing | DuplicateId).
IngestResult ingest_source(const SourceManifest& manifest, std::string_view payload);

struct CountCheck {
  bool ok = false;
  ExpectedCounts expected;
  ExpectedCounts actual;
};

// nullopt when the manifest declares no expected counts.
std::optional<CountCheck> verify_counts(const SourceManifest& manifest,
                                        const IngestResult& result);

// --- dedup ------------------------------------------------------------------

struct DedupConfig {
  enum class Method { Auto, Exhaustive, MinHash };
  double threshold = 0.9;
  std::size_t shingle_size = 5;
  Method method = Method::Auto;
  std::size_t minhash_permutations = 128;
  std::size_t minhash_bands = 16;
  // Auto uses exhaustive comparison up to this many records.
  std::size_t exhaustive_limit = 5000;
  std::uint64_t seed = 0;
};

struct DuplicateMember {
  std::string id;
  double similarity = 1.0;
  bool exact = false;
};

struct DuplicateCluster {
  std::string kept_id;
  std::vector<DuplicateMember> removed;
  double similarity() const;  // lowest member similarity
};

struct LabelConflict {
  std::string kept_id;
  std::string removed_id;
  Label kept_label;
  Label removed_label;
};

struct DedupReport {
  std::uint64_t exact_removed = 0;
  std::uint64_t near_removed = 0;
  std::vector<DuplicateCluster> clusters;
  std::vector<LabelConflict> label_conflicts;

  nlohmann::ordered_json to_json() const;
};

struct DedupResult {
  std::vector<NewsRecord> records;
  DedupReport report;
};

// Word shingles of the normalized text, hashed, sorted and unique. Texts
// shorter than k words yield one shingle covering all words.
std::vector<std::uint64_t> shingle_set(std::string_view text, std::size_t k);
double jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Exact pass on normalized-text equality, then near pass on shingle Jaccard
// against kept records. First occurrence wins.
DedupResult deduplicate(std::vector<NewsRecord> records, const DedupConfig& config = {});

// --- balancing and splitting ---------------------------------------------------

struct BalancePolicy {
  std::optional<std::size_t> max_per_domain;
  std::map<std::string, std::size_t> target_counts;  // per-domain caps
};

// Largest-remainder proportional allocation of `cap` over label counts;
// remainder ties go to Fake.
std::array<std::size_t, 2> allocate_proportional(std::array<std::size_t, 2> counts,
                                                 std::size_t cap);

// Downsamples capped domains; records without a domain are untouched.
// Survivors keep their input order.
std::vector<NewsRecord> balance_domains(std::vector<NewsRecord> records,
                                        const BalancePolicy& policy, std::uint64_t seed);

enum class Partition { Train, Test };

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_ratio = 0.8;
  std::vector<std::pair<std::string, Partition>> assignment;  // corpus order

  std::size_t count(Partition p) const;
  std::optional<Partition> partition_of(const std::string& id) const;
  nlohmann::ordered_json to_json() const;
  static SplitSpec from_json(const nlohmann::ordered_json& j);
};

// ceil(n * ratio), robust to the representation error of `ratio`.
std::size_t train_count(std::size_t n, double ratio);

// Per-label seeded shuffle; the first train_count(n_label, ratio) go to Train.
SplitSpec stratified_split(std::span<const NewsRecord> records, double train_ratio,
                           std::uint64_t seed);

struct FuseResult {
  std::vector<NewsRecord> corpus;
  DedupReport report;
  std::vector<std::pair<std::string, std::string>> renamed_ids;  // old -> new
};

// Concatenate -> validate -> deduplicate. Ids colliding with an earlier
// source are prefixed with "<source_id>:".
FuseResult fuse(std::vector<std::vector<NewsRecord>> sources,
                const DedupConfig& config = {});

}  // namespace lund::harmonize
