#pragma once

// Synthetic corpora shared by unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lund/corpus.hpp"

namespace lund::testing {

// `n` distinct Urdu-script pseudo-words that pass through the default
// preprocessing pipeline unchanged (no stop words, no stemming hits).
std::vector<std::string> urdu_words(std::size_t n, std::uint64_t seed);

struct SeparableSpec {
  std::size_t items = 2000;
  std::size_t core_words = 60;   // per class, disjoint
  std::size_t noise_words = 120; // shared by both classes
  double noise_fraction = 0.3;
  std::size_t min_len = 20;
  std::size_t max_len = 40;
  std::uint64_t seed = 7;
};

// Balanced corpus: each token is drawn from the record's class core with
// probability 1 - noise_fraction, otherwise from the shared noise pool.
std::vector<NewsRecord> separable_corpus(const SeparableSpec& spec);

struct DedupFixture {
  std::vector<NewsRecord> records;
  std::vector<std::string> decoy_ids;
  std::vector<std::string> exact_ids;  // planted copies
  std::vector<std::string> near_ids;   // planted one-word edits
};

// `decoys` unrelated texts of `words` words, then `exact` verbatim copies and
// `near` single-word replacements of distinct decoys.
DedupFixture dedup_fixture(std::size_t decoys, std::size_t exact, std::size_t near,
                           std::size_t words, std::uint64_t seed);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

NewsRecord make_record(std::string id, std::string text, Label label,
                       std::string source_id = "s");

}  // namespace lund::testing
