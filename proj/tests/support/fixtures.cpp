#include "fixtures.hpp"

#include <set>
#include <stdexcept>

#include "lund/preprocess.hpp"
#include "lund/util/rng.hpp"
#include "lund/util/utf8.hpp"

namespace lund::testing {

namespace {

// Letters only; no vowel marks, so cleaning leaves words intact.
constexpr char32_t kLetters[] = {U'ب', U'پ', U'ت', U'ٹ', U'ث', U'ج', U'چ', U'ح', U'خ',
                                 U'د', U'ڈ', U'ذ', U'ر', U'ڑ', U'ز', U'ژ', U'س', U'ش',
                                 U'ص', U'ض', U'ط', U'ظ', U'ع', U'غ', U'ف', U'ق', U'ک',
                                 U'گ', U'ل', U'م', U'ن', U'و', U'ہ', U'ا'};

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::vector<std::string> urdu_words(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto& config = preprocess::PreprocessConfig::defaults();
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (++attempts > n * 1000 + 10000) throw std::runtime_error("urdu_words: alphabet exhausted");
    std::u32string cps;
    const std::size_t len = 3 + rng.below(4);
    for (std::size_t i = 0; i < len; ++i) cps += kLetters[rng.below(std::size(kLetters))];
    const auto word = utf8::encode(cps);
    if (seen.contains(word)) continue;
    const auto processed = preprocess::run_pipeline(word, config);
    if (processed.size() != 1 || processed[0] != word) continue;
    seen.insert(word);
    out.push_back(word);
  }
  return out;
}

std::vector<NewsRecord> separable_corpus(const SeparableSpec& spec) {
  const auto words = urdu_words(2 * spec.core_words + spec.noise_words, spec.seed);
  const std::vector<std::string> legit(words.begin(), words.begin() + spec.core_words);
  const std::vector<std::string> fake(words.begin() + spec.core_words,
                                      words.begin() + 2 * spec.core_words);
  const std::vector<std::string> noise(words.begin() + 2 * spec.core_words, words.end());

  Rng rng(derive_seed(spec.seed, 1));
  std::vector<NewsRecord> out;
  out.reserve(spec.items);
  for (std::size_t i = 0; i < spec.items; ++i) {
    const Label label = i % 2 == 0 ? Label::Fake : Label::Legit;
    const auto& core = label == Label::Fake ? fake : legit;
    const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
    std::vector<std::string> tokens;
    for (std::size_t t = 0; t < len; ++t) {
      if (rng.uniform() < spec.noise_fraction) {
        tokens.push_back(noise[rng.below(noise.size())]);
      } else {
        tokens.push_back(core[rng.below(core.size())]);
      }
    }
    out.push_back(make_record("b" + std::to_string(i), join(tokens), label, "bench"));
  }
  return out;
}

DedupFixture dedup_fixture(std::size_t decoys, std::size_t exact, std::size_t near,
                           std::size_t words, std::uint64_t seed) {
  if (exact + near > decoys) throw std::invalid_argument("dedup_fixture: too few decoys");
  const auto vocab = urdu_words(4000, seed);
  Rng rng(derive_seed(seed, 2));
  DedupFixture f;
  std::vector<std::vector<std::string>> texts;
  for (std::size_t d = 0; d < decoys; ++d) {
    std::vector<std::string> tokens;
    for (std::size_t w = 0; w < words; ++w) tokens.push_back(vocab[rng.below(vocab.size())]);
    texts.push_back(tokens);
    f.decoy_ids.push_back("d" + std::to_string(d));
    f.records.push_back(make_record(f.decoy_ids.back(), join(tokens),
                                    d % 2 ? Label::Legit : Label::Fake));
  }
  // Distinct originals for every planted duplicate.
  std::vector<std::size_t> order(decoys);
  for (std::size_t i = 0; i < decoys; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t e = 0; e < exact; ++e) {
    const auto src = order[e];
    f.exact_ids.push_back("x" + std::to_string(e));
    f.records.push_back(make_record(f.exact_ids.back(), f.records[src].text, f.records[src].label));
  }
  for (std::size_t n = 0; n < near; ++n) {
    const auto src = order[exact + n];
    auto tokens = texts[src];
    // Interior position so the edit touches a full window of shingles.
    const std::size_t pos = 10 + rng.below(words - 20);
    std::string replacement;
    do {
      replacement = vocab[rng.below(vocab.size())];
    } while (replacement == tokens[pos]);
    tokens[pos] = replacement;
    f.near_ids.push_back("n" + std::to_string(n));
    f.records.push_back(make_record(f.near_ids.back(), join(tokens), f.records[src].label));
  }
  return f;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lund_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

NewsRecord make_record(std::string id, std::string text, Label label, std::string source_id) {
  RawRecord raw;
  raw.id = std::move(id);
  raw.text = std::move(text);
  raw.label = label;
  raw.source_id = std::move(source_id);
  return validate_record(std::move(raw));
}

}  // namespace lund::testing
