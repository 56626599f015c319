#include "lund/preprocess.hpp"

#include <algorithm>
#include <stdexcept>

#include "lund/features.hpp"
#include "lund/resources.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"
#include "lund/util/utf8.hpp"

namespace lund::preprocess {
namespace {

constexpr char32_t kZwnj = 0x200C;
constexpr char32_t kUrduFullStop = 0x06D4;
constexpr char32_t kArabicQuestion = 0x061F;
constexpr char32_t kArabicComma = 0x060C;

bool is_arabic_mark(char32_t c) {
  return (c >= 0x0610 && c <= 0x061A) || (c >= 0x064B && c <= 0x065F) ||
         c == 0x0670 || (c >= 0x06D6 && c <= 0x06DC) ||
         (c >= 0x06DF && c <= 0x06E4) || (c >= 0x06E7 && c <= 0x06E8) ||
         (c >= 0x06EA && c <= 0x06ED) || (c >= 0x08D3 && c <= 0x08FF);
}

bool is_arabic_letter(char32_t c) {
  return (c >= 0x0620 && c <= 0x064A) || (c >= 0x066E && c <= 0x066F) ||
         (c >= 0x0671 && c <= 0x06D3) || c == 0x06D5 ||
         (c >= 0x06E5 && c <= 0x06E6) || (c >= 0x06EE && c <= 0x06EF) ||
         (c >= 0x06FA && c <= 0x06FC) || c == 0x06FF ||
         (c >= 0x0750 && c <= 0x077F) || (c >= 0x08A0 && c <= 0x08C9) ||
         (c >= 0xFB50 && c <= 0xFD3D) || (c >= 0xFD50 && c <= 0xFDFB) ||
         (c >= 0xFE70 && c <= 0xFEFC);
}

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

char32_t fold_digit(char32_t c) {
  if (c >= 0x0660 && c <= 0x0669) return U'0' + (c - 0x0660);
  if (c >= 0x06F0 && c <= 0x06F9) return U'0' + (c - 0x06F0);
  return c;
}

bool is_scheme_char(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
         is_ascii_digit(c) || c == U'+' || c == U'.' || c == U'-';
}

bool is_ascii_alnum(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
         is_ascii_digit(c);
}

char32_t ascii_lower(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c;
}

// Blanks out URL runs: from the scheme (or a word-initial "www.") to the end
// of the whitespace-delimited chunk.
void blank_urls(std::u32string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (utf8::is_space(s[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < s.size() && !utf8::is_space(s[end])) ++end;
    std::size_t cut = end;
    for (std::size_t k = i; k + 2 < end; ++k) {
      if (s[k] == U':' && s[k + 1] == U'/' && s[k + 2] == U'/') {
        std::size_t start = k;
        while (start > i && is_scheme_char(s[start - 1])) --start;
        // Scheme must start with a letter.
        while (start < k && !((s[start] >= U'a' && s[start] <= U'z') ||
                              (s[start] >= U'A' && s[start] <= U'Z'))) {
          ++start;
        }
        if (start < k) {
          cut = std::min(cut, start);
          break;
        }
      }
    }
    for (std::size_t k = i; k + 3 < end && k < cut; ++k) {
      const bool boundary = k == i || !is_ascii_alnum(s[k - 1]);
      if (boundary && ascii_lower(s[k]) == U'w' &&
          ascii_lower(s[k + 1]) == U'w' && ascii_lower(s[k + 2]) == U'w' &&
          s[k + 3] == U'.') {
        cut = k;
        break;
      }
    }
    for (std::size_t k = cut; k < end; ++k) s[k] = U' ';
    i = end;
  }
}

// Matches a dotted quad with octets <= 255 starting at `pos`; returns the
// end offset or 0 when there is no match.
std::size_t match_ip(const std::u32string& s, std::size_t pos) {
  std::size_t i = pos;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (i >= s.size() || s[i] != U'.') return 0;
      ++i;
    }
    std::size_t digits = 0;
    unsigned value = 0;
    while (i < s.size() && is_ascii_digit(s[i]) && digits < 3) {
      value = value * 10 + static_cast<unsigned>(s[i] - U'0');
      ++i;
      ++digits;
    }
    if (digits == 0 || value > 255) return 0;
  }
  if (i < s.size() && is_ascii_digit(s[i])) return 0;
  if (i + 1 < s.size() && s[i] == U'.' && is_ascii_digit(s[i + 1])) return 0;
  return i;
}

void blank_ips(std::u32string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_ascii_digit(s[i])) continue;
    if (i > 0 && (is_ascii_digit(s[i - 1]) || s[i - 1] == U'.')) continue;
    if (std::size_t end = match_ip(s, i)) {
      for (std::size_t k = i; k < end; ++k) s[k] = U' ';
      i = end - 1;
    }
  }
}

bool is_terminator(char32_t c) {
  return c == kUrduFullStop || c == kArabicQuestion || c == U'.' || c == U'?';
}

bool flanked_by_digits(const std::u32string& s, std::size_t i) {
  return i > 0 && i + 1 < s.size() && is_ascii_digit(s[i - 1]) &&
         is_ascii_digit(s[i + 1]);
}

}  // namespace

SuffixTable::SuffixTable(std::vector<Rule> rules) {
  for (const auto& r : rules) {
    if (r.suffix.empty()) throw std::invalid_argument("empty suffix rule");
    if (utf8::length(r.replacement) > utf8::length(r.suffix)) {
      throw std::invalid_argument("suffix rule lengthens tokens: " + r.suffix);
    }
  }
  std::stable_sort(rules.begin(), rules.end(),
                   [](const Rule& a, const Rule& b) {
                     return utf8::length(a.suffix) > utf8::length(b.suffix);
                   });
  rules_ = std::move(rules);
}

SuffixTable SuffixTable::parse(std::string_view tsv) {
  std::vector<Rule> rules;
  for (std::string_view line : io::split_lines(utf8::strip_bom(tsv))) {
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    Rule r;
    if (tab == std::string_view::npos) {
      r.suffix = std::string(utf8::trim(line));
    } else {
      r.suffix = std::string(utf8::trim(line.substr(0, tab)));
      r.replacement = std::string(utf8::trim(line.substr(tab + 1)));
    }
    if (r.suffix.empty()) continue;
    rules.push_back(std::move(r));
  }
  return SuffixTable(std::move(rules));
}

std::string SuffixTable::serialize() const {
  std::string out;
  for (const auto& r : rules_) {
    out += r.suffix;
    out += '\t';
    out += r.replacement;
    out += '\n';
  }
  return out;
}

Stoplist parse_stoplist(std::string_view text) {
  Stoplist out;
  for (std::string_view line : io::split_lines(utf8::strip_bom(text))) {
    line = utf8::trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.emplace(line);
  }
  return out;
}

std::string serialize_stoplist(const Stoplist& stoplist) {
  std::string out;
  for (const auto& w : stoplist) {
    out += w;
    out += '\n';
  }
  return out;
}

const Stoplist& default_stoplist() {
  static const Stoplist list = parse_stoplist(resources::default_stoplist());
  return list;
}

const SuffixTable& default_suffix_table() {
  static const SuffixTable table =
      SuffixTable::parse(resources::default_suffix_rules());
  return table;
}

const PreprocessConfig& PreprocessConfig::defaults() {
  static const PreprocessConfig config{};
  return config;
}

nlohmann::ordered_json to_json(const PreprocessConfig& config) {
  nlohmann::ordered_json j;
  j["strip_urls"] = config.strip_urls;
  j["strip_ips"] = config.strip_ips;
  j["keep_question_mark"] = config.keep_question_mark;
  j["strip_diacritics"] = config.strip_diacritics;
  j["apply_stemming"] = config.apply_stemming;
  j["stoplist"] = std::vector<std::string>(config.stoplist.begin(),
                                           config.stoplist.end());
  auto rules = nlohmann::ordered_json::array();
  for (const auto& r : config.suffix_table.rules()) {
    rules.push_back({r.suffix, r.replacement});
  }
  j["suffix_table"] = std::move(rules);
  return j;
}

PreprocessConfig preprocess_config_from_json(const nlohmann::json& j) {
  PreprocessConfig c;
  c.strip_urls = j.value("strip_urls", c.strip_urls);
  c.strip_ips = j.value("strip_ips", c.strip_ips);
  c.keep_question_mark = j.value("keep_question_mark", c.keep_question_mark);
  c.strip_diacritics = j.value("strip_diacritics", c.strip_diacritics);
  c.apply_stemming = j.value("apply_stemming", c.apply_stemming);
  if (j.contains("stoplist")) {
    c.stoplist.clear();
    for (const auto& w : j.at("stoplist")) c.stoplist.insert(w.get<std::string>());
  }
  if (j.contains("suffix_table")) {
    std::vector<SuffixTable::Rule> rules;
    for (const auto& r : j.at("suffix_table")) {
      rules.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>()});
    }
    c.suffix_table = SuffixTable(std::move(rules));
  }
  return c;
}

std::uint64_t config_hash(const PreprocessConfig& config) {
  return fnv1a(to_json(config).dump());
}

bool is_sentence_punctuation(char32_t c) {
  return c == kUrduFullStop || c == kArabicQuestion || c == kArabicComma ||
         c == U'.' || c == U'?' || c == U',';
}

bool is_sentence_punctuation(std::string_view token) {
  const auto cps = utf8::decode(token);
  return cps.size() == 1 && is_sentence_punctuation(cps[0]);
}

std::string clean_text(std::string_view text, const PreprocessConfig& config) {
  std::u32string s = utf8::decode(utf8::strip_bom(text));
  for (char32_t& c : s) c = fold_digit(c);
  if (config.strip_urls) blank_urls(s);

  for (char32_t& c : s) {
    if (utf8::is_space(c)) {
      c = U' ';
    } else if (is_arabic_letter(c) || is_ascii_digit(c) || c == kZwnj) {
      if (config.strip_diacritics && c == 0x0640) c = 0;  // tatweel
    } else if (is_arabic_mark(c)) {
      if (config.strip_diacritics) c = 0;
    } else if (is_sentence_punctuation(c)) {
      if (!config.keep_question_mark && (c == U'?' || c == kArabicQuestion)) {
        c = U' ';
      }
    } else {
      c = U' ';
    }
  }
  std::erase(s, char32_t{0});
  if (config.strip_ips) blank_ips(s);

  std::u32string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c == U' ') {
      if (!out.empty() && out.back() != U' ') out.push_back(U' ');
    } else {
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == U' ') out.pop_back();
  return utf8::encode(out);
}

std::vector<std::string> segment_sentences(std::string_view text) {
  const std::u32string s = utf8::decode(text);
  std::vector<std::string> sentences;
  std::u32string current;
  bool has_content = false;

  auto flush = [&] {
    if (has_content) {
      sentences.push_back(std::string(utf8::trim(utf8::encode(current))));
    }
    current.clear();
    has_content = false;
  };

  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (is_terminator(c) && !(c == U'.' && flanked_by_digits(s, i))) {
      current.push_back(c);
      while (i + 1 < s.size() && is_terminator(s[i + 1])) current.push_back(s[++i]);
      flush();
      continue;
    }
    if (!utf8::is_space(c)) has_content = true;
    if (utf8::is_space(c) && current.empty()) continue;
    current.push_back(c);
  }
  flush();
  return sentences;
}

TokenSequence tokenize(std::string_view text) {
  const std::u32string s = utf8::decode(text);
  TokenSequence tokens;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(utf8::encode(current));
    current.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (utf8::is_space(c) || c == kZwnj) {
      flush();
    } else if (is_sentence_punctuation(c)) {
      if ((c == U'.' || c == U',') && flanked_by_digits(s, i)) {
        current.push_back(c);
        continue;
      }
      flush();
      tokens.push_back(utf8::encode(std::u32string(1, c)));
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

TokenSequence remove_stopwords(const TokenSequence& tokens,
                               const Stoplist& stoplist) {
  TokenSequence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (is_sentence_punctuation(t) || stoplist.contains(t)) continue;
    out.push_back(t);
  }
  return out;
}

std::string stem(std::string_view token, const SuffixTable& table) {
  const std::size_t token_len = utf8::length(token);
  for (const auto& rule : table.rules()) {
    if (!token.ends_with(rule.suffix)) continue;
    const std::size_t result_len = token_len - utf8::length(rule.suffix) +
                                   utf8::length(rule.replacement);
    if (result_len < 2) continue;
    std::string out(token.substr(0, token.size() - rule.suffix.size()));
    out += rule.replacement;
    return out;
  }
  return std::string(token);
}

TokenSequence run_pipeline(std::string_view text,
                           const PreprocessConfig& config) {
  TokenSequence tokens =
      remove_stopwords(tokenize(clean_text(text, config)), config.stoplist);
  if (config.apply_stemming) {
    for (auto& t : tokens) t = stem(t, config.suffix_table);
  }
  return tokens;
}

std::vector<std::uint32_t> encode(const TokenSequence& tokens,
                                  const features::Vocabulary& vocabulary) {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocabulary.id_of(t));
  return ids;
}

TokenSequence decode(const std::vector<std::uint32_t>& ids,
                     const features::Vocabulary& vocabulary) {
  TokenSequence out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocabulary.term(id));
  return out;
}

}  // namespace lund::preprocess
