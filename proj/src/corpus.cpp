#include "lund/corpus.hpp"

#include <algorithm>
#include <unordered_map>

#include "lund/error.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"
#include "lund/util/utf8.hpp"

namespace lund {

std::string_view to_string(Label label) {
  return label == Label::Fake ? "fake" : "legit";
}

std::optional<Label> parse_label(std::string_view text) {
  const auto s = utf8::ascii_lower(utf8::trim(text));
  if (s == "fake") return Label::Fake;
  if (s == "legit") return Label::Legit;
  return std::nullopt;
}

std::uint64_t fingerprint(std::string_view text) {
  return fnv1a(preprocess::clean_text(text));
}

NewsRecord validate_record(RawRecord candidate) {
  NewsRecord r;
  r.text = std::string(utf8::trim(candidate.text));
  if (r.text.empty()) {
    throw Error(ErrorKind::EmptyText, "record '" + candidate.id + "' has blank text");
  }
  if (!candidate.label) {
    throw Error(ErrorKind::MissingLabel, "record '" + candidate.id + "' has no label");
  }
  r.id = std::move(candidate.id);
  r.label = *candidate.label;
  if (candidate.domain) {
    auto d = utf8::ascii_lower(utf8::trim(*candidate.domain));
    if (!d.empty()) r.domain = std::move(d);
  }
  r.source_id = std::move(candidate.source_id);
  r.fingerprint = fingerprint(r.text);
  return r;
}

NewsRecord RecordValidator::validate(RawRecord candidate) {
  if (ids_.contains(candidate.id)) {
    throw Error(ErrorKind::DuplicateId, "id '" + candidate.id + "' already present");
  }
  NewsRecord r = validate_record(std::move(candidate));
  ids_.insert(r.id);
  return r;
}

namespace {

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' ||
                               text[i] == '\r' || text[i] == '\f' || text[i] == '\v')) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' ||
                                text[j] == '\r' || text[j] == '\f' || text[j] == '\v')) {
      ++j;
    }
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<TermFrequency> rank(const std::unordered_map<std::string, std::uint64_t>& counts,
                                std::size_t k) {
  std::vector<TermFrequency> all;
  all.reserve(counts.size());
  for (const auto& [t, c] : counts) all.push_back({t, c});
  auto by_rank = [](const TermFrequency& a, const TermFrequency& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.term < b.term;
  };
  if (k < all.size()) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      by_rank);
    all.resize(k);
  } else {
    std::sort(all.begin(), all.end(), by_rank);
  }
  return all;
}

std::unordered_map<std::string, std::uint64_t> term_counts(std::span<const NewsRecord> corpus,
                                                           Label label,
                                                           const preprocess::Stoplist& stoplist) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& r : corpus) {
    if (r.label != label) continue;
    for (auto& t : preprocess::remove_stopwords(
             preprocess::tokenize(preprocess::clean_text(r.text)), stoplist)) {
      ++counts[std::move(t)];
    }
  }
  return counts;
}

}  // namespace

CorpusStats compute_stats(std::span<const NewsRecord> corpus, std::size_t top_k,
                          const preprocess::Stoplist& stoplist) {
  CorpusStats s;
  // word -> bitmask of labels it occurs in
  std::unordered_map<std::string_view, unsigned> vocab;
  for (const auto& r : corpus) {
    ++s.total;
    ++s.per_label[index_of(r.label)];
    if (r.domain) ++s.per_domain[*r.domain];
    for (auto w : whitespace_tokens(r.text)) {
      ++s.total_words;
      vocab[w] |= 1u << index_of(r.label);
    }
  }
  s.unique_words = vocab.size();
  for (const auto& [w, mask] : vocab) {
    if (mask == 3u) ++s.shared_vocabulary;
  }
  for (Label l : kLabels) {
    s.top_terms[index_of(l)] = rank(term_counts(corpus, l, stoplist), top_k);
  }
  return s;
}

std::vector<TermFrequency> top_terms(std::span<const NewsRecord> corpus, Label label,
                                     std::size_t k, const preprocess::Stoplist& stoplist) {
  if (k == 0) return {};
  return rank(term_counts(corpus, label, stoplist), k);
}

nlohmann::ordered_json to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["total"] = s.total;
  j["per_label"] = {{"legit", s.per_label[index_of(Label::Legit)]},
                    {"fake", s.per_label[index_of(Label::Fake)]}};
  j["per_domain"] = nlohmann::ordered_json::object();
  for (const auto& [d, c] : s.per_domain) j["per_domain"][d] = c;
  j["total_words"] = s.total_words;
  j["unique_words"] = s.unique_words;
  j["shared_vocabulary"] = s.shared_vocabulary;
  auto terms = [](const std::vector<TermFrequency>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : v) arr.push_back({t.term, t.count});
    return arr;
  };
  j["top_terms"] = {{"legit", terms(s.top_terms[index_of(Label::Legit)])},
                    {"fake", terms(s.top_terms[index_of(Label::Fake)])}};
  return j;
}

std::string top_terms_tsv(const std::vector<TermFrequency>& terms) {
  std::string out = "term\tfrequency\n";
  for (const auto& t : terms) {
    out += t.term;
    out += '\t';
    out += std::to_string(t.count);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const NewsRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["label"] = to_string(r.label);
  j["domain"] = r.domain ? nlohmann::ordered_json(*r.domain) : nullptr;
  j["source_id"] = r.source_id;
  return j;
}

NewsRecord record_from_json(const nlohmann::json& j) {
  RawRecord raw;
  raw.id = j.at("id").get<std::string>();
  raw.text = j.value("text", std::string{});
  if (j.contains("label") && j.at("label").is_string()) {
    raw.label = parse_label(j.at("label").get<std::string>());
  }
  if (j.contains("domain") && j.at("domain").is_string()) {
    raw.domain = j.at("domain").get<std::string>();
  }
  raw.source_id = j.value("source_id", std::string{});
  return validate_record(std::move(raw));
}

std::string write_corpus(std::span<const NewsRecord> corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<NewsRecord> read_corpus(std::string_view jsonl) {
  std::vector<NewsRecord> out;
  std::unordered_set<std::string> ids;
  const auto lines = io::split_lines(utf8::strip_bom(jsonl));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (utf8::trim(lines[i]).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
      if (!j.is_object() || !j.contains("id")) throw std::invalid_argument("missing id");
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ParseError,
                  "corpus line " + std::to_string(i + 1) + ": " + e.what());
    }
    NewsRecord r;
    try {
      r = record_from_json(j);
    } catch (const Error& e) {
      const std::string what = e.what();
      throw Error(e.kind(), "corpus line " + std::to_string(i + 1) + ": " +
                                what.substr(to_string(e.kind()).size() + 2),
                  e.payload());
    }
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::DuplicateId,
                  "corpus line " + std::to_string(i + 1) + ": id '" + r.id + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, std::span<const NewsRecord> corpus) {
  io::write_file(path, write_corpus(corpus));
}

std::vector<NewsRecord> load_corpus(const std::filesystem::path& path) {
  return read_corpus(io::read_file(path));
}

}  // namespace lund
