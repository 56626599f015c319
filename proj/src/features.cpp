#include "lund/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "lund/error.hpp"
#include "lund/resources.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"
#include "lund/util/parallel.hpp"
#include "lund/util/utf8.hpp"

namespace lund::features {

namespace {

const std::string kUnkTerm = "<unk>";

std::string weighting_name(Weighting w) {
  return w == Weighting::Counts ? "counts" : "tfidf";
}

nlohmann::ordered_json range_json(const NgramRange& r) {
  return nlohmann::ordered_json::array({r.lo, r.hi});
}

NgramRange range_from_json(const nlohmann::json& j) {
  return NgramRange{j.at(0).get<unsigned>(), j.at(1).get<unsigned>()};
}

}  // namespace

void FeatureConfig::validate() const {
  if (word_ngrams.lo < 1 || word_ngrams.lo > word_ngrams.hi || word_ngrams.hi > 3) {
    throw std::invalid_argument("word n-gram range must satisfy 1 <= lo <= hi <= 3");
  }
  if (char_ngrams &&
      (char_ngrams->lo < 2 || char_ngrams->lo > char_ngrams->hi || char_ngrams->hi > 5)) {
    throw std::invalid_argument("char n-gram range must satisfy 2 <= lo <= hi <= 5");
  }
  if (min_df < 1) throw std::invalid_argument("min_df must be >= 1");
  if (max_features && *max_features < 1) {
    throw std::invalid_argument("max_features must be >= 1");
  }
}

nlohmann::ordered_json to_json(const FeatureConfig& c) {
  nlohmann::ordered_json j;
  j["word_ngram_range"] = range_json(c.word_ngrams);
  j["char_ngram_range"] = c.char_ngrams ? range_json(*c.char_ngrams) : nullptr;
  j["min_df"] = c.min_df;
  j["max_features"] = c.max_features ? nlohmann::ordered_json(*c.max_features) : nullptr;
  j["weighting"] = weighting_name(c.weighting);
  j["include_sentiment"] = c.include_sentiment;
  j["include_lexical_stats"] = c.include_lexical_stats;
  return j;
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig c;
  if (j.contains("word_ngram_range")) c.word_ngrams = range_from_json(j.at("word_ngram_range"));
  if (j.contains("char_ngram_range")) {
    const auto& r = j.at("char_ngram_range");
    c.char_ngrams = r.is_null() ? std::nullopt : std::optional(range_from_json(r));
  }
  c.min_df = j.value("min_df", c.min_df);
  if (j.contains("max_features")) {
    const auto& m = j.at("max_features");
    c.max_features = m.is_null() ? std::nullopt : std::optional(m.get<std::size_t>());
  }
  if (j.contains("weighting")) {
    const auto w = j.at("weighting").get<std::string>();
    if (w == "counts") {
      c.weighting = Weighting::Counts;
    } else if (w == "tfidf") {
      c.weighting = Weighting::TfIdf;
    } else {
      throw std::invalid_argument("unknown weighting: " + w);
    }
  }
  c.include_sentiment = j.value("include_sentiment", c.include_sentiment);
  c.include_lexical_stats = j.value("include_lexical_stats", c.include_lexical_stats);
  c.validate();
  return c;
}

// --- FeatureVector ---------------------------------------------------------

FeatureVector FeatureVector::from_entries(std::vector<Entry> entries,
                                          std::uint64_t space) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  FeatureVector v;
  v.space_ = space;
  v.entries_.reserve(entries.size());
  for (const auto& [id, w] : entries) {
    if (!std::isfinite(w)) {
      throw Error(ErrorKind::NonFiniteFeature, "feature " + std::to_string(id));
    }
    if (!v.entries_.empty() && v.entries_.back().first == id) {
      v.entries_.back().second += w;
    } else {
      v.entries_.emplace_back(id, w);
    }
  }
  std::erase_if(v.entries_, [](const Entry& e) { return e.second == 0.0; });
  double sq = 0.0;
  for (const auto& e : v.entries_) sq += e.second * e.second;
  v.norm_ = std::sqrt(sq);
  return v;
}

double FeatureVector::get(std::uint32_t id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, std::uint32_t k) { return e.first < k; });
  return (it != entries_.end() && it->first == id) ? it->second : 0.0;
}

double FeatureVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& [id, w] : entries_) {
    if (id < dense.size()) s += w * dense[id];
  }
  return s;
}

double FeatureVector::dot(const FeatureVector& other) const {
  double s = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      s += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return s;
}

FeatureVector FeatureVector::scaled(double factor) const {
  std::vector<Entry> e = entries_;
  for (auto& x : e) x.second *= factor;
  return from_entries(std::move(e), space_);
}

// --- Vocabulary ------------------------------------------------------------

Vocabulary::Vocabulary() : terms_{kUnkTerm}, doc_freq_{0} {}

std::uint32_t Vocabulary::id_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::term(std::uint32_t id) const {
  return id < terms_.size() ? terms_[id] : terms_[kUnk];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a("lund-vocabulary");
  h = fnv1a(std::to_string(n_docs_), h);
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    h = fnv1a(terms_[i], h);
    h = fnv1a("\t", h);
    h = fnv1a(std::to_string(doc_freq_[i]), h);
    h = fnv1a("\n", h);
  }
  return h;
}

Vocabulary Vocabulary::from_rows(std::vector<std::pair<std::string, std::uint64_t>> rows,
                                 std::uint64_t n_docs) {
  std::sort(rows.begin(), rows.end());
  Vocabulary v;
  v.n_docs_ = n_docs;
  for (auto& [term, df] : rows) {
    if (df > n_docs) throw std::invalid_argument("doc_freq exceeds n_docs for " + term);
    const auto id = static_cast<std::uint32_t>(v.terms_.size());
    if (!v.index_.emplace(term, id).second) {
      throw std::invalid_argument("duplicate vocabulary term " + term);
    }
    v.terms_.push_back(std::move(term));
    v.doc_freq_.push_back(df);
  }
  return v;
}

std::vector<std::string> extract_terms(const TokenSequence& tokens,
                                       const FeatureConfig& config) {
  std::vector<std::string> terms;
  for (unsigned n = config.word_ngrams.lo; n <= config.word_ngrams.hi; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string t = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        t += '_';
        t += tokens[i + k];
      }
      terms.push_back(std::move(t));
    }
  }
  if (config.char_ngrams) {
    for (const auto& tok : tokens) {
      const auto cps = utf8::decode(tok);
      for (unsigned n = config.char_ngrams->lo; n <= config.char_ngrams->hi; ++n) {
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
          terms.push_back("#" + utf8::encode(std::u32string_view(cps).substr(i, n)));
        }
      }
    }
  }
  return terms;
}

Vocabulary build_vocabulary(std::span<const TokenSequence> documents,
                            const FeatureConfig& config) {
  config.validate();
  if (documents.empty()) throw Error(ErrorKind::EmptyCorpus, "no documents");

  struct Freq {
    std::uint64_t df = 0;
    std::uint64_t tf = 0;
  };
  std::unordered_map<std::string, Freq> freq;
  for (const auto& doc : documents) {
    std::unordered_set<std::string> seen;
    for (auto& t : extract_terms(doc, config)) {
      auto& f = freq[t];
      ++f.tf;
      if (seen.insert(std::move(t)).second) ++f.df;
    }
  }

  std::vector<std::pair<std::string, Freq>> kept;
  for (auto& [term, f] : freq) {
    if (f.df >= config.min_df) kept.emplace_back(term, f);
  }
  if (config.max_features && kept.size() > *config.max_features) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second.tf != b.second.tf) return a.second.tf > b.second.tf;
      return a.first < b.first;
    });
    kept.resize(*config.max_features);
  }
  std::vector<std::pair<std::string, std::uint64_t>> rows;
  rows.reserve(kept.size());
  for (auto& [term, f] : kept) rows.emplace_back(std::move(term), f.df);
  return Vocabulary::from_rows(std::move(rows), documents.size());
}

double idf(const Vocabulary& vocabulary, std::uint32_t id) {
  const double n = static_cast<double>(vocabulary.n_docs());
  const double df = static_cast<double>(vocabulary.doc_freq(id));
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

FeatureVector vectorize(const TokenSequence& tokens, const Vocabulary& vocabulary,
                        const FeatureConfig& config) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : extract_terms(tokens, config)) {
    const auto id = vocabulary.id_of(t);
    if (id != Vocabulary::kUnk) counts[id] += 1.0;
  }
  std::vector<FeatureVector::Entry> entries(counts.begin(), counts.end());
  if (config.weighting == Weighting::TfIdf) {
    double sq = 0.0;
    for (auto& [id, w] : entries) {
      w *= idf(vocabulary, id);
      sq += w * w;
    }
    const double norm = std::sqrt(sq);
    if (norm > 0.0) {
      for (auto& e : entries) e.second /= norm;
    }
  }
  return FeatureVector::from_entries(std::move(entries));
}

// --- dense blocks ----------------------------------------------------------

Lexicon parse_lexicon(std::string_view tsv) {
  Lexicon lex;
  for (std::string_view line : io::split_lines(utf8::strip_bom(tsv))) {
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "lexicon line without tab: " + std::string(line));
    }
    const auto term = utf8::trim(line.substr(0, tab));
    const auto pol = utf8::trim(line.substr(tab + 1));
    int value = 0;
    if (pol == "+1" || pol == "1") {
      value = 1;
    } else if (pol == "-1") {
      value = -1;
    } else {
      throw Error(ErrorKind::ParseError, "lexicon polarity must be +1 or -1: " + std::string(line));
    }
    lex[std::string(term)] = value;
  }
  return lex;
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  std::string out;
  for (const auto& [term, v] : lexicon) {
    out += term;
    out += v > 0 ? "\t+1\n" : "\t-1\n";
  }
  return out;
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = parse_lexicon(resources::default_sentiment_lexicon());
  return lex;
}

double sentiment_score(const TokenSequence& tokens, const Lexicon& lexicon) {
  int pos = 0;
  int neg = 0;
  for (const auto& t : tokens) {
    auto it = lexicon.find(t);
    if (it == lexicon.end()) continue;
    (it->second > 0 ? pos : neg) += 1;
  }
  const int hits = pos + neg;
  return static_cast<double>(pos - neg) / static_cast<double>(std::max(1, hits));
}

LexicalStats lexical_stats(const TokenSequence& tokens) {
  LexicalStats s{};
  if (tokens.empty()) return s;
  double total_len = 0.0;
  double punct = 0.0;
  double digits = 0.0;
  std::unordered_set<std::string_view> types;
  for (const auto& t : tokens) {
    total_len += static_cast<double>(utf8::length(t));
    types.insert(t);
    if (preprocess::is_sentence_punctuation(t)) punct += 1.0;
    if (!t.empty() && std::all_of(t.begin(), t.end(), [](char c) {
          return (c >= '0' && c <= '9') || c == '.' || c == ',';
        }) && std::any_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      digits += 1.0;
    }
  }
  const double n = static_cast<double>(tokens.size());
  s[0] = n;
  s[1] = total_len / n;
  s[2] = static_cast<double>(types.size()) / n;
  s[3] = punct;
  s[4] = digits;
  return s;
}

// --- FeatureSpace ----------------------------------------------------------

FeatureSpace::FeatureSpace(Vocabulary vocabulary, preprocess::PreprocessConfig pp,
                           FeatureConfig fc, Lexicon lexicon)
    : vocabulary_(std::move(vocabulary)),
      preprocess_config_(std::move(pp)),
      feature_config_(fc),
      lexicon_(std::move(lexicon)) {
  std::uint64_t h = vocabulary_.hash();
  h = fnv1a(to_json(feature_config_).dump(), h);
  h = fnv1a(preprocess::to_json(preprocess_config_).dump(), h);
  if (feature_config_.include_sentiment) h = fnv1a(serialize_lexicon(lexicon_), h);
  hash_ = h == 0 ? 1 : h;
}

FeatureSpace FeatureSpace::fit(std::span<const std::string> texts,
                               preprocess::PreprocessConfig preprocess_config,
                               FeatureConfig feature_config, Lexicon lexicon,
                               std::size_t jobs) {
  feature_config.validate();
  std::vector<TokenSequence> docs(texts.size());
  parallel_for(texts.size(), jobs, [&](std::size_t i) {
    docs[i] = preprocess::run_pipeline(texts[i], preprocess_config);
  });
  Vocabulary vocab = build_vocabulary(docs, feature_config);
  return FeatureSpace(std::move(vocab), std::move(preprocess_config), feature_config,
                      std::move(lexicon));
}

std::uint32_t FeatureSpace::lexical_base() const {
  return static_cast<std::uint32_t>(vocabulary_.size() + 1);
}

std::uint32_t FeatureSpace::sentiment_id() const {
  return lexical_base() + (feature_config_.include_lexical_stats ? 5u : 0u);
}

std::size_t FeatureSpace::dimension() const {
  return sentiment_id() + (feature_config_.include_sentiment ? 1u : 0u);
}

FeatureVector FeatureSpace::featurize(std::string_view text) const {
  return featurize_cleaned(preprocess::clean_text(text, preprocess_config_));
}

FeatureVector FeatureSpace::featurize_cleaned(std::string_view cleaned) const {
  const auto raw = preprocess::tokenize(cleaned);
  TokenSequence tokens = preprocess::remove_stopwords(raw, preprocess_config_.stoplist);
  if (preprocess_config_.apply_stemming) {
    for (auto& t : tokens) t = preprocess::stem(t, preprocess_config_.suffix_table);
  }
  FeatureVector sparse = vectorize(tokens, vocabulary_, feature_config_);
  if (!feature_config_.include_lexical_stats && !feature_config_.include_sentiment) {
    return FeatureVector::from_entries(sparse.entries(), hash_);
  }
  std::vector<FeatureVector::Entry> entries = sparse.entries();
  if (feature_config_.include_lexical_stats) {
    const auto stats = lexical_stats(raw);
    for (std::uint32_t k = 0; k < stats.size(); ++k) {
      entries.emplace_back(lexical_base() + k, stats[k]);
    }
  }
  if (feature_config_.include_sentiment) {
    entries.emplace_back(sentiment_id(), sentiment_score(raw, lexicon_));
  }
  return FeatureVector::from_entries(std::move(entries), hash_);
}

std::vector<FeatureVector> FeatureSpace::featurize_all(std::span<const std::string> texts,
                                                       std::size_t jobs) const {
  std::vector<FeatureVector> out(texts.size());
  parallel_for(texts.size(), jobs, [&](std::size_t i) { out[i] = featurize(texts[i]); });
  return out;
}

std::string FeatureSpace::serialize() const {
  nlohmann::ordered_json header;
  header["format"] = "lund-vocabulary";
  header["n_docs"] = vocabulary_.n_docs();
  header["config_hash"] = to_hex(hash_);
  header["feature_config"] = to_json(feature_config_);
  header["preprocess"] = preprocess::to_json(preprocess_config_);
  if (feature_config_.include_sentiment) {
    nlohmann::ordered_json lex = nlohmann::ordered_json::object();
    for (const auto& [t, v] : lexicon_) lex[t] = v;
    header["lexicon"] = std::move(lex);
  }
  std::string out = "#" + header.dump() + "\n";
  for (std::uint32_t id = 1; id <= vocabulary_.size(); ++id) {
    out += vocabulary_.term(id);
    out += '\t';
    out += std::to_string(id);
    out += '\t';
    out += std::to_string(vocabulary_.doc_freq(id));
    out += '\n';
  }
  return out;
}

FeatureSpace FeatureSpace::parse(std::string_view text) {
  const auto lines = io::split_lines(utf8::strip_bom(text));
  if (lines.empty() || lines[0].empty() || lines[0][0] != '#') {
    throw Error(ErrorKind::ParseError, "vocabulary file lacks JSON header line");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(lines[0].substr(1));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("vocabulary header: ") + e.what());
  }
  const auto n_docs = header.at("n_docs").get<std::uint64_t>();
  std::vector<std::pair<std::string, std::uint64_t>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "vocabulary line " + std::to_string(i + 1));
    }
    const auto id = std::stoul(std::string(line.substr(t1 + 1, t2 - t1 - 1)));
    if (id != rows.size() + 1) {
      throw Error(ErrorKind::ParseError,
                  "vocabulary ids must be contiguous, line " + std::to_string(i + 1));
    }
    rows.emplace_back(std::string(line.substr(0, t1)),
                      std::stoull(std::string(line.substr(t2 + 1))));
  }
  Lexicon lexicon = default_lexicon();
  if (header.contains("lexicon")) {
    lexicon.clear();
    for (const auto& [t, v] : header.at("lexicon").items()) lexicon[t] = v.get<int>();
  }
  FeatureSpace space(Vocabulary::from_rows(std::move(rows), n_docs),
                     preprocess::preprocess_config_from_json(header.at("preprocess")),
                     feature_config_from_json(header.at("feature_config")),
                     std::move(lexicon));
  if (header.contains("config_hash") &&
      header.at("config_hash").get<std::string>() != to_hex(space.hash())) {
    throw Error(ErrorKind::ParseError, "vocabulary config hash does not match its contents");
  }
  return space;
}

void FeatureSpace::save(const std::filesystem::path& path) const {
  io::write_file(path, serialize());
}

FeatureSpace FeatureSpace::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

}  // namespace lund::features
