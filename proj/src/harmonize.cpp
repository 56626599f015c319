#include "lund/harmonize.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lund/error.hpp"
#include "lund/preprocess.hpp"
#include "lund/util/delimited.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"
#include "lund/util/rng.hpp"
#include "lund/util/utf8.hpp"

namespace lund::harmonize {

namespace pt = boost::property_tree;

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::DelimitedTable: return "delimited";
    case SourceFormat::TreeStructured: return "tree";
    case SourceFormat::Markup: return "markup";
  }
  return "delimited";
}

SourceFormat parse_format(std::string_view name) {
  const auto s = utf8::ascii_lower(name);
  if (s == "delimited" || s == "csv" || s == "tsv") return SourceFormat::DelimitedTable;
  if (s == "tree" || s == "json" || s == "jsonl") return SourceFormat::TreeStructured;
  if (s == "markup" || s == "xml") return SourceFormat::Markup;
  throw Error(ErrorKind::InvalidManifest, "unknown source format '" + std::string(name) + "'");
}

// --- labels ----------------------------------------------------------------

std::string LabelMap::normalize_key(std::string_view raw) {
  std::string lowered = utf8::ascii_lower(utf8::trim(raw));
  std::string out;
  out.reserve(lowered.size());
  bool in_space = false;
  for (char c : lowered) {
    const bool space = c == ' ' || c == '\t' || c == '_' || c == '\n' || c == '\r';
    if (space) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

void LabelMap::set(std::string_view raw, std::optional<Label> target) {
  entries_[normalize_key(raw)] = target;
}

std::optional<LabelDecision> LabelMap::find(std::string_view raw) const {
  auto it = entries_.find(normalize_key(raw));
  if (it == entries_.end()) return std::nullopt;
  return LabelDecision{it->second};
}

void LabelMap::merge(const LabelMap& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::vector<std::string> LabelMap::review_flags() const {
  std::vector<std::string> flags;
  auto it = entries_.find("true");
  if (it != entries_.end() && it->second == Label::Fake) {
    flags.push_back("raw label \"true\" is mapped to fake; only partial-truth categories "
                    "are folded into fake by default");
  }
  return flags;
}

const LabelMap& LabelMap::default_map() {
  static const LabelMap map = [] {
    LabelMap m;
    for (const char* raw : {"fake", "false", "partly true", "half true", "mostly false",
                            "pants-on-fire", "pants on fire"}) {
      m.set(raw, Label::Fake);
    }
    for (const char* raw : {"real", "legit", "true"}) m.set(raw, Label::Legit);
    return m;
  }();
  return map;
}

LabelDecision normalize_label(std::string_view raw, const LabelMap& label_map) {
  if (auto d = label_map.find(raw)) return *d;
  throw Error(ErrorKind::UnmappedLabel, "raw label \"" + std::string(raw) + "\" has no mapping");
}

// --- manifests -------------------------------------------------------------

void SourceManifest::validate() const {
  if (source_id.empty()) throw Error(ErrorKind::InvalidManifest, "source_id is empty");
  for (const char* f : {"text", "label"}) {
    auto it = field_map.find(f);
    if (it == field_map.end() || it->second.empty()) {
      throw Error(ErrorKind::InvalidManifest,
                  "source '" + source_id + "': field_map must cover '" + f + "'");
    }
  }
}

SourceManifest SourceManifest::from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  SourceManifest m;
  try {
    m.source_id = j.at("source_id").get<std::string>();
    m.url = j.value("url", std::string{});
    m.format = parse_format(j.at("format").get<std::string>());
    for (const auto& [k, v] : j.at("field_map").items()) m.field_map[k] = v.get<std::string>();
    if (j.value("use_default_label_map", false)) m.label_map = LabelMap::default_map();
    if (j.contains("label_map")) {
      LabelMap own;
      for (const auto& [raw, target] : j.at("label_map").items()) {
        const auto t = utf8::ascii_lower(target.get<std::string>());
        if (t == "drop") {
          own.set(raw, std::nullopt);
        } else if (auto l = parse_label(t)) {
          own.set(raw, *l);
        } else {
          throw Error(ErrorKind::InvalidManifest,
                      "label_map target must be fake, legit or drop: '" + t + "'");
        }
      }
      m.label_map.merge(own);
    }
    if (j.contains("expected_counts") && !j.at("expected_counts").is_null()) {
      const auto& e = j.at("expected_counts");
      m.expected_counts = ExpectedCounts{e.at("total").get<std::uint64_t>(),
                                         e.at("fake").get<std::uint64_t>(),
                                         e.at("legit").get<std::uint64_t>()};
    }
    m.record_path = j.value("record_path", std::string{});
    const auto delim = j.value("delimiter", std::string(","));
    if (delim == "\\t" || delim == "tab") {
      m.delimiter = '\t';
    } else if (delim.size() == 1) {
      m.delimiter = delim[0];
    } else {
      throw Error(ErrorKind::InvalidManifest, "delimiter must be one character");
    }
    if (j.contains("payload")) {
      std::filesystem::path p = j.at("payload").get<std::string>();
      m.payload = p.is_absolute() ? p : base_dir / p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidManifest, e.what());
  }
  m.validate();
  for (const auto& flag : m.label_map.review_flags()) {
    spdlog::warn("manifest '{}': {}", m.source_id, flag);
  }
  return m;
}

SourceManifest SourceManifest::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidManifest, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::ordered_json SourceManifest::to_json() const {
  nlohmann::ordered_json j;
  j["source_id"] = source_id;
  j["url"] = url;
  j["format"] = harmonize::to_string(format);
  j["field_map"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : field_map) j["field_map"][k] = v;
  j["label_map"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : label_map.entries()) {
    j["label_map"][k] = v ? std::string(lund::to_string(*v)) : std::string("drop");
  }
  if (expected_counts) {
    j["expected_counts"] = {{"total", expected_counts->total},
                            {"fake", expected_counts->fake},
                            {"legit", expected_counts->legit}};
  }
  if (!record_path.empty()) j["record_path"] = record_path;
  j["delimiter"] = std::string(1, delimiter);
  return j;
}

// --- ingestion -------------------------------------------------------------

namespace {

struct RowFields {
  std::string location;
  std::optional<std::string> id;
  std::optional<std::string> text;
  std::optional<std::string> label;
  std::optional<std::string> domain;
};

class Ingestor {
 public:
  explicit Ingestor(const SourceManifest& m) : manifest_(m) {}

  void add(const RowFields& row) {
    ++result_.rows;
    if (!row.label) {
      throw Error(ErrorKind::FieldMissing, manifest_.source_id + " " + row.location +
                                               ": label field '" +
                                               manifest_.field_map.at("label") + "' absent");
    }
    if (!row.text) {
      throw Error(ErrorKind::FieldMissing, manifest_.source_id + " " + row.location +
                                               ": text field '" +
                                               manifest_.field_map.at("text") + "' absent");
    }
    LabelDecision decision;
    try {
      decision = normalize_label(*row.label, manifest_.label_map);
    } catch (const Error& e) {
      throw Error(ErrorKind::UnmappedLabel, manifest_.source_id + " " + row.location +
                                                ": raw label \"" + *row.label +
                                                "\" has no mapping");
    }
    if (decision.is_drop()) {
      ++result_.dropped;
      return;
    }
    if (utf8::trim(*row.text).empty()) {
      ++result_.skipped_empty;
      return;
    }
    RawRecord raw;
    raw.id = (row.id && !utf8::trim(*row.id).empty())
                 ? std::string(utf8::trim(*row.id))
                 : manifest_.source_id + "-" + std::to_string(result_.rows);
    raw.text = *row.text;
    raw.label = decision.label;
    raw.domain = row.domain;
    raw.source_id = manifest_.source_id;
    result_.records.push_back(validator_.validate(std::move(raw)));
  }

  IngestResult take() { return std::move(result_); }

 private:
  const SourceManifest& manifest_;
  RecordValidator validator_;
  IngestResult result_;
};

std::optional<std::string> mapped(const SourceManifest& m, const char* field) {
  auto it = m.field_map.find(field);
  if (it == m.field_map.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

void ingest_delimited(const SourceManifest& m, std::string_view payload, Ingestor& sink) {
  auto rows = parse_delimited(payload, m.delimiter);
  if (rows.empty()) return;
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t c = 0; c < rows[0].fields.size(); ++c) {
    columns.emplace(std::string(utf8::trim(utf8::strip_bom(rows[0].fields[c]))), c);
  }
  auto column_of = [&](const char* field) -> std::optional<std::size_t> {
    auto name = mapped(m, field);
    if (!name) return std::nullopt;
    auto it = columns.find(*name);
    if (it == columns.end()) {
      throw Error(ErrorKind::FieldMissing,
                  m.source_id + ": header lacks column '" + *name + "' for " + field);
    }
    return it->second;
  };
  const auto text_col = column_of("text");
  const auto label_col = column_of("label");
  const auto domain_col = column_of("domain");
  const auto id_col = column_of("id");
  const std::size_t width = rows[0].fields.size();

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != width) {
      throw Error(ErrorKind::ParseError, m.source_id + " line " + std::to_string(row.line) +
                                             ": expected " + std::to_string(width) +
                                             " fields, found " + std::to_string(row.fields.size()));
    }
    RowFields f;
    f.location = "line " + std::to_string(row.line);
    f.text = row.fields[*text_col];
    f.label = row.fields[*label_col];
    if (domain_col) f.domain = row.fields[*domain_col];
    if (id_col) f.id = row.fields[*id_col];
    sink.add(f);
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

const nlohmann::json* json_at(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* cur = &root;
  for (const auto& part : split_path(path)) {
    if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        return nullptr;
      }
      if (idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else {
      return nullptr;
    }
  }
  return cur;
}

std::optional<std::string> json_field(const nlohmann::json& record, const std::optional<std::string>& path) {
  if (!path) return std::nullopt;
  const auto* v = json_at(record, *path);
  if (!v || v->is_null()) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number() || v->is_boolean()) return v->dump();
  return std::nullopt;
}

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void ingest_tree(const SourceManifest& m, std::string_view payload, Ingestor& sink) {
  const auto text_path = mapped(m, "text");
  const auto label_path = mapped(m, "label");
  const auto domain_path = mapped(m, "domain");
  const auto id_path = mapped(m, "id");

  auto add_record = [&](const nlohmann::json& rec, std::string location) {
    RowFields f;
    f.location = std::move(location);
    f.text = json_field(rec, text_path);
    f.label = json_field(rec, label_path);
    f.domain = json_field(rec, domain_path);
    f.id = json_field(rec, id_path);
    sink.add(f);
  };

  nlohmann::json doc;
  bool whole = true;
  try {
    doc = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::parse_error& e) {
    // Either malformed or line-oriented JSON; decide below.
    whole = false;
    const auto lines = io::split_lines(payload);
    std::size_t non_blank = 0;
    for (auto l : lines) non_blank += !utf8::trim(l).empty();
    if (non_blank <= 1 || !m.record_path.empty()) {
      throw Error(ErrorKind::ParseError, m.source_id + " line " +
                                             std::to_string(line_of_byte(payload, e.byte)) +
                                             ": " + e.what());
    }
  }

  if (whole) {
    const nlohmann::json* records = json_at(doc, m.record_path);
    if (!records) {
      throw Error(ErrorKind::ParseError, m.source_id + ": record_path '" + m.record_path +
                                             "' not found");
    }
    if (!records->is_array()) {
      throw Error(ErrorKind::ParseError, m.source_id + ": record_path '" + m.record_path +
                                             "' is not an array");
    }
    for (std::size_t i = 0; i < records->size(); ++i) {
      const auto& rec = (*records)[i];
      const std::string location = "/" + m.record_path + (m.record_path.empty() ? "" : "/") +
                                   std::to_string(i);
      if (!rec.is_object()) {
        throw Error(ErrorKind::ParseError, m.source_id + " " + location + ": record is not an object");
      }
      add_record(rec, location);
    }
    return;
  }

  const auto lines = io::split_lines(payload);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (utf8::trim(lines[i]).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ParseError,
                  m.source_id + " line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!rec.is_object()) {
      throw Error(ErrorKind::ParseError,
                  m.source_id + " line " + std::to_string(i + 1) + ": record is not an object");
    }
    add_record(rec, "line " + std::to_string(i + 1));
  }
}

pt::ptree::path_type xml_path(std::string_view path) {
  std::string p;
  for (const auto& part : split_path(path)) {
    if (!p.empty()) p += '/';
    if (part.front() == '@') {
      p += "<xmlattr>/";
      p += part.substr(1);
    } else {
      p += part;
    }
  }
  return pt::ptree::path_type(p, '/');
}

std::optional<std::string> xml_field(const pt::ptree& node, const std::optional<std::string>& path) {
  if (!path) return std::nullopt;
  auto child = node.get_child_optional(xml_path(*path));
  if (!child) return std::nullopt;
  return child->data();
}

void ingest_markup(const SourceManifest& m, std::string_view payload, Ingestor& sink) {
  pt::ptree tree;
  std::istringstream in{std::string(payload)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorKind::ParseError, m.source_id + " line " + std::to_string(e.line()) +
                                           ": " + e.message());
  }
  auto parts = split_path(m.record_path);
  if (parts.empty()) {
    throw Error(ErrorKind::InvalidManifest, m.source_id + ": markup sources need record_path");
  }
  const std::string element = parts.back();
  parts.pop_back();
  std::string parent_path;
  for (const auto& p : parts) parent_path += (parent_path.empty() ? "" : "/") + p;

  const pt::ptree* parent = &tree;
  if (!parent_path.empty()) {
    auto c = tree.get_child_optional(pt::ptree::path_type(parent_path, '/'));
    if (!c) {
      throw Error(ErrorKind::ParseError, m.source_id + ": element path '" + parent_path +
                                             "' not found");
    }
    parent = &*c;
  }
  const auto text_path = mapped(m, "text");
  const auto label_path = mapped(m, "label");
  const auto domain_path = mapped(m, "domain");
  const auto id_path = mapped(m, "id");
  std::size_t index = 0;
  for (const auto& [name, node] : *parent) {
    if (name != element) continue;
    ++index;
    RowFields f;
    f.location = "/" + m.record_path + "[" + std::to_string(index) + "]";
    f.text = xml_field(node, text_path);
    f.label = xml_field(node, label_path);
    f.domain = xml_field(node, domain_path);
    f.id = xml_field(node, id_path);
    sink.add(f);
  }
}

}  // namespace

IngestResult ingest_source(const SourceManifest& manifest, std::string_view payload) {
  manifest.validate();
  payload = utf8::strip_bom(payload);
  Ingestor sink(manifest);
  switch (manifest.format) {
    case SourceFormat::DelimitedTable: ingest_delimited(manifest, payload, sink); break;
    case SourceFormat::TreeStructured: ingest_tree(manifest, payload, sink); break;
    case SourceFormat::Markup: ingest_markup(manifest, payload, sink); break;
  }
  IngestResult result = sink.take();
  if (result.dropped > 0) {
    spdlog::info("source '{}': {} rows dropped by label map", manifest.source_id, result.dropped);
  }
  if (result.skipped_empty > 0) {
    spdlog::warn("source '{}': {} rows skipped for blank text", manifest.source_id,
                 result.skipped_empty);
  }
  return result;
}

std::optional<CountCheck> verify_counts(const SourceManifest& manifest,
                                        const IngestResult& result) {
  if (!manifest.expected_counts) return std::nullopt;
  CountCheck check;
  check.expected = *manifest.expected_counts;
  check.actual.total = result.records.size();
  for (const auto& r : result.records) {
    (r.label == Label::Fake ? check.actual.fake : check.actual.legit) += 1;
  }
  check.ok = check.actual == check.expected;
  return check;
}

// --- dedup -----------------------------------------------------------------

double DuplicateCluster::similarity() const {
  double s = 1.0;
  for (const auto& m : removed) s = std::min(s, m.similarity);
  return s;
}

nlohmann::ordered_json DedupReport::to_json() const {
  nlohmann::ordered_json j;
  j["exact_removed"] = exact_removed;
  j["near_removed"] = near_removed;
  auto clusters_json = nlohmann::ordered_json::array();
  for (const auto& c : clusters) {
    nlohmann::ordered_json cj;
    cj["kept"] = c.kept_id;
    cj["similarity"] = c.similarity();
    auto removed = nlohmann::ordered_json::array();
    for (const auto& m : c.removed) {
      removed.push_back({{"id", m.id}, {"similarity", m.similarity}, {"exact", m.exact}});
    }
    cj["removed"] = std::move(removed);
    clusters_json.push_back(std::move(cj));
  }
  j["clusters"] = std::move(clusters_json);
  auto conflicts = nlohmann::ordered_json::array();
  for (const auto& c : label_conflicts) {
    conflicts.push_back({{"kept", c.kept_id},
                         {"removed", c.removed_id},
                         {"kept_label", lund::to_string(c.kept_label)},
                         {"removed_label", lund::to_string(c.removed_label)}});
  }
  j["label_conflicts"] = std::move(conflicts);
  return j;
}

namespace {

std::vector<std::string_view> words_of(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::uint64_t> shingles_of_normalized(std::string_view normalized, std::size_t k) {
  const auto words = words_of(normalized);
  std::vector<std::uint64_t> out;
  if (words.empty()) return out;
  const std::size_t width = std::min(k, words.size());
  for (std::size_t i = 0; i + width <= words.size(); ++i) {
    std::uint64_t h = kFnvOffset;
    for (std::size_t w = 0; w < width; ++w) {
      h = fnv1a(words[i + w], h);
      h = fnv1a("\x1f", h);
    }
    out.push_back(h);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

class MinHashIndex {
 public:
  MinHashIndex(std::size_t permutations, std::size_t bands, std::uint64_t seed)
      : bands_(std::max<std::size_t>(1, std::min(bands, permutations))),
        rows_(std::max<std::size_t>(1, permutations / bands_)) {
    for (std::size_t p = 0; p < bands_ * rows_; ++p) salts_.push_back(derive_seed(seed, p + 1));
  }

  std::vector<std::uint64_t> band_keys(std::span<const std::uint64_t> shingles) const {
    std::vector<std::uint64_t> sig(salts_.size(), UINT64_MAX);
    for (auto s : shingles) {
      for (std::size_t p = 0; p < salts_.size(); ++p) {
        sig[p] = std::min(sig[p], splitmix64(s ^ salts_[p]));
      }
    }
    std::vector<std::uint64_t> keys(bands_);
    for (std::size_t b = 0; b < bands_; ++b) {
      std::uint64_t h = splitmix64(b);
      for (std::size_t r = 0; r < rows_; ++r) h = splitmix64(h ^ sig[b * rows_ + r]);
      keys[b] = h;
    }
    return keys;
  }

  std::vector<std::size_t> candidates(const std::vector<std::uint64_t>& keys) const {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < keys.size(); ++b) {
      auto it = buckets_[b % buckets_.size()].find(keys[b]);
      if (it == buckets_[b % buckets_.size()].end()) continue;
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void insert(const std::vector<std::uint64_t>& keys, std::size_t slot) {
    for (std::size_t b = 0; b < keys.size(); ++b) buckets_[b][keys[b]].push_back(slot);
  }

  void reset_buckets() { buckets_.assign(bands_, {}); }

 private:
  std::size_t bands_;
  std::size_t rows_;
  std::vector<std::uint64_t> salts_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets_;
};

}  // namespace

std::vector<std::uint64_t> shingle_set(std::string_view text, std::size_t k) {
  return shingles_of_normalized(preprocess::clean_text(text), k);
}

double jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

DedupResult deduplicate(std::vector<NewsRecord> records, const DedupConfig& config) {
  DedupResult out;
  std::vector<std::string> normalized(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    normalized[i] = preprocess::clean_text(records[i].text);
  }

  // cluster index per keeper (position in `records`)
  std::unordered_map<std::size_t, std::size_t> cluster_of;
  auto cluster_for = [&](std::size_t keeper) -> DuplicateCluster& {
    auto [it, inserted] = cluster_of.emplace(keeper, out.report.clusters.size());
    if (inserted) out.report.clusters.push_back(DuplicateCluster{records[keeper].id, {}});
    return out.report.clusters[it->second];
  };
  auto note_conflict = [&](std::size_t keeper, std::size_t removed) {
    if (records[keeper].label == records[removed].label) return;
    out.report.label_conflicts.push_back(LabelConflict{records[keeper].id, records[removed].id,
                                                       records[keeper].label,
                                                       records[removed].label});
    spdlog::warn("duplicate '{}' carries label {} but keeper '{}' is {}; keeping keeper's label",
                 records[removed].id, lund::to_string(records[removed].label), records[keeper].id,
                 lund::to_string(records[keeper].label));
  };

  // exact pass
  std::vector<std::size_t> survivors;
  std::unordered_map<std::string_view, std::size_t> first_by_text;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = first_by_text.emplace(normalized[i], i);
    if (inserted) {
      survivors.push_back(i);
      continue;
    }
    cluster_for(it->second).removed.push_back(DuplicateMember{records[i].id, 1.0, true});
    note_conflict(it->second, i);
    ++out.report.exact_removed;
  }

  // near pass over survivors
  const bool use_minhash =
      config.method == DedupConfig::Method::MinHash ||
      (config.method == DedupConfig::Method::Auto && survivors.size() > config.exhaustive_limit);
  MinHashIndex index(config.minhash_permutations, config.minhash_bands, config.seed);
  index.reset_buckets();

  std::vector<std::size_t> kept;  // positions in `records`
  std::vector<std::vector<std::uint64_t>> kept_shingles;
  for (std::size_t i : survivors) {
    auto shingles = shingles_of_normalized(normalized[i], config.shingle_size);
    std::vector<std::uint64_t> keys;
    std::vector<std::size_t> candidates;
    if (use_minhash) {
      keys = index.band_keys(shingles);
      candidates = index.candidates(keys);
    }
    double best = -1.0;
    std::size_t best_slot = 0;
    auto consider = [&](std::size_t slot) {
      const auto& other = kept_shingles[slot];
      const double lo = static_cast<double>(std::min(other.size(), shingles.size()));
      const double hi = static_cast<double>(std::max(other.size(), shingles.size()));
      if (hi > 0 && lo / hi < config.threshold) return;  // size bound on Jaccard
      const double sim = jaccard(shingles, other);
      if (sim >= config.threshold && sim > best) {
        best = sim;
        best_slot = slot;
      }
    };
    if (use_minhash) {
      for (auto slot : candidates) consider(slot);
    } else {
      for (std::size_t slot = 0; slot < kept.size(); ++slot) consider(slot);
    }
    if (best >= config.threshold) {
      const std::size_t keeper = kept[best_slot];
      cluster_for(keeper).removed.push_back(DuplicateMember{records[i].id, best, false});
      note_conflict(keeper, i);
      ++out.report.near_removed;
      continue;
    }
    if (use_minhash) index.insert(keys, kept.size());
    kept.push_back(i);
    kept_shingles.push_back(std::move(shingles));
  }

  // Clusters in keeper order for a stable report.
  std::vector<std::pair<std::size_t, DuplicateCluster>> ordered;
  for (const auto& [keeper, idx] : cluster_of) {
    ordered.emplace_back(keeper, std::move(out.report.clusters[idx]));
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  out.report.clusters.clear();
  for (auto& [k, c] : ordered) out.report.clusters.push_back(std::move(c));

  out.records.reserve(kept.size());
  for (std::size_t i : kept) out.records.push_back(std::move(records[i]));
  return out;
}

// --- balancing -----------------------------------------------------------------

std::array<std::size_t, 2> allocate_proportional(std::array<std::size_t, 2> counts,
                                                 std::size_t cap) {
  const std::size_t n = counts[0] + counts[1];
  if (n <= cap) return counts;
  std::array<std::size_t, 2> quota{};
  std::array<std::size_t, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < 2; ++l) {
    const auto num = static_cast<unsigned __int128>(cap) * counts[l];
    quota[l] = static_cast<std::size_t>(num / n);
    remainder[l] = static_cast<std::size_t>(num % n);
    assigned += quota[l];
  }
  // Remaining seats by largest remainder; ties go to Fake.
  const std::size_t fake = index_of(Label::Fake);
  const std::size_t legit = index_of(Label::Legit);
  while (assigned < cap) {
    const std::size_t pick = remainder[fake] >= remainder[legit] ? fake : legit;
    ++quota[pick];
    remainder[pick] = 0;
    ++assigned;
  }
  return quota;
}

std::vector<NewsRecord> balance_domains(std::vector<NewsRecord> records,
                                        const BalancePolicy& policy, std::uint64_t seed) {
  std::map<std::string, std::array<std::vector<std::size_t>, 2>> by_domain;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].domain) continue;
    by_domain[*records[i].domain][index_of(records[i].label)].push_back(i);
  }
  std::vector<bool> keep(records.size(), true);
  for (auto& [domain, groups] : by_domain) {
    std::optional<std::size_t> cap = policy.max_per_domain;
    if (auto it = policy.target_counts.find(domain); it != policy.target_counts.end()) {
      cap = it->second;
    }
    if (!cap) continue;
    const std::array<std::size_t, 2> counts{groups[0].size(), groups[1].size()};
    if (counts[0] + counts[1] <= *cap) continue;
    const auto quota = allocate_proportional(counts, *cap);
    for (std::size_t l = 0; l < 2; ++l) {
      auto& idx = groups[l];
      Rng rng(derive_seed(seed, fnv1a(domain + "\x1f" + std::to_string(l))));
      rng.shuffle(std::span<std::size_t>(idx));
      for (std::size_t k = quota[l]; k < idx.size(); ++k) keep[idx[k]] = false;
    }
  }
  std::vector<NewsRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(std::move(records[i]));
  }
  return out;
}

// --- split -----------------------------------------------------------------------

std::size_t SplitSpec::count(Partition p) const {
  return static_cast<std::size_t>(std::count_if(
      assignment.begin(), assignment.end(), [p](const auto& a) { return a.second == p; }));
}

std::optional<Partition> SplitSpec::partition_of(const std::string& id) const {
  for (const auto& [k, p] : assignment) {
    if (k == id) return p;
  }
  return std::nullopt;
}

nlohmann::ordered_json SplitSpec::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["train_ratio"] = train_ratio;
  j["train"] = count(Partition::Train);
  j["test"] = count(Partition::Test);
  auto a = nlohmann::ordered_json::object();
  for (const auto& [id, p] : assignment) a[id] = p == Partition::Train ? "train" : "test";
  j["assignment"] = std::move(a);
  return j;
}

SplitSpec SplitSpec::from_json(const nlohmann::ordered_json& j) {
  SplitSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_ratio = j.at("train_ratio").get<double>();
  for (const auto& [id, p] : j.at("assignment").items()) {
    s.assignment.emplace_back(id, p.get<std::string>() == "train" ? Partition::Train
                                                                  : Partition::Test);
  }
  return s;
}

std::size_t train_count(std::size_t n, double ratio) {
  const long double exact = static_cast<long double>(n) * static_cast<long double>(ratio);
  // Subtract a small slack so representation error in the ratio (0.8 is not
  // exact in binary) cannot push an integral product up by one.
  const auto c = static_cast<std::size_t>(std::ceil(exact - 1e-9L));
  return std::min(c, n);
}

SplitSpec stratified_split(std::span<const NewsRecord> records, double train_ratio,
                           std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio <= 1.0)) {
    throw std::invalid_argument("train_ratio must be in (0, 1]");
  }
  SplitSpec spec;
  spec.seed = seed;
  spec.train_ratio = train_ratio;
  std::array<std::vector<std::size_t>, 2> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[index_of(records[i].label)].push_back(i);
  }
  std::vector<Partition> part(records.size(), Partition::Test);
  for (std::size_t l = 0; l < 2; ++l) {
    auto& idx = groups[l];
    Rng rng(derive_seed(seed, 0x5b1170000ULL + l));
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t n_train = train_count(idx.size(), train_ratio);
    for (std::size_t k = 0; k < n_train; ++k) part[idx[k]] = Partition::Train;
  }
  spec.assignment.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    spec.assignment.emplace_back(records[i].id, part[i]);
  }
  return spec;
}

// --- fusion ----------------------------------------------------------------

FuseResult fuse(std::vector<std::vector<NewsRecord>> sources, const DedupConfig& config) {
  FuseResult result;
  RecordValidator validator;
  std::vector<NewsRecord> all;
  for (auto& source : sources) {
    std::unordered_set<std::string> local;
    for (auto& r : source) {
      if (!local.insert(r.id).second) {
        throw Error(ErrorKind::DuplicateId, "id '" + r.id + "' repeated within source '" +
                                                r.source_id + "'");
      }
      RawRecord raw{r.id, std::move(r.text), r.label, std::move(r.domain), r.source_id};
      if (validator.seen(raw.id)) {
        std::string renamed = raw.source_id + ":" + raw.id;
        result.renamed_ids.emplace_back(raw.id, renamed);
        raw.id = std::move(renamed);
      }
      all.push_back(validator.validate(std::move(raw)));
    }
  }
  auto dedup = deduplicate(std::move(all), config);
  result.corpus = std::move(dedup.records);
  result.report = std::move(dedup.report);
  return result;
}

}  // namespace lund::harmonize
