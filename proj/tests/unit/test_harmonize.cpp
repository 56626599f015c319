#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "lund/error.hpp"
#include "lund/harmonize.hpp"
#include "lund/util/io.hpp"

using namespace lund;
using namespace lund::harmonize;
using testing::make_record;

namespace {

SourceManifest csv_manifest(std::string id = "src") {
  SourceManifest m;
  m.source_id = std::move(id);
  m.format = SourceFormat::DelimitedTable;
  m.field_map = {{"text", "news"}, {"label", "label"}, {"id", "id"}};
  m.label_map.set("fake", Label::Fake);
  m.label_map.set("real", Label::Legit);
  return m;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no lund::Error thrown");
  return ErrorKind::Io;
}

// Brute-force shingle oracle: k-word windows as strings in a std::set.
double oracle_jaccard(const std::string& a, const std::string& b, std::size_t k) {
  auto windows = [k](const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    for (std::string w; in >> w;) words.push_back(w);
    std::set<std::string> out;
    for (std::size_t i = 0; i + k <= words.size(); ++i) {
      std::string s;
      for (std::size_t j = 0; j < k; ++j) s += words[i + j] + "\x1f";
      out.insert(s);
    }
    return out;
  };
  const auto sa = windows(a);
  const auto sb = windows(b);
  std::size_t inter = 0;
  for (const auto& s : sa) inter += sb.count(s);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

}  // namespace

TEST_CASE("delimited ingestion maps labels") {
  const auto m = csv_manifest();
  const auto r = ingest_source(m, "id,news,label\n1,پہلی خبر,fake\n2,دوسری خبر,real\n");
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].label == Label::Fake);
  CHECK(r.records[1].label == Label::Legit);
  CHECK(r.records[0].source_id == "src");
  CHECK(r.records[1].id == "2");
}

TEST_CASE("unmapped labels name the raw label") {
  const auto m = csv_manifest();
  try {
    ingest_source(m, "id,news,label\n1,خبر,satire\n");
    FAIL("expected UnmappedLabel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnmappedLabel);
    CHECK(std::string(e.what()).find("satire") != std::string::npos);
  }
}

TEST_CASE("missing header column and ragged rows") {
  auto m = csv_manifest();
  m.field_map["text"] = "body";
  CHECK(kind_of([&] { ingest_source(m, "id,news,label\n1,خبر,fake\n"); }) ==
        ErrorKind::FieldMissing);
  const auto ok = csv_manifest();
  CHECK(kind_of([&] { ingest_source(ok, "id,news,label\n1,خبر\n"); }) == ErrorKind::ParseError);
}

TEST_CASE("expected counts verification") {
  auto m = csv_manifest();
  m.expected_counts = ExpectedCounts{4097, 2455, 1642};
  std::string payload = "id,news,label\n";
  for (int i = 0; i < 4097; ++i) {
    payload += std::to_string(i) + ",خبر " + std::to_string(i) + "," +
               (i < 2455 ? "fake" : "real") + "\n";
  }
  auto result = ingest_source(m, payload);
  auto check = verify_counts(m, result);
  REQUIRE(check.has_value());
  CHECK(check->ok);
  CHECK(check->actual == ExpectedCounts{4097, 2455, 1642});
  result.records.pop_back();
  CHECK_FALSE(verify_counts(m, result)->ok);
  CHECK_FALSE(verify_counts(csv_manifest(), result).has_value());
}

TEST_CASE("label normalization") {
  const auto& def = LabelMap::default_map();
  CHECK(normalize_label("half true", def).label == Label::Fake);
  CHECK(normalize_label("  Half_True ", def).label == Label::Fake);
  CHECK(normalize_label("legit", def).label == Label::Legit);
  LabelMap m;
  m.set("opinion", std::nullopt);
  CHECK(normalize_label("opinion", m).is_drop());
  CHECK(kind_of([&] { normalize_label("satire", def); }) == ErrorKind::UnmappedLabel);
}

TEST_CASE("a plain true routed to fake is flagged") {
  LabelMap m;
  m.set("true", Label::Fake);
  CHECK(m.review_flags().size() == 1);
  CHECK(LabelMap::default_map().review_flags().empty());
}

TEST_CASE("dropped rows are counted") {
  auto m = csv_manifest();
  m.label_map.set("opinion", std::nullopt);
  const auto r = ingest_source(m, "id,news,label\n1,خبر,opinion\n2,خبر دو,fake\n3,,real\n");
  CHECK(r.records.size() == 1);
  CHECK(r.dropped == 1);
  CHECK(r.skipped_empty == 1);
}

TEST_CASE("tree-structured ingestion with a record path and JSON lines") {
  SourceManifest m;
  m.source_id = "t";
  m.format = SourceFormat::TreeStructured;
  m.field_map = {{"text", "body/text"}, {"label", "verdict"}, {"domain", "cat"}};
  m.label_map = LabelMap::default_map();
  m.record_path = "data/items";
  const auto r = ingest_source(
      m, R"({"data":{"items":[{"body":{"text":"خبر"},"verdict":"False","cat":"Sports"}]}})");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].label == Label::Fake);
  CHECK(r.records[0].domain == "sports");
  CHECK(r.records[0].id == "t-1");

  m.record_path.clear();
  const auto lines = ingest_source(
      m, "{\"body\":{\"text\":\"الف\"},\"verdict\":\"true\"}\n{\"body\":{\"text\":\"ب\"},\"verdict\":\"fake\"}\n");
  CHECK(lines.records.size() == 2);
  CHECK(kind_of([&] { ingest_source(m, "{\"body\":1}\n{\"body\":2}\n"); }) == ErrorKind::FieldMissing);
  CHECK(kind_of([&] { ingest_source(m, "{\"body\":{\"text\":\"الف\"},\"verdict\":\"fake\"}\n{oops}\n"); }) ==
        ErrorKind::ParseError);
}

TEST_CASE("markup ingestion with attributes") {
  SourceManifest m;
  m.source_id = "x";
  m.format = SourceFormat::Markup;
  m.field_map = {{"text", "content"}, {"label", "@label"}, {"id", "@id"}};
  m.label_map = LabelMap::default_map();
  m.record_path = "corpus/article";
  const auto r = ingest_source(m,
                               "<corpus><article id=\"a\" label=\"real\"><content>خبر</content>"
                               "</article><article id=\"b\" label=\"fake\"><content>دوسری</content>"
                               "</article></corpus>");
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].id == "a");
  CHECK(r.records[1].label == Label::Fake);
  CHECK(kind_of([&] { ingest_source(m, "<corpus><article></corpus>"); }) == ErrorKind::ParseError);
}

TEST_CASE("manifest JSON round trip and validation") {
  const auto dir = testing::scratch_dir("manifest");
  nlohmann::json j = {{"source_id", "s1"},
                      {"format", "tsv"},
                      {"delimiter", "\\t"},
                      {"field_map", {{"text", "t"}, {"label", "l"}}},
                      {"label_map", {{"fake", "fake"}, {"real", "legit"}, {"op", "drop"}}},
                      {"expected_counts", {{"total", 2}, {"fake", 1}, {"legit", 1}}},
                      {"payload", "data.tsv"}};
  io::write_file(dir / "m.json", j.dump());
  const auto m = SourceManifest::load(dir / "m.json");
  CHECK(m.delimiter == '\t');
  CHECK(m.payload == dir / "data.tsv");
  CHECK(m.label_map.find("op")->is_drop());
  const auto again = SourceManifest::from_json(m.to_json(), dir);
  CHECK(again.to_json() == m.to_json());
  nlohmann::json bad = j;
  bad["field_map"] = {{"text", "t"}};
  CHECK(kind_of([&] { SourceManifest::from_json(bad); }) == ErrorKind::InvalidManifest);
}

TEST_CASE("exact duplicates") {
  std::vector<NewsRecord> recs{make_record("a", "ایک خبر یہاں", Label::Fake),
                               make_record("b", "ایک خبر یہاں", Label::Fake)};
  auto r = deduplicate(recs);
  CHECK(r.report.exact_removed == 1);
  CHECK(r.records.size() == 1);
  CHECK(r.records[0].id == "a");

  std::vector<NewsRecord> ws{make_record("a", "ایک  خبر\tیہاں", Label::Fake),
                             make_record("b", "ایک خبر یہاں", Label::Legit)};
  r = deduplicate(ws);
  CHECK(r.report.exact_removed == 1);
  REQUIRE(r.report.label_conflicts.size() == 1);
  CHECK(r.report.label_conflicts[0].removed_id == "b");
}

TEST_CASE("twelve-word near-duplicate pair against the brute-force oracle") {
  const auto words = testing::urdu_words(13, 99);
  std::string a, b;
  for (std::size_t i = 0; i < 12; ++i) {
    a += (i ? " " : "") + words[i];
    b += (i ? " " : "") + (i == 6 ? words[12] : words[i]);
  }
  const double expected = oracle_jaccard(a, b, 5);
  CHECK(jaccard(shingle_set(a, 5), shingle_set(b, 5)) == doctest::Approx(expected).epsilon(1e-15));
  std::vector<NewsRecord> recs{make_record("a", a, Label::Fake), make_record("b", b, Label::Fake)};
  const auto r = deduplicate(recs);
  CHECK((r.report.near_removed == 1) == (expected >= 0.9));
  CHECK(expected < 0.9);
}

TEST_CASE("near duplicates of long texts are removed") {
  const auto f = testing::dedup_fixture(30, 0, 5, 120, 4);
  for (DedupConfig::Method method : {DedupConfig::Method::Exhaustive, DedupConfig::Method::MinHash}) {
    DedupConfig c;
    c.method = method;
    const auto r = deduplicate(f.records, c);
    CHECK(r.report.near_removed == 5);
    CHECK(r.records.size() == 30);
  }
}

TEST_CASE("short texts form a single shingle") {
  CHECK(shingle_set("الف ب", 5).size() == 1);
  CHECK(shingle_set("", 5).empty());
}

TEST_CASE("deduplicate is idempotent") {
  const auto f = testing::dedup_fixture(40, 5, 5, 110, 8);
  const auto once = deduplicate(f.records);
  const auto twice = deduplicate(once.records);
  CHECK(twice.records == once.records);
  CHECK(twice.report.exact_removed == 0);
  CHECK(twice.report.near_removed == 0);
}

TEST_CASE("proportional allocation") {
  CHECK(allocate_proportional({4, 6}, 5) == std::array<std::size_t, 2>{2, 3});
  CHECK(allocate_proportional({5, 5}, 5) == std::array<std::size_t, 2>{2, 3});
  CHECK(allocate_proportional({1, 1}, 5) == std::array<std::size_t, 2>{1, 1});
}

TEST_CASE("balance_domains caps per domain") {
  std::vector<NewsRecord> recs;
  for (int i = 0; i < 10; ++i) {
    auto r = make_record("r" + std::to_string(i), "خبر " + std::to_string(i),
                         i < 6 ? Label::Fake : Label::Legit);
    r.domain = "sports";
    recs.push_back(r);
  }
  recs.push_back(make_record("free", "بغیر زمرہ", Label::Fake));
  BalancePolicy p;
  p.max_per_domain = 5;
  const auto out = balance_domains(recs, p, 1);
  std::size_t fake = 0, legit = 0;
  for (const auto& r : out) {
    if (!r.domain) continue;
    (r.label == Label::Fake ? fake : legit)++;
  }
  CHECK(fake == 3);
  CHECK(legit == 2);
  CHECK(out.back().id == "free");
  CHECK(balance_domains(recs, p, 1) == out);

  BalancePolicy loose;
  loose.max_per_domain = 100;
  CHECK(balance_domains(recs, loose, 1) == recs);
}

TEST_CASE("balance cap of 100 on a domain of 250") {
  std::vector<NewsRecord> recs;
  for (int i = 0; i < 250; ++i) {
    auto r = make_record(std::to_string(i), "خبر " + std::to_string(i),
                         i % 3 ? Label::Fake : Label::Legit);
    r.domain = "d";
    recs.push_back(r);
  }
  BalancePolicy p;
  p.max_per_domain = 100;
  CHECK(balance_domains(recs, p, 2).size() == 100);
  p.target_counts["d"] = 10;
  CHECK(balance_domains(recs, p, 2).size() == 10);
}

TEST_CASE("stratified split arithmetic") {
  std::vector<NewsRecord> recs;
  for (int i = 0; i < 10; ++i) {
    recs.push_back(make_record(std::to_string(i), "خبر " + std::to_string(i),
                               i < 6 ? Label::Fake : Label::Legit));
  }
  const auto s = stratified_split(recs, 0.8, 3);
  CHECK(s.count(Partition::Train) == 9);
  std::size_t fake_train = 0;
  for (const auto& r : recs) {
    if (r.label == Label::Fake && s.partition_of(r.id) == Partition::Train) ++fake_train;
  }
  CHECK(fake_train == 5);
  CHECK(stratified_split(recs, 1.0, 3).count(Partition::Test) == 0);
  CHECK_THROWS_AS(stratified_split(recs, 0.0, 3), std::invalid_argument);
  CHECK(train_count(13383, 0.8) == 10707);
  CHECK(train_count(14185, 0.8) == 11348);
  CHECK(train_count(10, 0.8) == 8);
}

TEST_CASE("split is seeded and round-trips through JSON") {
  testing::SeparableSpec spec;
  spec.items = 50;
  const auto recs = testing::separable_corpus(spec);
  const auto a = stratified_split(recs, 0.8, 11);
  CHECK(a.assignment == stratified_split(recs, 0.8, 11).assignment);
  CHECK(a.assignment != stratified_split(recs, 0.8, 12).assignment);
  CHECK(SplitSpec::from_json(a.to_json()).assignment == a.assignment);
}

TEST_CASE("fusion") {
  std::vector<NewsRecord> s1{make_record("1", "پہلی خبر", Label::Fake, "a"),
                             make_record("2", "دوسری خبر", Label::Legit, "a")};
  std::vector<NewsRecord> s2{make_record("1", "تیسری خبر", Label::Fake, "b"),
                             make_record("9", "پہلی خبر", Label::Fake, "b")};
  const auto single = fuse({s1});
  CHECK(single.corpus == s1);
  const auto f = fuse({s1, s2});
  CHECK(f.report.exact_removed == 1);
  CHECK(f.corpus.size() == 3);
  REQUIRE(f.renamed_ids.size() == 1);
  CHECK(f.renamed_ids[0].second == "b:1");
}
