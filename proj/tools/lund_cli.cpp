// lund: command-line entry point for the fake-news detection pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer/protocol error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lund/classifiers.hpp"
#include "lund/corpus.hpp"
#include "lund/ensemble.hpp"
#include "lund/error.hpp"
#include "lund/evaluate.hpp"
#include "lund/features.hpp"
#include "lund/harmonize.hpp"
#include "lund/preprocess.hpp"
#include "lund/scorer_bridge.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"
#include "lund/util/rng.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lund::cli {

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitProtocol = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = ".";
  std::string log_level = "info";
  std::size_t jobs = 1;
};

// Shared state of one invocation.
class Context {
 public:
  Context(const Globals& g, RunManifest& manifest) : globals_(g), manifest_(manifest) {
    if (!g.config_path.empty()) {
      manifest_.add_input(g.config_path);
      try {
        config_ = json::parse(io::read_file(g.config_path));
      } catch (const json::exception& e) {
        throw std::invalid_argument("config " + g.config_path + ": " + e.what());
      }
      if (!config_.is_object()) throw std::invalid_argument("config must be a JSON object");
      manifest_.add_config_hash("config_file", to_hex(fnv1a(config_.dump())));
    } else {
      config_ = json::object();
    }
    if (g.seed) {
      seed_ = *g.seed;
    } else if (config_.contains("seed")) {
      seed_ = config_["seed"].get<std::uint64_t>();
    } else if (const char* env = std::getenv("LUND_SEED"); env && *env) {
      try {
        seed_ = std::stoull(env);
      } catch (const std::logic_error&) {
        throw std::invalid_argument(std::string("LUND_SEED is not an integer: ") + env);
      }
    }
    manifest_.set_seed(seed_);
  }

  std::uint64_t seed() const { return seed_; }
  std::size_t jobs() const { return globals_.jobs; }
  fs::path out_dir() const { return globals_.out_dir; }
  RunManifest& manifest() { return manifest_; }

  json section(const std::string& name) const {
    return config_.contains(name) ? config_[name] : json::object();
  }

  std::string input(const std::string& path) {
    manifest_.add_input(path);
    return io::read_file(path);
  }

  fs::path output(const std::string& name, std::string_view content) {
    const fs::path path = out_dir() / name;
    io::write_file(path, content);
    manifest_.add_output(path);
    return path;
  }

  preprocess::PreprocessConfig preprocess_config() {
    auto pp = preprocess::preprocess_config_from_json(section("preprocess"));
    manifest_.add_config_hash("preprocess", to_hex(preprocess::config_hash(pp)));
    return pp;
  }

  features::FeatureConfig feature_config() {
    auto fc = features::feature_config_from_json(section("features"));
    manifest_.add_config_hash("features", to_hex(fnv1a(features::to_json(fc).dump())));
    return fc;
  }

 private:
  const Globals& globals_;
  RunManifest& manifest_;
  json config_;
  std::uint64_t seed_ = 0;
};

std::vector<NewsRecord> load_records(Context& ctx, const std::string& path) {
  return read_corpus(ctx.input(path));
}

// id + text per line; other fields are ignored.
std::vector<ensemble::Item> load_items(Context& ctx, const std::string& path) {
  std::vector<ensemble::Item> items;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(ctx.input(path))) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      items.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string(path) + ": " + e.what(),
                  "line " + std::to_string(line_no));
    }
  }
  return items;
}

std::string jsonl(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

// --- harmonize ------------------------------------------------------------------

struct HarmonizeOpts {
  std::vector<std::string> manifests;
  std::optional<double> train_ratio;
  std::optional<double> dedup_threshold;
  std::string dedup_method;
  std::optional<std::size_t> max_per_domain;
};

harmonize::DedupConfig dedup_config(const json& j, const HarmonizeOpts& o, std::uint64_t seed) {
  harmonize::DedupConfig c;
  c.threshold = j.value("threshold", c.threshold);
  c.shingle_size = j.value("shingle_size", c.shingle_size);
  c.minhash_permutations = j.value("minhash_permutations", c.minhash_permutations);
  c.minhash_bands = j.value("minhash_bands", c.minhash_bands);
  c.exhaustive_limit = j.value("exhaustive_limit", c.exhaustive_limit);
  std::string method = j.value("method", std::string("auto"));
  if (o.dedup_threshold) c.threshold = *o.dedup_threshold;
  if (!o.dedup_method.empty()) method = o.dedup_method;
  if (method == "auto") c.method = harmonize::DedupConfig::Method::Auto;
  else if (method == "exhaustive") c.method = harmonize::DedupConfig::Method::Exhaustive;
  else if (method == "minhash") c.method = harmonize::DedupConfig::Method::MinHash;
  else throw std::invalid_argument("dedup method must be auto, exhaustive or minhash");
  if (!(c.threshold > 0 && c.threshold <= 1)) throw std::invalid_argument("dedup threshold must be in (0, 1]");
  c.seed = seed;
  return c;
}

int run_harmonize(Context& ctx, const HarmonizeOpts& o) {
  const json dedup_j = ctx.section("dedup");
  const json split_j = ctx.section("split");
  const json balance_j = ctx.section("balance");
  const auto dedup = dedup_config(dedup_j, o, ctx.seed());
  const double ratio = o.train_ratio.value_or(split_j.value("train_ratio", 0.8));

  std::vector<std::vector<NewsRecord>> sources;
  auto source_reports = ordered_json::array();
  for (const auto& path : o.manifests) {
    ctx.manifest().add_input(path);
    const auto manifest = harmonize::SourceManifest::load(path);
    if (!manifest.payload) throw Error(ErrorKind::InvalidManifest, "manifest has no payload path", path);
    const auto result = harmonize::ingest_source(manifest, ctx.input(manifest.payload->string()));
    ordered_json r;
    r["source_id"] = manifest.source_id;
    r["rows"] = result.rows;
    r["records"] = result.records.size();
    r["dropped"] = result.dropped;
    r["skipped_empty"] = result.skipped_empty;
    if (const auto check = harmonize::verify_counts(manifest, result)) {
      r["counts_match"] = check->ok;
      r["expected"] = {{"total", check->expected.total}, {"fake", check->expected.fake}, {"legit", check->expected.legit}};
      r["actual"] = {{"total", check->actual.total}, {"fake", check->actual.fake}, {"legit", check->actual.legit}};
      if (!check->ok)
        spdlog::warn("source {}: counts differ from the manifest (expected {}, got {})",
                     manifest.source_id, check->expected.total, check->actual.total);
    }
    source_reports.push_back(std::move(r));
    spdlog::info("source {}: {} records from {} rows", manifest.source_id, result.records.size(), result.rows);
    sources.push_back(result.records);
  }

  auto fused = harmonize::fuse(std::move(sources), dedup);
  std::vector<NewsRecord> corpus = std::move(fused.corpus);
  harmonize::BalancePolicy policy;
  if (balance_j.contains("max_per_domain")) policy.max_per_domain = balance_j["max_per_domain"].get<std::size_t>();
  if (o.max_per_domain) policy.max_per_domain = o.max_per_domain;
  if (balance_j.contains("target_counts"))
    policy.target_counts = balance_j["target_counts"].get<std::map<std::string, std::size_t>>();
  const std::size_t before_balance = corpus.size();
  if (policy.max_per_domain || !policy.target_counts.empty())
    corpus = harmonize::balance_domains(std::move(corpus), policy, derive_seed(ctx.seed(), fnv1a("balance")));

  const auto split = harmonize::stratified_split(corpus, ratio, ctx.seed());
  std::vector<NewsRecord> train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (split.assignment[i].second == harmonize::Partition::Train ? train : test).push_back(corpus[i]);

  ordered_json report;
  report["sources"] = std::move(source_reports);
  auto renamed = ordered_json::array();
  for (const auto& [from, to] : fused.renamed_ids) renamed.push_back({{"from", from}, {"to", to}});
  report["renamed_ids"] = std::move(renamed);
  report["after_dedup"] = before_balance;
  report["after_balance"] = corpus.size();
  report["train"] = train.size();
  report["test"] = test.size();
  ctx.manifest().add_config_hash("split", to_hex(fnv1a(std::to_string(ratio))));

  ctx.output("corpus.jsonl", write_corpus(corpus));
  ctx.output("train.jsonl", write_corpus(train));
  ctx.output("test.jsonl", write_corpus(test));
  ctx.output("split.json", split.to_json().dump(2) + "\n");
  ctx.output("dedup_report.json", fused.report.to_json().dump(2) + "\n");
  ctx.output("harmonize_report.json", report.dump(2) + "\n");
  std::cout << "corpus " << corpus.size() << " records (train " << train.size() << ", test "
            << test.size() << ")\n";
  return 0;
}

// --- stats ------------------------------------------------------------------------

struct StatsOpts {
  std::string corpus;
  std::optional<std::size_t> top_k;
};

int run_stats(Context& ctx, const StatsOpts& o) {
  const auto records = load_records(ctx, o.corpus);
  const auto pp = ctx.preprocess_config();
  const std::size_t k = o.top_k.value_or(ctx.section("stats").value("top_k", std::size_t{50}));
  const auto stats = compute_stats(records, k, pp.stoplist);
  const std::string text = to_json(stats).dump(2) + "\n";
  ctx.output("stats.json", text);
  ctx.output("top_terms_legit.tsv", top_terms_tsv(stats.top_terms[index_of(Label::Legit)]));
  ctx.output("top_terms_fake.tsv", top_terms_tsv(stats.top_terms[index_of(Label::Fake)]));
  std::cout << text;
  return 0;
}

// --- preprocess -------------------------------------------------------------------

struct PreprocessOpts {
  std::string corpus;
  std::string text;
};

ordered_json preprocess_row(const std::string& id, const std::string& text,
                            const preprocess::PreprocessConfig& pp) {
  ordered_json row;
  if (!id.empty()) row["id"] = id;
  row["cleaned"] = preprocess::clean_text(text, pp);
  row["tokens"] = preprocess::run_pipeline(text, pp);
  return row;
}

int run_preprocess(Context& ctx, const PreprocessOpts& o) {
  const auto pp = ctx.preprocess_config();
  if (!o.text.empty()) {
    std::cout << preprocess_row("", o.text, pp).dump() << "\n";
    return 0;
  }
  if (o.corpus.empty()) throw std::invalid_argument("preprocess needs --corpus or --text");
  std::vector<ordered_json> rows;
  for (const auto& item : load_items(ctx, o.corpus)) rows.push_back(preprocess_row(item.id, item.text, pp));
  ctx.output("preprocessed.jsonl", jsonl(rows));
  std::cout << rows.size() << " documents preprocessed\n";
  return 0;
}

// --- train ------------------------------------------------------------------------

struct TrainOpts {
  std::string corpus;
  std::vector<std::string> algorithms;
  std::string feature_space;
  std::optional<std::size_t> epochs, batch_size, k, n_trees, max_depth, hidden_units, rounds;
  std::optional<double> learning_rate;
};

classifiers::TrainConfig train_config(Context& ctx, const TrainOpts& o) {
  auto c = classifiers::train_config_from_json(ctx.section("train"));
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.k) c.k = *o.k;
  if (o.n_trees) c.n_trees = *o.n_trees;
  if (o.max_depth) c.max_depth = *o.max_depth;
  if (o.hidden_units) c.hidden_units = *o.hidden_units;
  if (o.rounds) c.boosting_rounds = *o.rounds;
  if (o.learning_rate) c.learning_rate = *o.learning_rate;
  c.seed = ctx.seed();
  c.validate();
  return c;
}

int run_train(Context& ctx, const TrainOpts& o) {
  const auto records = load_records(ctx, o.corpus);
  if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "training corpus is empty", o.corpus);
  std::vector<std::string> texts;
  for (const auto& r : records) texts.push_back(r.text);

  const auto space = [&] {
    if (!o.feature_space.empty()) return features::FeatureSpace::parse(ctx.input(o.feature_space));
    auto fitted = features::FeatureSpace::fit(texts, ctx.preprocess_config(), ctx.feature_config(),
                                              features::default_lexicon(), ctx.jobs());
    ctx.output("vocabulary.tsv", fitted.serialize());
    return fitted;
  }();
  ctx.manifest().add_config_hash("feature_space", to_hex(space.hash()));

  classifiers::Dataset data;
  data.vectors = space.featurize_all(texts, ctx.jobs());
  for (const auto& r : records) data.labels.push_back(r.label);
  data.dimension = space.dimension();

  const auto base = train_config(ctx, o);
  std::vector<std::string> algorithms = o.algorithms;
  if (algorithms.empty()) algorithms.push_back(std::string(classifiers::to_string(base.algorithm)));
  auto reports = ordered_json::array();
  for (const auto& name : algorithms) {
    auto config = base;
    config.algorithm = classifiers::parse_algorithm(name);
    const std::string tag(classifiers::to_string(config.algorithm));
    ctx.manifest().add_config_hash("train." + tag, to_hex(fnv1a(classifiers::to_json(config).dump())));
    spdlog::info("training {} on {} examples, dimension {}", tag, data.size(), data.dimension);
    const auto model = classifiers::train(data, config, space.hash());
    if (model.degenerate) spdlog::warn("{}: training data has a single class; model is degenerate", tag);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
      correct += classifiers::predict(model, data.vectors[i]).predicted == data.labels[i];
    ctx.output("model_" + tag + ".bin", classifiers::serialize_model(model));
    ordered_json r;
    r["algorithm"] = tag;
    r["examples"] = data.size();
    r["dimension"] = data.dimension;
    r["degenerate"] = model.degenerate;
    r["training_accuracy"] = static_cast<double>(correct) / static_cast<double>(data.size());
    reports.push_back(std::move(r));
    std::cout << tag << ": training accuracy " << reports.back()["training_accuracy"].get<double>() << "\n";
  }
  ctx.output("train_report.json", reports.dump(2) + "\n");
  return 0;
}

// --- predict ----------------------------------------------------------------------

struct PredictOpts {
  std::string model;
  std::string feature_space;
  std::string input;
};

int run_predict(Context& ctx, const PredictOpts& o) {
  const auto model = classifiers::deserialize_model(ctx.input(o.model));
  const auto space = features::FeatureSpace::parse(ctx.input(o.feature_space));
  const auto items = load_items(ctx, o.input);
  std::vector<std::string> texts;
  for (const auto& item : items) texts.push_back(item.text);
  const auto vectors = space.featurize_all(texts, ctx.jobs());
  std::vector<ordered_json> rows;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto out = classifiers::predict(model, vectors[i]);
    ordered_json row;
    row["item_id"] = items[i].id;
    row["predicted"] = std::string(to_string(out.predicted));
    row["legit"] = out.prob(Label::Legit);
    row["fake"] = out.prob(Label::Fake);
    rows.push_back(std::move(row));
  }
  ctx.output("predictions.jsonl", jsonl(rows));
  std::cout << rows.size() << " predictions\n";
  return 0;
}

// --- ensemble ---------------------------------------------------------------------

struct EnsembleOpts {
  std::string ensemble_config;
  std::string feature_space;
  std::string input;
  std::vector<std::string> models;   // id=path
  std::vector<std::string> scorers;  // id=address
  std::optional<std::size_t> fan_out;
  std::optional<std::size_t> timeout_ms;
};

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw std::invalid_argument(std::string(flag) + " expects id=value, got " + s);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int run_ensemble_cmd(Context& ctx, const EnsembleOpts& o) {
  ensemble::EnsembleConfig config;
  if (!o.ensemble_config.empty()) {
    const fs::path path(o.ensemble_config);
    config = ensemble::ensemble_config_from_json(json::parse(ctx.input(o.ensemble_config)), path.parent_path());
  } else if (ctx.section("ensemble").contains("predictors")) {
    config = ensemble::ensemble_config_from_json(ctx.section("ensemble"));
  }
  for (const auto& m : o.models) {
    auto [id, path] = split_assignment(m, "--model");
    config.predictors.push_back({id, ensemble::PredictorKind::InProcessModel, path, std::nullopt});
  }
  for (const auto& s : o.scorers) {
    auto [id, address] = split_assignment(s, "--scorer");
    scorer::Endpoint e;
    e.address = address;
    if (o.timeout_ms) e.timeout = std::chrono::milliseconds(*o.timeout_ms);
    e.validate();
    config.predictors.push_back({id, ensemble::PredictorKind::ExternalScorer, {}, e});
  }
  if (!o.feature_space.empty()) config.feature_space = o.feature_space;
  if (o.fan_out) config.options.fan_out = *o.fan_out;
  config.options.jobs = ctx.jobs();
  if (config.predictors.empty()) throw std::invalid_argument("ensemble needs at least one predictor");
  if (config.feature_space.empty()) throw std::invalid_argument("ensemble needs --feature-space");
  ctx.manifest().add_config_hash("ensemble", to_hex(fnv1a(ensemble::to_json(config).dump())));

  const auto space = features::FeatureSpace::parse(ctx.input(config.feature_space.string()));
  for (const auto& p : config.predictors)
    if (p.kind == ensemble::PredictorKind::InProcessModel) ctx.manifest().add_input(p.model_path);
  auto owned = ensemble::make_predictors(config);
  std::vector<ensemble::Predictor*> predictors;
  for (auto& p : owned) predictors.push_back(p.get());
  const auto items = load_items(ctx, o.input);
  const auto records = ensemble::run_ensemble(predictors, space, items, config.options);
  ctx.output("votes.jsonl", ensemble::write_vote_records(records));
  std::size_t ties = 0;
  for (const auto& r : records) ties += r.tie_broken;
  std::cout << records.size() << " items decided by " << predictors.size() << " predictors ("
            << ties << " tie-broken)\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------------------

struct EvaluateOpts {
  std::string predictions;
  std::string gold;
  std::string model_id = "model";
  bool by_source = false;
  std::vector<std::string> sources;
};

// Accepts vote records (decision) and predict output (predicted).
std::vector<std::pair<std::string, Label>> read_decisions(const std::string& text) {
  std::vector<std::pair<std::string, Label>> out;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      const std::string id = j.contains("item_id") ? j["item_id"].get<std::string>() : j.at("id").get<std::string>();
      const std::string label = j.contains("decision") ? j["decision"].get<std::string>() : j.at("predicted").get<std::string>();
      const auto l = parse_label(label);
      if (!l) throw Error(ErrorKind::ParseError, "bad label " + label, "line " + std::to_string(line_no));
      out.emplace_back(id, *l);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("predictions: ") + e.what(), "line " + std::to_string(line_no));
    }
  }
  return out;
}

int run_evaluate(Context& ctx, const EvaluateOpts& o) {
  const auto decisions = read_decisions(ctx.input(o.predictions));
  const auto gold = load_records(ctx, o.gold);
  std::map<std::string, const NewsRecord*> by_id;
  for (const auto& g : gold) by_id.emplace(g.id, &g);
  std::vector<evaluate::LabeledPrediction> joined;
  for (const auto& [id, label] : decisions) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::UnknownItemId, "no gold label for item " + id, id);
    joined.push_back({id, it->second->source_id, label, it->second->label});
  }
  std::vector<Label> pred, truth;
  for (const auto& j : joined) {
    pred.push_back(j.predicted);
    truth.push_back(j.gold);
  }
  auto report = evaluate::metrics(evaluate::confusion(pred, truth));
  report.model_id = o.model_id;
  report.config_hash = to_hex(fnv1a(ctx.section("features").dump() + ctx.section("train").dump()));

  ordered_json out = evaluate::to_json(report);
  std::vector<evaluate::EvalReport> rows{report};
  if (o.by_source || !o.sources.empty()) {
    const auto cross = evaluate::cross_dataset_eval(joined, o.sources);
    out["cross_dataset"] = evaluate::to_json(cross);
    for (const auto& [source, r] : cross.per_source) rows.push_back(r);
  }
  ctx.output("report.json", out.dump(2) + "\n");
  const std::string table = evaluate::render_table(rows);
  ctx.output("report.txt", table);
  std::cout << table;
  return 0;
}

// --- review loop ------------------------------------------------------------------

struct ExportOpts {
  std::string votes;
  std::string gold;
  std::string format = "jsonl";
};

int run_export_review(Context& ctx, const ExportOpts& o) {
  const auto records = ensemble::read_vote_records(ctx.input(o.votes));
  const auto gold = load_records(ctx, o.gold);
  const auto items = evaluate::export_review(records, gold);
  if (o.format == "tsv")
    ctx.output("review.tsv", evaluate::review_to_tsv(items));
  else
    ctx.output("review.jsonl", evaluate::write_review(items));
  std::cout << items.size() << " misclassified items exported\n";
  return 0;
}

struct ImportOpts {
  std::string votes;
  std::string gold;
  std::string review;
};

int run_import_review(Context& ctx, const ImportOpts& o) {
  const auto records = ensemble::read_vote_records(ctx.input(o.votes));
  const auto gold = load_records(ctx, o.gold);
  const std::string text = ctx.input(o.review);
  const auto reviewed = fs::path(o.review).extension() == ".tsv" ? evaluate::review_from_tsv(text)
                                                                 : evaluate::read_review(text);
  auto outcome = evaluate::import_review(records, gold, reviewed);
  outcome.original.model_id = "original";
  outcome.amended.model_id = "amended";
  ctx.output("review_outcome.json", evaluate::to_json(outcome).dump(2) + "\n");
  const std::vector<evaluate::EvalReport> rows{outcome.original, outcome.amended};
  std::cout << outcome.applied.size() << " verdicts applied\n" << evaluate::render_table(rows);
  return 0;
}

// --- serve-check ------------------------------------------------------------------

struct ServeCheckOpts {
  std::string endpoint;
  std::size_t timeout_ms = 5000;
  bool conformance = false;
};

int run_serve_check(Context& ctx, const ServeCheckOpts& o) {
  scorer::Endpoint e;
  e.address = o.endpoint;
  e.timeout = std::chrono::milliseconds(o.timeout_ms);
  e.validate();
  scorer::ScorerClient client(e);
  const auto caps = client.handshake();
  ordered_json out;
  out["endpoint"] = e.address;
  out["model_name"] = caps.model_name;
  out["protocol_version"] = caps.protocol_version;
  out["max_batch"] = caps.max_batch;
  bool all_passed = true;
  if (o.conformance) {
    auto checks = ordered_json::array();
    for (const auto& c : scorer::run_conformance(e)) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      all_passed = all_passed && c.passed;
    }
    out["conformance"] = std::move(checks);
  }
  ctx.output("serve_check.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  if (!all_passed) throw Error(ErrorKind::MalformedResponse, "scorer failed protocol conformance", e.address);
  return 0;
}

spdlog::level::level_enum parse_level(const std::string& name) {
  const auto level = spdlog::level::from_str(name);
  if (level == spdlog::level::off && name != "off")
    throw std::invalid_argument("unknown log level: " + name);
  return level;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("lund");
  spdlog::set_default_logger(logger);

  CLI::App app{"Urdu fake-news detection pipeline"};
  app.set_version_flag("--version", std::string(LUND_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Run seed (fallback: config \"seed\", then LUND_SEED, then 0)");
  app.add_option("--config", g.config_path, "JSON config with per-stage sections")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and the run manifest")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, critical or off")
      ->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  HarmonizeOpts harmonize_o;
  auto* harmonize_cmd = app.add_subcommand("harmonize", "Ingest sources, fuse, deduplicate and split");
  harmonize_cmd->add_option("--manifest", harmonize_o.manifests, "Source manifest (repeatable)")->required()
      ->check(CLI::ExistingFile);
  harmonize_cmd->add_option("--train-ratio", harmonize_o.train_ratio, "Train fraction per label (default 0.8)");
  harmonize_cmd->add_option("--dedup-threshold", harmonize_o.dedup_threshold, "Near-duplicate Jaccard threshold");
  harmonize_cmd->add_option("--dedup-method", harmonize_o.dedup_method, "auto, exhaustive or minhash");
  harmonize_cmd->add_option("--max-per-domain", harmonize_o.max_per_domain, "Cap records per domain tag");

  StatsOpts stats_o;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics and top terms per class");
  stats_cmd->add_option("--corpus", stats_o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--top-k", stats_o.top_k, "Top terms per class (default 50)");

  PreprocessOpts preprocess_o;
  auto* preprocess_cmd = app.add_subcommand("preprocess", "Clean, tokenize, remove stop words and stem");
  preprocess_cmd->add_option("--corpus", preprocess_o.corpus, "JSONL with id and text")->check(CLI::ExistingFile);
  preprocess_cmd->add_option("--text", preprocess_o.text, "Single text; result printed to stdout");

  TrainOpts train_o;
  auto* train_cmd = app.add_subcommand("train", "Fit the feature space and train classifiers");
  train_cmd->add_option("--corpus", train_o.corpus, "Training corpus JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--algorithm", train_o.algorithms, "knn, svm, dt, rf, lr, nb, gb or mlp (repeatable)");
  train_cmd->add_option("--feature-space", train_o.feature_space, "Reuse a saved vocabulary.tsv")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", train_o.epochs);
  train_cmd->add_option("--batch-size", train_o.batch_size);
  train_cmd->add_option("--learning-rate", train_o.learning_rate);
  train_cmd->add_option("--k", train_o.k, "KNN neighbours");
  train_cmd->add_option("--n-trees", train_o.n_trees, "Random forest size");
  train_cmd->add_option("--max-depth", train_o.max_depth, "Tree depth limit");
  train_cmd->add_option("--hidden-units", train_o.hidden_units, "MLP hidden layer width");
  train_cmd->add_option("--rounds", train_o.rounds, "Boosting rounds");

  PredictOpts predict_o;
  auto* predict_cmd = app.add_subcommand("predict", "Apply one model to a JSONL of texts");
  predict_cmd->add_option("--model", predict_o.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--feature-space", predict_o.feature_space, "vocabulary.tsv")->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--input", predict_o.input, "JSONL with id and text")->required()->check(CLI::ExistingFile);

  EnsembleOpts ensemble_o;
  auto* ensemble_cmd = app.add_subcommand("ensemble", "Majority vote over models and scorers");
  ensemble_cmd->add_option("--ensemble-config", ensemble_o.ensemble_config, "Ensemble JSON")
      ->check(CLI::ExistingFile);
  ensemble_cmd->add_option("--feature-space", ensemble_o.feature_space, "vocabulary.tsv")->check(CLI::ExistingFile);
  ensemble_cmd->add_option("--input", ensemble_o.input, "JSONL with id and text")->required()
      ->check(CLI::ExistingFile);
  ensemble_cmd->add_option("--model", ensemble_o.models, "id=model-path (repeatable)");
  ensemble_cmd->add_option("--scorer", ensemble_o.scorers, "id=address (repeatable)");
  ensemble_cmd->add_option("--fan-out", ensemble_o.fan_out, "Predictors invoked concurrently");
  ensemble_cmd->add_option("--timeout-ms", ensemble_o.timeout_ms, "Timeout for --scorer endpoints");

  EvaluateOpts evaluate_o;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Confusion matrix and metrics against gold labels");
  evaluate_cmd->add_option("--predictions", evaluate_o.predictions, "votes.jsonl or predictions.jsonl")
      ->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--gold", evaluate_o.gold, "Corpus JSONL with gold labels")->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--model-id", evaluate_o.model_id, "Name in the report")->capture_default_str();
  evaluate_cmd->add_flag("--by-source", evaluate_o.by_source, "Add per-source reports");
  evaluate_cmd->add_option("--source", evaluate_o.sources, "Restrict per-source reports (repeatable)");

  ExportOpts export_o;
  auto* export_cmd = app.add_subcommand("export-review", "Write misclassified items for expert review");
  export_cmd->add_option("--votes", export_o.votes, "votes.jsonl")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--gold", export_o.gold, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--format", export_o.format, "jsonl or tsv")
      ->check(CLI::IsMember({"jsonl", "tsv"}))->capture_default_str();

  ImportOpts import_o;
  auto* import_cmd = app.add_subcommand("import-review", "Apply expert verdicts and recompute metrics");
  import_cmd->add_option("--votes", import_o.votes, "votes.jsonl")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--gold", import_o.gold, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--review", import_o.review, "review.jsonl or review.tsv")->required()
      ->check(CLI::ExistingFile);

  ServeCheckOpts serve_o;
  auto* serve_cmd = app.add_subcommand("serve-check", "Handshake with a scorer and print its capabilities");
  serve_cmd->add_option("--endpoint", serve_o.endpoint, "host:port or socket path")->required();
  serve_cmd->add_option("--timeout-ms", serve_o.timeout_ms)->check(CLI::PositiveNumber)->capture_default_str();
  serve_cmd->add_flag("--conformance", serve_o.conformance, "Run the protocol conformance checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::vector<std::string> args(argv + 1, argv + argc);
  RunManifest manifest(command, args);
  int code = 0;
  std::string message;
  try {
    spdlog::set_level(parse_level(g.log_level));
    Context ctx(g, manifest);
    if (command == "harmonize") code = run_harmonize(ctx, harmonize_o);
    else if (command == "stats") code = run_stats(ctx, stats_o);
    else if (command == "preprocess") code = run_preprocess(ctx, preprocess_o);
    else if (command == "train") code = run_train(ctx, train_o);
    else if (command == "predict") code = run_predict(ctx, predict_o);
    else if (command == "ensemble") code = run_ensemble_cmd(ctx, ensemble_o);
    else if (command == "evaluate") code = run_evaluate(ctx, evaluate_o);
    else if (command == "export-review") code = run_export_review(ctx, export_o);
    else if (command == "import-review") code = run_import_review(ctx, import_o);
    else if (command == "serve-check") code = run_serve_check(ctx, serve_o);
  } catch (const Error& e) {
    code = is_protocol_error(e.kind()) ? kExitProtocol : kExitData;
    message = e.what();
    if (!e.payload().empty()) message += " [" + e.payload() + "]";
  } catch (const std::invalid_argument& e) {
    code = kExitUsage;
    message = e.what();
  } catch (const json::exception& e) {
    code = kExitData;
    message = std::string("JSON: ") + e.what();
  } catch (const std::exception& e) {
    code = kExitData;
    message = e.what();
  }
  if (!message.empty()) spdlog::error("{}", message);
  manifest.set_status(code, message);
  try {
    manifest.write(g.out_dir);
  } catch (const std::exception& e) {
    spdlog::error("could not write run manifest: {}", e.what());
    if (code == 0) code = kExitData;
  }
  return code;
}

}  // namespace lund::cli

int main(int argc, char** argv) { return lund::cli::main(argc, argv); }
