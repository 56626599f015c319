// Acceptance gate. One criterion per invocation: `lund_acceptance <name>`
// prints a single PASS or FAIL line and exits nonzero on FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <iterator>
#include <memory>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "lund/classifiers.hpp"
#include "lund/classifiers_detail.hpp"
#include "lund/ensemble.hpp"
#include "lund/error.hpp"
#include "lund/evaluate.hpp"
#include "lund/features.hpp"
#include "lund/harmonize.hpp"
#include "lund/mock_scorer.hpp"
#include "lund/scorer_bridge.hpp"
#include "lund/util/io.hpp"
#include "lund/util/rng.hpp"

namespace fs = std::filesystem;
using namespace lund;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Collects failed checks; the criterion passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ += !ok;
  }
  Outcome result(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    std::string d = std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed";
    for (const auto& f : failures_) d += "; " + f;
    return {false, d};
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// --- split_arithmetic ---------------------------------------------------------

Outcome split_arithmetic() {
  std::vector<NewsRecord> corpus;
  corpus.reserve(27568);
  for (std::size_t i = 0; i < 27568; ++i)
    corpus.push_back(testing::make_record("r" + std::to_string(i), "خبر " + std::to_string(i),
                                          i < 13383 ? Label::Legit : Label::Fake));
  Checks c;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto s = harmonize::stratified_split(corpus, 0.8, seed);
    const auto again = harmonize::stratified_split(corpus, 0.8, seed);
    std::array<std::size_t, 2> train_by_label{};
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (s.assignment[i].second == harmonize::Partition::Train) ++train_by_label[index_of(corpus[i].label)];
    const auto tag = " (seed " + std::to_string(seed) + ")";
    c.expect(s.count(harmonize::Partition::Train) == 22055, "train != 22055" + tag);
    c.expect(s.count(harmonize::Partition::Test) == 5513, "test != 5513" + tag);
    c.expect(train_by_label[index_of(Label::Legit)] == 10707, "legit train != 10707" + tag);
    c.expect(train_by_label[index_of(Label::Fake)] == 11348, "fake train != 11348" + tag);
    c.expect(s.assignment == again.assignment, "assignment not reproducible" + tag);
  }
  return c.result("22055 train / 5513 test for seeds 1..5");
}

// --- metric_consistency ---------------------------------------------------------

Outcome metric_consistency() {
  struct Row {
    const char* name;
    evaluate::ConfusionMatrix m;  // chosen so P and R are exact
    double precision, recall, f1;
  };
  const Row rows[] = {
      {"unified", {920638, 37362, 40362, 1000}, 0.961, 0.958, 0.960},
      {"xlm-r", {53476, 4149, 4524, 1000}, 0.928, 0.922, 0.925},
  };
  Checks c;
  std::string summary;
  for (const auto& r : rows) {
    const auto rep = evaluate::metrics(r.m);
    c.expect(std::abs(rep.precision - r.precision) < 1e-12, std::string(r.name) + " precision");
    c.expect(std::abs(rep.recall - r.recall) < 1e-12, std::string(r.name) + " recall");
    const double diff = std::abs(rep.f1 - r.f1);
    c.expect(diff <= 0.0005, std::string(r.name) + " F1 " + fmt(rep.f1) + " vs " + fmt(r.f1, 3) +
                                 " (|diff| " + fmt(diff) + " > 0.0005)");
    summary += std::string(summary.empty() ? "" : ", ") + r.name + " F1 " + fmt(rep.f1);
  }
  return c.result(summary);
}

// --- tfidf_oracle ---------------------------------------------------------------

using Tokens = std::vector<std::string>;

// Independent reference: explicit loops over term strings.
std::map<std::string, double> brute_tfidf(const std::vector<Tokens>& docs, std::size_t d,
                                          bool bigrams) {
  auto terms_of = [&](const Tokens& t) {
    Tokens out = t;
    if (bigrams)
      for (std::size_t i = 0; i + 1 < t.size(); ++i) out.push_back(t[i] + "_" + t[i + 1]);
    return out;
  };
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    const auto terms = terms_of(doc);
    std::set<std::string> seen(terms.begin(), terms.end());
    for (const auto& t : seen) ++df[t];
  }
  std::map<std::string, double> w;
  for (const auto& t : terms_of(docs[d])) w[t] += 1.0;
  double sq = 0.0;
  const double n = static_cast<double>(docs.size());
  for (auto& [t, v] : w) {
    v *= std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
    sq += v * v;
  }
  for (auto& [t, v] : w) v /= std::sqrt(sq);
  return w;
}

Outcome tfidf_oracle() {
  const std::vector<Tokens> docs{
      {"سیاست", "خبر", "خبر", "حکومت"},
      {"کھیل", "خبر", "میچ"},
      {"حکومت", "سیاست", "سیاست", "سیاست", "بیان"},
      {"میچ", "کھیل", "کھیل"},
      {"بیان", "خبر", "حکومت", "میچ", "سیاست", "کھیل"},
  };
  Checks c;
  std::size_t compared = 0;
  for (bool bigrams : {false, true}) {
    features::FeatureConfig cfg;
    cfg.word_ngrams = {1, bigrams ? 2u : 1u};
    cfg.min_df = 1;
    cfg.max_features.reset();
    cfg.weighting = features::Weighting::TfIdf;
    const auto vocab = features::build_vocabulary(docs, cfg);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto x = features::vectorize(docs[d], vocab, cfg);
      const auto ref = brute_tfidf(docs, d, bigrams);
      c.expect(x.entries().size() == ref.size(), "entry count differs in doc " + std::to_string(d));
      for (const auto& [term, value] : ref) {
        const auto id = vocab.id_of(term);
        const double got = x.get(id);
        ++compared;
        c.expect(id != 0 && std::abs(got - value) <= 1e-9,
                 "doc " + std::to_string(d) + " term " + term + ": " + fmt(got, 12) + " vs " + fmt(value, 12));
      }
    }
  }
  return c.result(std::to_string(compared) + " entries within 1e-9");
}

// --- naive_bayes_oracle ---------------------------------------------------------

Outcome naive_bayes_oracle() {
  const auto words = testing::urdu_words(2, 41);
  // Byte order fixes the ids: the smaller string gets id 1.
  const std::string a = std::min(words[0], words[1]);
  const std::string b = std::max(words[0], words[1]);
  const std::vector<std::string> texts{a, a, b, b};
  const std::vector<Label> labels{Label::Fake, Label::Fake, Label::Legit, Label::Legit};

  features::FeatureConfig fc;
  fc.word_ngrams = {1, 1};
  fc.min_df = 1;
  fc.max_features.reset();
  fc.weighting = features::Weighting::Counts;
  fc.include_lexical_stats = false;
  fc.include_sentiment = false;
  const auto space = features::FeatureSpace::fit(texts, preprocess::PreprocessConfig{}, fc);

  classifiers::Dataset data;
  data.dimension = space.dimension();
  for (const auto& t : texts) data.vectors.push_back(space.featurize(t));
  data.labels = labels;
  classifiers::TrainConfig tc;
  tc.algorithm = classifiers::Algorithm::NaiveBayes;
  tc.nb_alpha = 1.0;
  const auto model = classifiers::train(data, tc, space.hash());
  const auto& p = std::get<classifiers::NaiveBayesParams>(model.params);

  Checks c;
  const auto ia = space.vocabulary().id_of(a);
  const auto ib = space.vocabulary().id_of(b);
  c.expect(ia == 1 && ib == 2 && data.dimension == 3, "unexpected feature layout");
  const auto F = index_of(Label::Fake);
  const auto L = index_of(Label::Legit);
  // Fake: count(a)=2, count(b)=0, total 2; V=2; (c+1)/(2+2).
  const std::pair<double, double> expected[] = {
      {p.log_prob[F][ia], std::log(3.0 / 4.0)}, {p.log_prob[F][ib], std::log(1.0 / 4.0)},
      {p.log_prob[L][ia], std::log(1.0 / 4.0)}, {p.log_prob[L][ib], std::log(3.0 / 4.0)},
      {p.log_prior[F], std::log(0.5)},          {p.log_prior[L], std::log(0.5)},
  };
  for (const auto& [got, want] : expected)
    c.expect(std::abs(got - want) <= 1e-12, "log-probability " + fmt(got, 15) + " vs " + fmt(want, 15));

  // Posteriors: 0.5*(3/4)^k*(1/4)^m against the mirror image.
  const std::pair<std::string, double> queries[] = {
      {a + " " + a, 0.9},
      {a, 0.75},
      {a + " " + b, 0.5},
      {b + " " + b + " " + b, (1.0 / 64) / (1.0 / 64 + 27.0 / 64)},
  };
  for (const auto& [q, want] : queries) {
    const double got = classifiers::predict(model, space.featurize(q)).prob(Label::Fake);
    c.expect(std::abs(got - want) <= 1e-12, "posterior " + fmt(got, 15) + " vs " + fmt(want, 15));
  }
  return c.result("log-probabilities and 4 posteriors within 1e-12");
}

// --- mlp_gradient_check ---------------------------------------------------------

Outcome mlp_gradient_check() {
  testing::SeparableSpec spec;
  spec.items = 10;
  spec.seed = 17;
  const auto corpus = testing::separable_corpus(spec);
  std::vector<std::string> texts;
  for (const auto& r : corpus) texts.push_back(r.text);
  features::FeatureConfig fc;
  fc.min_df = 1;
  fc.include_lexical_stats = true;
  const auto space = features::FeatureSpace::fit(texts, preprocess::PreprocessConfig{}, fc);
  classifiers::Dataset d;
  d.dimension = space.dimension();
  for (const auto& r : corpus) {
    d.vectors.push_back(space.featurize(r.text));
    d.labels.push_back(r.label);
  }
  Rng rng(23);
  auto p = classifiers::detail::init_mlp(d, 8, rng);
  for (double& b : p.b1) b = 0.1 * rng.normal();
  for (double& b : p.b2) b = 0.1 * rng.normal();
  const double l2 = 1e-3;
  const double h = 1e-5;
  classifiers::MlpParams g;
  classifiers::detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, &g);

  double worst = 0.0;
  std::size_t checked = 0, bad = 0;
  auto block = [&](std::vector<double>& w, const std::vector<double>& gw) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w[k];
      w[k] = saved + h;
      const double up = classifiers::detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, nullptr);
      w[k] = saved - h;
      const double down = classifiers::detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, nullptr);
      w[k] = saved;
      const double numeric = (up - down) / (2 * h);
      const double rel = std::abs(numeric - gw[k]) / std::max({std::abs(numeric), std::abs(gw[k]), 1e-8});
      worst = std::max(worst, rel);
      bad += rel > 1e-4;
      ++checked;
    }
  };
  block(p.w1, g.w1);
  block(p.b1, g.b1);
  block(p.w2, g.w2);
  block(p.b2, g.b2);
  const std::string summary = std::to_string(checked) + " parameters, max relative error " + fmt(worst, 9);
  if (bad == 0) return {true, summary};
  return {false, std::to_string(bad) + " parameters above 1e-4; " + summary};
}

// --- majority_vote_oracle -------------------------------------------------------

Label brute_majority(const std::vector<PredictorOutput>& votes) {
  int fake = 0, legit = 0;
  double pf = 0.0, pl = 0.0;
  for (const auto& v : votes) {
    (v.predicted == Label::Fake ? fake : legit) += 1;
    pf += v.probs[index_of(Label::Fake)];
    pl += v.probs[index_of(Label::Legit)];
  }
  if (fake != legit) return fake > legit ? Label::Fake : Label::Legit;
  const double n = static_cast<double>(votes.size());
  return pl / n > pf / n ? Label::Legit : Label::Fake;
}

Outcome majority_vote_oracle() {
  Rng rng(2024);
  Checks c;
  std::size_t cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    for (std::size_t n = 1; n <= 5; ++n) {
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<PredictorOutput> votes;
        for (std::size_t k = 0; k < n; ++k) {
          // Bit set: a Fake vote with P(fake) in [0.5, 1]; clear: Legit with P(fake) < 0.5.
          const double u = rng.uniform() * 0.5;
          const double p = (mask >> k & 1u) ? 0.5 + u : 0.5 - u - 1e-9 * (u == 0.0);
          votes.push_back(PredictorOutput::from_fake_probability(std::clamp(p, 0.0, 1.0)));
        }
        const auto d = ensemble::aggregate(votes);
        const Label want = brute_majority(votes);
        const std::size_t fakes = static_cast<std::size_t>(std::popcount(mask));
        ++cases;
        c.expect(d.label == want, "n=" + std::to_string(n) + " mask=" + std::to_string(mask) +
                                      " trial=" + std::to_string(trial));
        c.expect(d.tie_broken == (2 * fakes == n), "tie flag n=" + std::to_string(n));
      }
    }
  }
  return c.result(std::to_string(cases) + " vote patterns agree with the reference");
}

// --- dedup_guarantee ------------------------------------------------------------

double brute_jaccard(const std::string& x, const std::string& y) {
  auto windows = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> w{std::istream_iterator<std::string>(in), {}};
    std::set<std::vector<std::string>> out;
    for (std::size_t i = 0; i + 5 <= w.size(); ++i) out.emplace(w.begin() + i, w.begin() + i + 5);
    return out;
  };
  const auto a = windows(x), b = windows(y);
  std::size_t inter = 0;
  for (const auto& s : a) inter += b.count(s);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

Outcome dedup_guarantee() {
  const auto f = testing::dedup_fixture(500, 50, 20, 120, 31);
  std::map<std::string, const NewsRecord*> by_id;
  for (const auto& r : f.records) by_id[r.id] = &r;
  Checks c;
  // Each planted copy must be within the similarity bound of some decoy.
  double lowest = 1.0;
  for (const auto* ids : {&f.exact_ids, &f.near_ids}) {
    for (const auto& id : *ids) {
      double best = 0.0;
      for (const auto& d : f.decoy_ids) best = std::max(best, brute_jaccard(by_id[id]->text, by_id[d]->text));
      lowest = std::min(lowest, best);
      c.expect(best >= 0.9, "planted " + id + " has Jaccard " + fmt(best, 4));
    }
  }
  std::string summary;
  for (auto method : {harmonize::DedupConfig::Method::Exhaustive, harmonize::DedupConfig::Method::MinHash}) {
    harmonize::DedupConfig cfg;
    cfg.method = method;
    const auto result = harmonize::deduplicate(f.records, cfg);
    std::set<std::string> kept;
    for (const auto& r : result.records) kept.insert(r.id);
    const char* name = method == harmonize::DedupConfig::Method::Exhaustive ? "exhaustive" : "minhash";
    std::size_t planted_removed = 0, decoys_removed = 0;
    for (const auto* ids : {&f.exact_ids, &f.near_ids})
      for (const auto& id : *ids) planted_removed += !kept.contains(id);
    for (const auto& id : f.decoy_ids) decoys_removed += !kept.contains(id);
    c.expect(planted_removed == 70, std::string(name) + ": " + std::to_string(planted_removed) + "/70 planted removed");
    c.expect(decoys_removed == 0, std::string(name) + ": " + std::to_string(decoys_removed) + " decoys removed");
    summary += std::string(summary.empty() ? "" : ", ") + name + " 70/70 removed, 0 decoys";
  }
  return c.result(summary + "; min planted Jaccard " + fmt(lowest, 4));
}

// --- separable_benchmark --------------------------------------------------------

Outcome separable_benchmark() {
  testing::SeparableSpec spec;  // 2000 items, 30% shared noise
  const auto corpus = testing::separable_corpus(spec);
  const auto split = harmonize::stratified_split(corpus, 0.8, 99);
  std::vector<NewsRecord> train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (split.assignment[i].second == harmonize::Partition::Train ? train : test).push_back(corpus[i]);

  std::vector<std::string> train_texts;
  for (const auto& r : train) train_texts.push_back(r.text);
  const auto space = features::FeatureSpace::fit(train_texts, preprocess::PreprocessConfig{},
                                                 features::FeatureConfig{});
  classifiers::Dataset data;
  data.dimension = space.dimension();
  data.vectors = space.featurize_all(train_texts);
  for (const auto& r : train) data.labels.push_back(r.label);

  std::vector<ensemble::Item> items;
  for (const auto& r : test) items.push_back({r.id, r.text});

  Checks c;
  std::map<classifiers::Algorithm, double> acc;
  std::map<classifiers::Algorithm, classifiers::TrainedModel> models;
  std::string summary;
  for (auto a : classifiers::kAllAlgorithms) {
    classifiers::TrainConfig tc;
    tc.algorithm = a;
    tc.seed = 99;
    auto m = classifiers::train(data, tc, space.hash());
    std::size_t correct = 0;
    for (const auto& r : test) correct += classifiers::predict(m, space.featurize(r.text)).predicted == r.label;
    acc[a] = static_cast<double>(correct) / static_cast<double>(test.size());
    const std::string name(classifiers::to_string(a));
    c.expect(acc[a] >= 0.95, name + " accuracy " + fmt(acc[a], 4) + " < 0.95");
    summary += name + " " + fmt(acc[a], 3) + " ";
    models.emplace(a, std::move(m));
  }

  const classifiers::Algorithm members[] = {classifiers::Algorithm::NaiveBayes,
                                            classifiers::Algorithm::LogisticRegression,
                                            classifiers::Algorithm::DecisionTree};
  std::vector<std::unique_ptr<ensemble::Predictor>> owned;
  std::vector<ensemble::Predictor*> preds;
  std::vector<double> member_acc;
  for (auto a : members) {
    owned.push_back(std::make_unique<ensemble::ModelPredictor>(std::string(classifiers::to_string(a)), models.at(a)));
    preds.push_back(owned.back().get());
    member_acc.push_back(acc[a]);
  }
  const auto records = ensemble::run_ensemble(preds, space, items);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i) correct += records[i].decision == test[i].label;
  const double ens = static_cast<double>(correct) / static_cast<double>(test.size());
  std::sort(member_acc.begin(), member_acc.end());
  c.expect(ens >= member_acc[1], "ensemble " + fmt(ens, 4) + " below median member " + fmt(member_acc[1], 4));
  return c.result(summary + "| ensemble(nb,lr,dt) " + fmt(ens, 3) + " >= median " + fmt(member_acc[1], 3));
}

// --- determinism ----------------------------------------------------------------

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + LUND_CLI_PATH + "' --log-level warn --seed 1234 " +
                          args + " > /dev/null 2>> stderr.log";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every file below `root` except run manifests and logs, keyed by relative path.
std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.starts_with("run_manifest.") || name == "stderr.log") continue;
    out[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return out;
}

Outcome determinism() {
  const auto base = testing::scratch_dir("acceptance_determinism");
  // One delimited source built from the separable corpus, with a few planted duplicates.
  testing::SeparableSpec spec;
  spec.items = 600;
  const auto corpus = testing::separable_corpus(spec);
  std::string tsv = "id\tnews\tlabel\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    tsv += corpus[i].id + "\t" + corpus[i].text + "\t" + (corpus[i].label == Label::Fake ? "fake" : "real") + "\n";
    if (i % 97 == 0) tsv += "dup" + std::to_string(i) + "\t" + corpus[i].text + "\t" + (corpus[i].label == Label::Fake ? "fake" : "real") + "\n";
  }
  const nlohmann::json manifest = {{"source_id", "bench"},
                                   {"format", "tsv"},
                                   {"delimiter", "tab"},
                                   {"field_map", {{"id", "id"}, {"text", "news"}, {"label", "label"}}},
                                   {"use_default_label_map", true},
                                   {"payload", "bench.tsv"}};

  Checks c;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir / "data");
    io::write_file(dir / "data" / "bench.tsv", tsv);
    io::write_file(dir / "data" / "bench.json", manifest.dump(2));
    const std::string steps[] = {
        "--out-dir h harmonize --manifest data/bench.json",
        "--out-dir t train --corpus h/train.jsonl --algorithm nb --algorithm lr --algorithm dt",
        "--out-dir e ensemble --feature-space t/vocabulary.tsv --input h/test.jsonl "
        "--model nb=t/model_nb.bin --model lr=t/model_lr.bin --model dt=t/model_dt.bin",
        "--out-dir v evaluate --predictions e/votes.jsonl --gold h/test.jsonl --model-id ensemble",
    };
    for (const auto& s : steps) {
      const int code = run_cli(dir, s);
      c.expect(code == 0, std::string("run ") + run + ": '" + s + "' exited " + std::to_string(code));
    }
  }
  const auto a = artifacts(base / "a");
  const auto b = artifacts(base / "b");
  c.expect(a.size() >= 12, "only " + std::to_string(a.size()) + " artifacts produced");
  c.expect(a.size() == b.size(), "artifact sets differ in size");
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    c.expect(it != b.end() && it->second == bytes, name + " differs between runs");
  }
  return c.result(std::to_string(a.size()) + " artifacts byte-identical across two runs");
}

// --- protocol_conformance -------------------------------------------------------

Outcome protocol_conformance() {
  Checks c;
  std::size_t passed = 0;
  {
    mock::MockScorer server(mock::Behaviour{});
    scorer::Endpoint e;
    e.address = server.address();
    e.timeout = std::chrono::milliseconds(2000);
    for (const auto& check : scorer::run_conformance(e)) {
      c.expect(check.passed, check.name + ": " + check.detail);
      passed += check.passed;
    }
  }
  {
    mock::Behaviour b;
    b.fixed = std::make_pair(0.25, 0.75);
    b.delay_trigger = "سست";
    b.delay = std::chrono::milliseconds(250);
    b.delay_once = true;
    mock::MockScorer server(b);
    scorer::Endpoint e;
    e.address = server.address();
    e.timeout = std::chrono::milliseconds(150);
    scorer::ScorerClient client(e);
    const std::vector<std::string> texts{"سست خبر", "دوسری خبر"};
    try {
      const auto out = client.score_batch(texts);
      c.expect(out.size() == 2 && out[0].prob(Label::Fake) == 0.75, "retried scores wrong");
      c.expect(client.retries() == 1, "expected exactly one retry");
      c.expect(client.discarded_responses() == 1, "late response not discarded");
      ++passed;
    } catch (const std::exception& ex) {
      c.expect(false, std::string("timeout-retry: ") + ex.what());
    }
  }
  {
    mock::Behaviour b;
    b.delay_trigger = "سست";
    b.delay = std::chrono::milliseconds(500);
    b.delay_once = false;
    mock::MockScorer server(b);
    scorer::Endpoint e;
    e.address = server.address();
    e.timeout = std::chrono::milliseconds(100);
    scorer::ScorerClient client(e);
    const std::vector<std::string> texts{"سست خبر"};
    try {
      client.score_batch(texts);
      c.expect(false, "persistent delay did not time out");
    } catch (const Error& ex) {
      c.expect(ex.kind() == ErrorKind::Timeout, std::string("expected Timeout, got ") + ex.what());
      passed += ex.kind() == ErrorKind::Timeout;
    }
  }
  const std::pair<mock::Fault, const char*> faults[] = {
      {mock::Fault::BadSum, "bad sum"},         {mock::Fault::WrongId, "wrong id"},
      {mock::Fault::MissingScores, "no scores"}, {mock::Fault::ShortScores, "short scores"},
      {mock::Fault::NotJson, "not json"},
  };
  for (const auto& [fault, name] : faults) {
    mock::Behaviour b;
    b.fault = fault;
    mock::MockScorer server(b);
    scorer::Endpoint e;
    e.address = server.address();
    e.timeout = std::chrono::milliseconds(2000);
    scorer::ScorerClient client(e);
    const std::vector<std::string> texts{"خبر"};
    try {
      client.score_batch(texts);
      c.expect(false, std::string(name) + " accepted");
    } catch (const Error& ex) {
      const bool ok = ex.kind() == ErrorKind::MalformedResponse && !ex.payload().empty();
      c.expect(ok, std::string(name) + ": " + ex.what());
      passed += ok;
    }
  }
  {
    mock::Behaviour b;
    b.protocol_version = "2.0";
    mock::MockScorer server(b);
    scorer::Endpoint e;
    e.address = server.address();
    scorer::ScorerClient client(e);
    try {
      client.handshake();
      c.expect(false, "major version mismatch accepted");
    } catch (const Error& ex) {
      c.expect(ex.kind() == ErrorKind::VersionIncompatible, ex.what());
      passed += ex.kind() == ErrorKind::VersionIncompatible;
    }
  }
  return c.result(std::to_string(passed) + " protocol checks passed against the mock");
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
  double limit_seconds;
};

const Criterion kCriteria[] = {
    {"split_arithmetic", split_arithmetic, 5},
    {"metric_consistency", metric_consistency, 1},
    {"tfidf_oracle", tfidf_oracle, 1},
    {"naive_bayes_oracle", naive_bayes_oracle, 1},
    {"mlp_gradient_check", mlp_gradient_check, 10},
    {"majority_vote_oracle", majority_vote_oracle, 5},
    {"dedup_guarantee", dedup_guarantee, 30},
    {"separable_benchmark", separable_benchmark, 120},
    {"determinism", determinism, 120},
    {"protocol_conformance", protocol_conformance, 60},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string wanted = argc > 1 ? argv[1] : "all";
  int failures = 0;
  bool found = false;
  for (const auto& c : kCriteria) {
    if (wanted != "all" && wanted != c.name) continue;
    found = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.passed && secs >= c.limit_seconds) {
      o.passed = false;
      o.detail += "; runtime over the " + fmt(c.limit_seconds, 0) + " s limit";
    }
    std::printf("%s %s (%.2f s): %s\n", o.passed ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    failures += !o.passed;
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion: %s\n", wanted.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
