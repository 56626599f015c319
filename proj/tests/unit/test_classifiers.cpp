#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "lund/classifiers.hpp"
#include "lund/classifiers_detail.hpp"
#include "lund/error.hpp"
#include "lund/util/io.hpp"
#include "lund/util/rng.hpp"

using namespace lund;
using namespace lund::classifiers;
using features::FeatureVector;

namespace {

FeatureVector vec(std::vector<FeatureVector::Entry> e, std::uint64_t space = 0) {
  return FeatureVector::from_entries(std::move(e), space);
}

// Two Gaussian-free blobs split by x1 - x2, features at ids 1 and 2.
Dataset separable_2d(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.dimension = 3;
  for (std::size_t i = 0; i < n; ++i) {
    const bool fake = i % 2 == 0;
    const double a = 1.0 + rng.uniform();
    const double b = rng.uniform() * 0.5;
    d.vectors.push_back(fake ? vec({{1, a}, {2, b}}) : vec({{1, b}, {2, a}}));
    d.labels.push_back(fake ? Label::Fake : Label::Legit);
  }
  return d;
}

Dataset random_sparse(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.dimension = dim;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<FeatureVector::Entry> e;
    const bool fake = rng.below(2) == 1;
    for (int k = 0; k < 6; ++k) {
      const auto id = static_cast<std::uint32_t>(1 + rng.below(dim - 1));
      // Class signal in the low half of the ids.
      const bool signal = (id < dim / 2) == fake;
      e.emplace_back(id, rng.uniform() + (signal ? 1.0 : 0.1));
    }
    d.vectors.push_back(vec(e));
    d.labels.push_back(fake ? Label::Fake : Label::Legit);
  }
  return d;
}

TrainConfig small_config(Algorithm a) {
  TrainConfig c;
  c.algorithm = a;
  c.seed = 5;
  c.n_trees = 15;
  c.boosting_rounds = 30;
  c.hidden_units = 16;
  c.k = 3;
  return c;
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

}  // namespace

TEST_CASE("algorithm names") {
  for (auto a : kAllAlgorithms) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK(parse_algorithm("naive-bayes") == Algorithm::NaiveBayes);
  CHECK(parse_algorithm("RF") == Algorithm::RandomForest);
  CHECK_THROWS_AS(parse_algorithm("cnn"), std::invalid_argument);
}

TEST_CASE("train config JSON round trip and validation") {
  auto c = small_config(Algorithm::MLP);
  c.learning_rate = 0.05;
  const auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("single-class data gives a degenerate constant model") {
  Dataset d;
  d.dimension = 3;
  d.vectors = {vec({{1, 1.0}}), vec({{2, 1.0}})};
  d.labels = {Label::Legit, Label::Legit};
  for (auto a : kAllAlgorithms) {
    const auto m = train(d, small_config(a));
    CHECK(m.degenerate);
    const auto out = predict(m, vec({{2, 5.0}}));
    CHECK(out.predicted == Label::Legit);
    CHECK(out.prob(Label::Legit) == 1.0);
  }
}

TEST_CASE("training rejects empty and non-finite data") {
  Dataset empty;
  empty.dimension = 2;
  CHECK(kind_of([&] { train(empty, TrainConfig{}); }) == ErrorKind::EmptyCorpus);
  Dataset bad;
  bad.dimension = 3;
  bad.vectors = {vec({{1, 1.0}})};
  bad.labels = {Label::Fake, Label::Legit};
  CHECK_THROWS_AS(train(bad, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("naive bayes on the four-document toy problem") {
  // Counts: Fake docs {الف:1}, {الف:1}; Legit docs {ب:1}, {ب:1}. Ids 1, 2.
  Dataset d;
  d.dimension = 3;
  d.vectors = {vec({{1, 1}}), vec({{1, 1}}), vec({{2, 1}}), vec({{2, 1}})};
  d.labels = {Label::Fake, Label::Fake, Label::Legit, Label::Legit};
  const auto p = detail::train_naive_bayes(d, TrainConfig{});
  const auto F = index_of(Label::Fake);
  const auto L = index_of(Label::Legit);
  // Laplace with a two-term vocabulary: (count + 1) / (2 + 2).
  CHECK(std::abs(p.log_prob[F][1] - std::log(3.0 / 4.0)) < 1e-12);
  CHECK(std::abs(p.log_prob[F][2] - std::log(1.0 / 4.0)) < 1e-12);
  CHECK(std::abs(p.log_prob[L][2] - std::log(3.0 / 4.0)) < 1e-12);
  CHECK(std::abs(p.log_prior[F] - std::log(0.5)) < 1e-12);
  // "الف الف": P(Fake|x) = 0.5 * (3/4)^2 / (0.5 * (3/4)^2 + 0.5 * (1/4)^2) = 0.9.
  const double post = detail::naive_bayes_fake_probability(p, vec({{1, 2}}));
  CHECK(std::abs(post - 0.9) < 1e-12);
  const auto m = train(d, TrainConfig{});
  CHECK(predict(m, vec({{1, 2}})).predicted == Label::Fake);
}

TEST_CASE("naive bayes stays finite on very long documents") {
  Dataset d = random_sparse(40, 50, 3);
  const auto m = train(d, TrainConfig{});
  const auto out = predict(m, vec({{7, 1e4}, {30, 5e3}}));
  CHECK(std::isfinite(out.prob(Label::Fake)));
  CHECK(std::isfinite(out.prob(Label::Legit)));
  CHECK(out.prob(Label::Fake) + out.prob(Label::Legit) == doctest::Approx(1.0));
}

TEST_CASE("logistic regression separates a 2-feature set within 10 epochs") {
  const auto d = separable_2d(60, 1);
  auto c = small_config(Algorithm::LogisticRegression);
  c.epochs = 10;
  const auto m = train(d, c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += predict(m, d.vectors[i]).predicted == d.labels[i];
  CHECK(correct == d.size());
}

TEST_CASE("linear SVM separates the same set") {
  const auto d = separable_2d(60, 2);
  const auto m = train(d, small_config(Algorithm::LinearSVM));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += predict(m, d.vectors[i]).predicted == d.labels[i];
  CHECK(correct == d.size());
}

TEST_CASE("zero vector into a zero-bias linear model ties toward Fake") {
  TrainedModel m;
  m.algorithm = Algorithm::LogisticRegression;
  m.dimension = 3;
  m.params = LinearParams{{0.0, 1.0, -1.0}, 0.0};
  const auto out = predict(m, FeatureVector{});
  CHECK(out.prob(Label::Fake) == 0.5);
  CHECK(out.prob(Label::Legit) == 0.5);
  CHECK(out.predicted == Label::Fake);
}

TEST_CASE("knn with k=1 returns the nearest training vector's label") {
  const auto d = random_sparse(30, 20, 4);
  auto c = small_config(Algorithm::KNN);
  c.k = 1;
  const auto m = train(d, c);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto out = predict(m, d.vectors[i]);
    CHECK(out.predicted == d.labels[i]);
    CHECK(out.prob(d.labels[i]) == 1.0);
  }
}

TEST_CASE("knn prediction is invariant to positive scaling") {
  const auto d = random_sparse(50, 20, 5);
  const auto m = train(d, small_config(Algorithm::KNN));
  Dataset scaled = d;
  for (auto& v : scaled.vectors) v = v.scaled(7.5);
  const auto ms = train(scaled, small_config(Algorithm::KNN));
  const auto q = random_sparse(20, 20, 6);
  for (const auto& x : q.vectors) {
    CHECK(predict(m, x).predicted == predict(ms, x.scaled(0.01)).predicted);
  }
}

TEST_CASE("decision tree fits a threshold and respects min_leaf") {
  Dataset d;
  d.dimension = 2;
  for (int i = 0; i < 20; ++i) {
    d.vectors.push_back(vec({{1, static_cast<double>(i)}}));
    d.labels.push_back(i < 10 ? Label::Legit : Label::Fake);
  }
  const auto m = train(d, small_config(Algorithm::DecisionTree));
  const auto& tree = std::get<TreeParams>(m.params);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 1);
  CHECK(tree.nodes[0].threshold == 9.5);
  CHECK(predict(m, vec({{1, 3.0}})).predicted == Label::Legit);
  CHECK(predict(m, vec({{1, 12.0}})).predicted == Label::Fake);
}

TEST_CASE("random forest with one tree and no sampling reproduces the decision tree") {
  const auto d = random_sparse(80, 30, 7);
  auto rf = small_config(Algorithm::RandomForest);
  rf.n_trees = 1;
  rf.bootstrap = false;
  rf.feature_subsampling = false;
  const auto forest = train(d, rf);
  const auto tree = train(d, small_config(Algorithm::DecisionTree));
  const auto q = random_sparse(100, 30, 8);
  for (const auto& x : q.vectors) {
    const auto f = predict(forest, x);
    CHECK(f.predicted == predict(tree, x).predicted);
    // A single tree's vote is all or nothing.
    CHECK((f.prob(Label::Fake) == 0.0 || f.prob(Label::Fake) == 1.0));
  }
}

TEST_CASE("gradient boosting loss never increases") {
  const auto d = random_sparse(120, 30, 9);
  auto c = small_config(Algorithm::GradientBoosting);
  c.boosting_rounds = 50;
  std::vector<double> history;
  const auto p = detail::train_boosting(d, c, &history);
  REQUIRE(history.size() >= 2);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1]);
  CHECK(history.back() < history.front());
  CHECK(p.stumps.size() + 1 == history.size());
}

TEST_CASE("mlp analytic gradient matches finite differences") {
  const auto d = random_sparse(10, 8, 10);
  Rng rng(1);
  auto p = detail::init_mlp(d, 5, rng);
  for (double& b : p.b1) b = 0.1 * rng.normal();
  MlpParams g;
  const double l2 = 1e-3;
  detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, &g);
  auto check_block = [&](std::vector<double>& w, const std::vector<double>& gw) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w[k];
      w[k] = saved + 1e-5;
      const double up = detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, nullptr);
      w[k] = saved - 1e-5;
      const double down = detail::mlp_loss_and_gradient(p, d.vectors, d.labels, l2, nullptr);
      w[k] = saved;
      const double numeric = (up - down) / 2e-5;
      const double denom = std::max({std::abs(numeric), std::abs(gw[k]), 1e-8});
      CHECK(std::abs(numeric - gw[k]) / denom <= 1e-4);
    }
  };
  check_block(p.w1, g.w1);
  check_block(p.b1, g.b1);
  check_block(p.w2, g.w2);
  check_block(p.b2, g.b2);
}

TEST_CASE("every learner beats chance on a noisy sparse set and is deterministic") {
  const auto d = random_sparse(300, 40, 11);
  const auto q = random_sparse(100, 40, 12);
  for (auto a : kAllAlgorithms) {
    CAPTURE(to_string(a));
    const auto m1 = train(d, small_config(a));
    const auto m2 = train(d, small_config(a));
    CHECK(serialize_model(m1) == serialize_model(m2));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < q.size(); ++i) correct += predict(m1, q.vectors[i]).predicted == q.labels[i];
    CHECK(correct > 70);
  }
}

TEST_CASE("probabilities lie on the simplex") {
  const auto d = random_sparse(100, 30, 13);
  const auto q = random_sparse(30, 30, 14);
  for (auto a : kAllAlgorithms) {
    const auto m = train(d, small_config(a));
    for (const auto& x : q.vectors) {
      const auto out = predict(m, x);
      CHECK(out.prob(Label::Fake) + out.prob(Label::Legit) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(out.predicted == (out.prob(Label::Fake) >= out.prob(Label::Legit) ? Label::Fake : Label::Legit));
    }
  }
}

TEST_CASE("save and load reproduce predictions bit for bit") {
  const auto d = random_sparse(120, 30, 15);
  const auto q = random_sparse(100, 30, 16);
  const auto dir = testing::scratch_dir("model_io");
  for (auto a : kAllAlgorithms) {
    CAPTURE(to_string(a));
    const auto m = train(d, small_config(a), 0xabcdef);
    const auto path = dir / (std::string(to_string(a)) + ".bin");
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(back.algorithm == m.algorithm);
    CHECK(back.vocabulary_hash == 0xabcdef);
    CHECK(serialize_model(back) == serialize_model(m));
    for (const auto& x : q.vectors) CHECK(predict(back, x) == predict(m, x));
  }
}

TEST_CASE("truncated or corrupted model files are rejected") {
  const auto d = random_sparse(60, 20, 17);
  const auto bytes = serialize_model(train(d, TrainConfig{}));
  CHECK(kind_of([&] { deserialize_model(bytes.substr(0, bytes.size() - 9)); }) ==
        ErrorKind::CorruptModel);
  CHECK(kind_of([&] { deserialize_model(bytes.substr(0, 5)); }) == ErrorKind::CorruptModel);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK(kind_of([&] { deserialize_model(flipped); }) == ErrorKind::CorruptModel);
  CHECK(kind_of([&] { deserialize_model("NOTAMODEL-------"); }) == ErrorKind::CorruptModel);
}

TEST_CASE("a newer major format version is refused") {
  const auto d = random_sparse(60, 20, 18);
  auto m = train(d, TrainConfig{});
  m.version = "2.0";
  const auto bytes = serialize_model(m);
  CHECK(kind_of([&] { deserialize_model(bytes); }) == ErrorKind::VersionMismatch);
  m.version = "1.4";
  CHECK_NOTHROW(deserialize_model(serialize_model(m)));
}

TEST_CASE("vectors from another feature space are refused") {
  const auto d = random_sparse(60, 20, 19);
  const auto m = train(d, TrainConfig{}, 42);
  CHECK(kind_of([&] { predict(m, vec({{1, 1.0}}, 43)); }) == ErrorKind::VocabularyMismatch);
  CHECK(kind_of([&] { predict(m, vec({{25, 1.0}}, 42)); }) == ErrorKind::VocabularyMismatch);
  CHECK_NOTHROW(predict(m, vec({{1, 1.0}}, 42)));
  CHECK_NOTHROW(predict(m, vec({{1, 1.0}})));
}
