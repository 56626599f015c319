#include <cmath>
#include <stdexcept>
#include <string>

#include "lund/classifiers.hpp"
#include "lund/classifiers_detail.hpp"
#include "lund/error.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/utf8.hpp"

namespace lund::classifiers {

namespace {

struct AlgorithmName {
  Algorithm algorithm;
  std::string_view short_name;
  std::string_view long_name;
};

constexpr std::array<AlgorithmName, 8> kNames{{
    {Algorithm::KNN, "knn", "k-nearest-neighbours"},
    {Algorithm::LinearSVM, "svm", "linear-svm"},
    {Algorithm::DecisionTree, "dt", "decision-tree"},
    {Algorithm::RandomForest, "rf", "random-forest"},
    {Algorithm::LogisticRegression, "lr", "logistic-regression"},
    {Algorithm::NaiveBayes, "nb", "naive-bayes"},
    {Algorithm::GradientBoosting, "gb", "gradient-boosting"},
    {Algorithm::MLP, "mlp", "multilayer-perceptron"},
}};

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  for (const auto& n : kNames)
    if (n.algorithm == algorithm) return n.short_name;
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string key = utf8::ascii_lower(utf8::trim(name));
  for (const auto& n : kNames)
    if (key == n.short_name || key == n.long_name) return n.algorithm;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

void Dataset::validate() const {
  if (vectors.size() != labels.size())
    throw std::invalid_argument("dataset has " + std::to_string(vectors.size()) +
                                " vectors but " + std::to_string(labels.size()) + " labels");
  for (const auto& v : vectors)
    if (!v.empty() && v.max_id() >= dimension)
      throw std::invalid_argument("feature id " + std::to_string(v.max_id()) +
                                  " outside dimension " + std::to_string(dimension));
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate > 0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(l2 >= 0 && std::isfinite(l2), "l2 must be non-negative");
  require(nb_alpha > 0 && std::isfinite(nb_alpha), "nb_alpha must be positive");
  require(k > 0, "k must be positive");
  require(max_depth > 0, "max_depth must be positive");
  require(min_leaf > 0, "min_leaf must be positive");
  require(n_trees > 0, "n_trees must be positive");
  require(boosting_rounds > 0, "boosting_rounds must be positive");
  require(shrinkage > 0 && shrinkage <= 1, "shrinkage must be in (0, 1]");
  require(hidden_units > 0, "hidden_units must be positive");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["l2"] = c.l2;
  j["nb_alpha"] = c.nb_alpha;
  j["k"] = c.k;
  j["max_depth"] = c.max_depth;
  j["min_leaf"] = c.min_leaf;
  j["n_trees"] = c.n_trees;
  j["bootstrap"] = c.bootstrap;
  j["feature_subsampling"] = c.feature_subsampling;
  j["boosting_rounds"] = c.boosting_rounds;
  j["shrinkage"] = c.shrinkage;
  j["hidden_units"] = c.hidden_units;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.l2 = j.value("l2", c.l2);
  c.nb_alpha = j.value("nb_alpha", c.nb_alpha);
  c.k = j.value("k", c.k);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_leaf = j.value("min_leaf", c.min_leaf);
  c.n_trees = j.value("n_trees", c.n_trees);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.feature_subsampling = j.value("feature_subsampling", c.feature_subsampling);
  c.boosting_rounds = j.value("boosting_rounds", c.boosting_rounds);
  c.shrinkage = j.value("shrinkage", c.shrinkage);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.validate();
  return c;
}

TrainedModel train(const Dataset& dataset, const TrainConfig& config,
                   std::uint64_t vocabulary_hash) {
  config.validate();
  dataset.validate();
  if (dataset.size() == 0) throw Error(ErrorKind::EmptyCorpus, "no training examples");
  for (const auto& v : dataset.vectors)
    for (const auto& [id, w] : v.entries())
      if (!std::isfinite(w))
        throw Error(ErrorKind::NonFiniteFeature, "non-finite training feature",
                    std::to_string(id));

  TrainedModel model;
  model.algorithm = config.algorithm;
  model.vocabulary_hash = vocabulary_hash;
  model.dimension = dataset.dimension;
  model.config = config;

  std::array<std::size_t, 2> counts{};
  for (Label l : dataset.labels) ++counts[index_of(l)];
  if (counts[0] == 0 || counts[1] == 0) {
    model.degenerate = true;
    model.params = ConstantParams{counts[0] == 0 ? Label::Fake : Label::Legit};
    return model;
  }

  using namespace detail;
  switch (config.algorithm) {
    case Algorithm::NaiveBayes: model.params = train_naive_bayes(dataset, config); break;
    case Algorithm::LogisticRegression: model.params = train_logistic(dataset, config); break;
    case Algorithm::LinearSVM: model.params = train_linear_svm(dataset, config); break;
    case Algorithm::DecisionTree: model.params = train_decision_tree(dataset, config); break;
    case Algorithm::RandomForest: model.params = train_random_forest(dataset, config); break;
    case Algorithm::GradientBoosting: model.params = train_boosting(dataset, config); break;
    case Algorithm::KNN: model.params = train_knn(dataset, config); break;
    case Algorithm::MLP: model.params = train_mlp(dataset, config); break;
  }
  return model;
}

PredictorOutput predict(const TrainedModel& model, const FeatureVector& x) {
  if (x.space() != 0 && model.vocabulary_hash != 0 && x.space() != model.vocabulary_hash)
    throw Error(ErrorKind::VocabularyMismatch, "feature vector from a different feature space",
                to_hex(x.space()));
  if (!x.empty() && x.max_id() >= model.dimension)
    throw Error(ErrorKind::VocabularyMismatch,
                "feature id " + std::to_string(x.max_id()) + " outside model dimension " +
                    std::to_string(model.dimension));

  using namespace detail;
  return std::visit(
      [&](const auto& p) -> PredictorOutput {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantParams>) {
          return PredictorOutput::from_fake_probability(p.label == Label::Fake ? 1.0 : 0.0);
        } else if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return PredictorOutput::from_fake_probability(naive_bayes_fake_probability(p, x));
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          return PredictorOutput::from_fake_probability(logistic(linear_score(p, x)));
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          return PredictorOutput::from_fake_probability(tree_fake_probability(p, x));
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return PredictorOutput::from_fake_probability(forest_fake_probability(p, x));
        } else if constexpr (std::is_same_v<P, BoostParams>) {
          return PredictorOutput::from_fake_probability(logistic(boosting_score(p, x)));
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          return PredictorOutput::from_fake_probability(knn_fake_probability(p, x));
        } else {
          const auto probs = mlp_forward(p, x);
          return PredictorOutput::from_probs(probs[0], probs[1]);
        }
      },
      model.params);
}

}  // namespace lund::classifiers
