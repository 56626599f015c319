#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lund/corpus.hpp"
#include "lund/features.hpp"
#include "lund/prediction.hpp"

namespace lund::classifiers {

using features::FeatureVector;

inline constexpr std::string_view kModelFormatVersion = "1.0";

enum class Algorithm {
  KNN,
  LinearSVM,
  DecisionTree,
  RandomForest,
  LogisticRegression,
  NaiveBayes,
  GradientBoosting,
  MLP,
};

inline constexpr std::array<Algorithm, 8> kAllAlgorithms{
    Algorithm::KNN,          Algorithm::LinearSVM,          Algorithm::DecisionTree,
    Algorithm::RandomForest, Algorithm::LogisticRegression, Algorithm::NaiveBayes,
    Algorithm::GradientBoosting, Algorithm::MLP};

// Short names: knn, svm, dt, rf, lr, nb, gb, mlp.
std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

struct Dataset {
  std::vector<FeatureVector> vectors;
  std::vector<Label> labels;
  std::size_t dimension = 0;

  // Throws std::invalid_argument on size mismatch or out-of-range ids.
  void validate() const;
  std::size_t size() const { return vectors.size(); }
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::NaiveBayes;
  std::uint64_t seed = 0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double l2 = 1e-4;
  double nb_alpha = 1.0;
  std::size_t k = 5;
  std::size_t max_depth = 20;
  std::size_t min_leaf = 2;
  std::size_t n_trees = 100;
  bool bootstrap = true;
  bool feature_subsampling = true;  // sqrt(d) candidate features per split
  std::size_t boosting_rounds = 200;
  double shrinkage = 0.1;
  std::size_t hidden_units = 128;

  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct NaiveBayesParams {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_prob;  // per class, per feature
};

struct LinearParams {
  std::vector<double> weights;
  double bias = 0.0;
};

struct TreeNode {
  std::int64_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double fake_fraction = 0.0;
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
  std::vector<TreeParams> trees;
};

struct Stump {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double left_value = 0.0;
  double right_value = 0.0;
};

struct BoostParams {
  double base_score = 0.0;  // initial log-odds of Fake
  std::vector<Stump> stumps;
};

struct KnnParams {
  std::size_t k = 5;
  std::vector<FeatureVector> vectors;
  std::vector<Label> labels;
};

struct MlpParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // input x hidden, row per input feature
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden x 2
  std::vector<double> b2;  // 2
};

// Single-class training data: always predicts `label` with probability 1.
struct ConstantParams {
  Label label = Label::Fake;
};

using Parameters = std::variant<NaiveBayesParams, LinearParams, TreeParams, ForestParams,
                                BoostParams, KnnParams, MlpParams, ConstantParams>;

struct TrainedModel {
  Algorithm algorithm = Algorithm::NaiveBayes;
  std::string version{kModelFormatVersion};
  std::uint64_t vocabulary_hash = 0;
  std::size_t dimension = 0;
  TrainConfig config;
  bool degenerate = false;
  Parameters params;
};

// Deterministic given config.seed. A single-class dataset yields a model
// flagged `degenerate` that always predicts that class.
// Throws Error(NonFiniteFeature) for NaN/inf features.
TrainedModel train(const Dataset& dataset, const TrainConfig& config,
                   std::uint64_t vocabulary_hash = 0);

// Throws Error(VocabularyMismatch) when the vector carries a different
// feature-space tag or ids beyond the model's dimension.
PredictorOutput predict(const TrainedModel& model, const FeatureVector& vector);

// Binary format: "LUNDMDL1", u32 LE header length, JSON header, u64 LE value
// count, little-endian f64 payload, u32 LE CRC-32 of all preceding bytes.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace lund::classifiers
