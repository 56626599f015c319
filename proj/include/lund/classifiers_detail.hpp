#pragma once

// Per-algorithm trainers and internals, exposed for tests.

#include <span>
#include <vector>

#include "lund/classifiers.hpp"
#include "lund/util/rng.hpp"

namespace lund::classifiers::detail {

NaiveBayesParams train_naive_bayes(const Dataset& data, const TrainConfig& config);
double naive_bayes_fake_probability(const NaiveBayesParams& p, const FeatureVector& x);

LinearParams train_logistic(const Dataset& data, const TrainConfig& config);
LinearParams train_linear_svm(const Dataset& data, const TrainConfig& config);
double linear_score(const LinearParams& p, const FeatureVector& x);

struct TreeGrowth {
  std::size_t max_depth = 20;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0 = every feature
};
TreeParams build_tree(const Dataset& data, std::vector<std::uint32_t> samples,
                      const TreeGrowth& growth, Rng& rng);
double tree_fake_probability(const TreeParams& tree, const FeatureVector& x);
TreeParams train_decision_tree(const Dataset& data, const TrainConfig& config);
ForestParams train_random_forest(const Dataset& data, const TrainConfig& config);
double forest_fake_probability(const ForestParams& forest, const FeatureVector& x);

// `loss_history`, when given, receives the mean logistic loss before the
// first round and after every round.
BoostParams train_boosting(const Dataset& data, const TrainConfig& config,
                           std::vector<double>* loss_history = nullptr);
double boosting_score(const BoostParams& p, const FeatureVector& x);

KnnParams train_knn(const Dataset& data, const TrainConfig& config);
double knn_fake_probability(const KnnParams& p, const FeatureVector& x);

MlpParams init_mlp(const Dataset& data, std::size_t hidden, Rng& rng);
// Softmax output probabilities, indexed by index_of(Label).
std::array<double, 2> mlp_forward(const MlpParams& p, const FeatureVector& x);
// Mean cross-entropy over the batch plus (l2 / 2) * (|w1|^2 + |w2|^2).
// When `grad` is non-null it receives the gradient with the same layout.
double mlp_loss_and_gradient(const MlpParams& p, std::span<const FeatureVector> xs,
                             std::span<const Label> ys, double l2, MlpParams* grad);
MlpParams train_mlp(const Dataset& data, const TrainConfig& config);

}  // namespace lund::classifiers::detail
