#include <algorithm>
#include <cmath>

#include "lund/classifiers_detail.hpp"

namespace lund::classifiers::detail {

// Multinomial model with additive smoothing over ids 1..d-1. Id 0 is the
// reserved unknown-term slot: it is not part of the vocabulary, is never
// smoothed and contributes nothing at prediction time. Negative weights carry
// no count mass and are treated as zero.
NaiveBayesParams train_naive_bayes(const Dataset& data, const TrainConfig& config) {
  const std::size_t d = data.dimension;
  const double alpha = config.nb_alpha;
  std::array<std::vector<double>, 2> mass{std::vector<double>(d, 0.0),
                                          std::vector<double>(d, 0.0)};
  std::array<double, 2> total{};
  std::array<double, 2> docs{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = index_of(data.labels[i]);
    docs[c] += 1.0;
    for (const auto& [id, w] : data.vectors[i].entries()) {
      if (id == 0) continue;
      const double v = std::max(w, 0.0);
      mass[c][id] += v;
      total[c] += v;
    }
  }
  NaiveBayesParams p;
  const double n = docs[0] + docs[1];
  for (std::size_t c = 0; c < 2; ++c) {
    p.log_prior[c] = std::log(docs[c] / n);
    const double vocab = d > 0 ? static_cast<double>(d - 1) : 0.0;
    const double denom = std::log(total[c] + alpha * vocab);
    p.log_prob[c].assign(d, 0.0);
    for (std::size_t j = 1; j < d; ++j) p.log_prob[c][j] = std::log(mass[c][j] + alpha) - denom;
  }
  return p;
}

double naive_bayes_fake_probability(const NaiveBayesParams& p, const FeatureVector& x) {
  std::array<double, 2> score = p.log_prior;
  for (const auto& [id, w] : x.entries()) {
    const double v = std::max(w, 0.0);
    if (v == 0.0 || id == 0) continue;
    score[0] += v * p.log_prob[0][id];
    score[1] += v * p.log_prob[1][id];
  }
  // Posterior of Fake = 1 / (1 + exp(score_legit - score_fake)).
  return logistic(score[index_of(Label::Fake)] - score[index_of(Label::Legit)]);
}

}  // namespace lund::classifiers::detail
