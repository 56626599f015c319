#pragma once

#include <array>
#include <cmath>

#include "lund/corpus.hpp"

namespace lund {

// Class probabilities from one predictor. probs is indexed by index_of(Label);
// predicted is the argmax with ties going to Fake.
struct PredictorOutput {
  std::array<double, 2> probs{0.5, 0.5};
  Label predicted = Label::Fake;

  double prob(Label l) const { return probs[index_of(l)]; }

  static PredictorOutput from_fake_probability(double p_fake) {
    PredictorOutput out;
    out.probs[index_of(Label::Fake)] = p_fake;
    out.probs[index_of(Label::Legit)] = 1.0 - p_fake;
    out.predicted = p_fake >= 1.0 - p_fake ? Label::Fake : Label::Legit;
    return out;
  }

  static PredictorOutput from_probs(double p_legit, double p_fake) {
    PredictorOutput out;
    out.probs[index_of(Label::Legit)] = p_legit;
    out.probs[index_of(Label::Fake)] = p_fake;
    out.predicted = p_fake >= p_legit ? Label::Fake : Label::Legit;
    return out;
  }

  bool operator==(const PredictorOutput&) const = default;
};

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace lund
