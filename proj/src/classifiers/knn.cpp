#include <algorithm>
#include <numeric>

#include "lund/classifiers_detail.hpp"

namespace lund::classifiers::detail {

KnnParams train_knn(const Dataset& data, const TrainConfig& config) {
  return KnnParams{config.k, data.vectors, data.labels};
}

// Cosine similarity; a zero vector has similarity 0 to everything. Equal
// similarities are ordered by training index.
double knn_fake_probability(const KnnParams& p, const FeatureVector& x) {
  const std::size_t n = p.vectors.size();
  std::vector<double> sim(n, 0.0);
  if (x.norm() > 0)
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = x.norm() * p.vectors[i].norm();
      sim[i] = denom > 0 ? x.dot(p.vectors[i]) / denom : 0.0;
    }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min(p.k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sim[a] > sim[b] || (sim[a] == sim[b] && a < b);
                    });
  double fake = 0.0;
  for (std::size_t i = 0; i < k; ++i) fake += p.labels[order[i]] == Label::Fake ? 1.0 : 0.0;
  return k > 0 ? fake / static_cast<double>(k) : 0.5;
}

}  // namespace lund::classifiers::detail
