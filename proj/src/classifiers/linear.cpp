#include <algorithm>
#include <cmath>
#include <numeric>

#include "lund/classifiers_detail.hpp"

namespace lund::classifiers::detail {

namespace {

constexpr std::uint64_t kShuffleTag = 0x6c696e6561720001ULL;

enum class Loss { Logistic, Hinge };

// Mini-batch gradient descent on mean loss + (l2 / 2) |w|^2. The weight vector
// is stored as scale * v so the dense decay step costs O(1); batch updates
// touch only the stored entries of the batch.
LinearParams fit(const Dataset& data, const TrainConfig& config, Loss loss) {
  const std::size_t n = data.size();
  const std::size_t d = data.dimension;
  std::vector<double> v(d, 0.0);
  double scale = 1.0;
  double bias = 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, kShuffleTag));

  std::vector<double> grad(d, 0.0);
  std::vector<std::uint32_t> touched;
  const double lr = config.learning_rate;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      double grad_bias = 0.0;
      touched.clear();
      for (std::size_t t = start; t < end; ++t) {
        const std::size_t i = order[t];
        const auto& x = data.vectors[i];
        double z = bias;
        for (const auto& [id, w] : x.entries()) z += scale * v[id] * w;
        double g = 0.0;
        if (loss == Loss::Logistic) {
          const double y = data.labels[i] == Label::Fake ? 1.0 : 0.0;
          g = logistic(z) - y;
        } else {
          const double y = data.labels[i] == Label::Fake ? 1.0 : -1.0;
          g = y * z < 1.0 ? -y : 0.0;
        }
        if (g == 0.0) continue;
        grad_bias += g;
        for (const auto& [id, w] : x.entries()) {
          if (grad[id] == 0.0) touched.push_back(id);
          grad[id] += g * w;
        }
      }
      scale *= 1.0 - lr * config.l2;
      for (std::uint32_t id : touched) {
        v[id] -= lr * grad[id] * inv_b / scale;
        grad[id] = 0.0;
      }
      bias -= lr * grad_bias * inv_b;
      if (scale < 1e-9) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }
  }
  LinearParams p;
  p.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j) p.weights[j] = v[j] * scale;
  p.bias = bias;
  return p;
}

}  // namespace

LinearParams train_logistic(const Dataset& data, const TrainConfig& config) {
  return fit(data, config, Loss::Logistic);
}

LinearParams train_linear_svm(const Dataset& data, const TrainConfig& config) {
  return fit(data, config, Loss::Hinge);
}

double linear_score(const LinearParams& p, const FeatureVector& x) {
  return p.bias + x.dot(std::span<const double>(p.weights));
}

}  // namespace lund::classifiers::detail
