#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "lund/classifiers_detail.hpp"

namespace lund::classifiers::detail {

namespace {

constexpr std::uint64_t kInitTag = 0x6d6c700000000001ULL;
constexpr std::uint64_t kShuffleTag = 0x6d6c700000000002ULL;

struct Activations {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> hidden;  // ReLU output
  std::array<double, 2> probs{};
};

void forward(const MlpParams& p, const FeatureVector& x, Activations& a) {
  const std::size_t h = p.hidden;
  a.pre.assign(p.b1.begin(), p.b1.end());
  for (const auto& [id, w] : x.entries()) {
    const double* row = &p.w1[static_cast<std::size_t>(id) * h];
    for (std::size_t j = 0; j < h; ++j) a.pre[j] += w * row[j];
  }
  a.hidden.resize(h);
  std::array<double, 2> logits{p.b2[0], p.b2[1]};
  for (std::size_t j = 0; j < h; ++j) {
    a.hidden[j] = a.pre[j] > 0 ? a.pre[j] : 0.0;
    logits[0] += a.hidden[j] * p.w2[j * 2];
    logits[1] += a.hidden[j] * p.w2[j * 2 + 1];
  }
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  a.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

// Output-layer error and hidden-layer error for one example.
void backward(const MlpParams& p, const Activations& a, Label y, std::array<double, 2>& d_out,
              std::vector<double>& d_pre) {
  d_out = a.probs;
  d_out[index_of(y)] -= 1.0;
  d_pre.resize(p.hidden);
  for (std::size_t j = 0; j < p.hidden; ++j)
    d_pre[j] = a.pre[j] > 0 ? p.w2[j * 2] * d_out[0] + p.w2[j * 2 + 1] * d_out[1] : 0.0;
}

}  // namespace

// Hidden weights are drawn so a unit-norm input yields unit-variance
// pre-activations, independent of the input dimension.
MlpParams init_mlp(const Dataset& data, std::size_t hidden, Rng& rng) {
  MlpParams p;
  p.input = data.dimension;
  p.hidden = hidden;
  double sq = 0.0;
  for (const auto& v : data.vectors) sq += v.norm() * v.norm();
  const double mean_sq = data.size() > 0 ? sq / static_cast<double>(data.size()) : 1.0;
  const double sigma1 = 1.0 / std::sqrt(std::max(mean_sq, 1e-12));
  const double sigma2 = std::sqrt(2.0 / static_cast<double>(hidden));
  p.w1.resize(p.input * hidden);
  for (double& w : p.w1) w = sigma1 * rng.normal();
  p.b1.assign(hidden, 0.0);
  p.w2.resize(hidden * 2);
  for (double& w : p.w2) w = sigma2 * rng.normal();
  p.b2.assign(2, 0.0);
  return p;
}

std::array<double, 2> mlp_forward(const MlpParams& p, const FeatureVector& x) {
  Activations a;
  forward(p, x, a);
  return a.probs;
}

double mlp_loss_and_gradient(const MlpParams& p, std::span<const FeatureVector> xs,
                             std::span<const Label> ys, double l2, MlpParams* grad) {
  const std::size_t h = p.hidden;
  if (grad) {
    grad->input = p.input;
    grad->hidden = h;
    grad->w1.assign(p.w1.size(), 0.0);
    grad->b1.assign(h, 0.0);
    grad->w2.assign(p.w2.size(), 0.0);
    grad->b2.assign(2, 0.0);
  }
  const double inv_b = xs.empty() ? 0.0 : 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  Activations a;
  std::array<double, 2> d_out{};
  std::vector<double> d_pre;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    forward(p, xs[i], a);
    loss -= std::log(std::max(a.probs[index_of(ys[i])], 1e-300));
    if (!grad) continue;
    backward(p, a, ys[i], d_out, d_pre);
    for (std::size_t j = 0; j < h; ++j) {
      grad->w2[j * 2] += a.hidden[j] * d_out[0] * inv_b;
      grad->w2[j * 2 + 1] += a.hidden[j] * d_out[1] * inv_b;
      grad->b1[j] += d_pre[j] * inv_b;
    }
    grad->b2[0] += d_out[0] * inv_b;
    grad->b2[1] += d_out[1] * inv_b;
    for (const auto& [id, w] : xs[i].entries())
      for (std::size_t j = 0; j < h; ++j)
        grad->w1[static_cast<std::size_t>(id) * h + j] += w * d_pre[j] * inv_b;
  }
  loss *= inv_b;
  double sq = 0.0;
  for (double w : p.w1) sq += w * w;
  for (double w : p.w2) sq += w * w;
  loss += 0.5 * l2 * sq;
  if (grad) {
    for (std::size_t k = 0; k < p.w1.size(); ++k) grad->w1[k] += l2 * p.w1[k];
    for (std::size_t k = 0; k < p.w2.size(); ++k) grad->w2[k] += l2 * p.w2[k];
  }
  return loss;
}

namespace {

// Adam moments for one parameter block.
struct Moments {
  std::vector<double> m, v;
  explicit Moments(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

// One AdamW step on w[k] with gradient g; `decay` is the decoupled
// weight-decay factor (1 for biases).
inline void adam_step(double& w, double g, double& m, double& v, double lr_t, double decay) {
  m = kBeta1 * m + (1 - kBeta1) * g;
  v = kBeta2 * v + (1 - kBeta2) * g * g;
  w = decay * w - lr_t * m / (std::sqrt(v) + kEps);
}

}  // namespace

// Mini-batch backpropagation with AdamW on the cross-entropy part of the
// mlp_loss_and_gradient objective; L2 is applied as decoupled weight decay.
// Input-layer rows (and their moments) are updated only where the batch has
// non-zero features, so sparse inputs cost O(nnz * hidden) per step.
MlpParams train_mlp(const Dataset& data, const TrainConfig& config) {
  Rng init_rng(derive_seed(config.seed, kInitTag));
  MlpParams p = init_mlp(data, config.hidden_units, init_rng);
  const std::size_t h = p.hidden;
  const std::size_t n = data.size();
  const double lr = config.learning_rate;
  const double decay = 1.0 - lr * config.l2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, kShuffleTag));

  Moments mw1(p.w1.size()), mb1(h), mw2(p.w2.size()), mb2(2);
  Activations a;
  std::array<double, 2> d_out{};
  std::vector<double> d_pre;
  std::vector<double> g_w2(h * 2), g_b1(h);
  std::array<double, 2> g_b2{};
  std::unordered_map<std::uint32_t, std::size_t> row_slot;
  std::vector<std::uint32_t> rows;
  std::vector<double> g_rows;
  double beta1_t = 1.0, beta2_t = 1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(g_w2.begin(), g_w2.end(), 0.0);
      std::fill(g_b1.begin(), g_b1.end(), 0.0);
      g_b2 = {0.0, 0.0};
      row_slot.clear();
      rows.clear();
      g_rows.clear();

      for (std::size_t t = start; t < end; ++t) {
        const std::size_t i = order[t];
        forward(p, data.vectors[i], a);
        backward(p, a, data.labels[i], d_out, d_pre);
        for (std::size_t j = 0; j < h; ++j) {
          g_w2[j * 2] += a.hidden[j] * d_out[0];
          g_w2[j * 2 + 1] += a.hidden[j] * d_out[1];
          g_b1[j] += d_pre[j];
        }
        g_b2[0] += d_out[0];
        g_b2[1] += d_out[1];
        for (const auto& [id, w] : data.vectors[i].entries()) {
          auto [it, inserted] = row_slot.try_emplace(id, rows.size());
          if (inserted) {
            rows.push_back(id);
            g_rows.resize(g_rows.size() + h, 0.0);
          }
          double* g = &g_rows[it->second * h];
          for (std::size_t j = 0; j < h; ++j) g[j] += w * d_pre[j];
        }
      }

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const double lr_t = lr * std::sqrt(1 - beta2_t) / (1 - beta1_t);
      for (std::size_t k = 0; k < g_w2.size(); ++k)
        adam_step(p.w2[k], g_w2[k] * inv_b, mw2.m[k], mw2.v[k], lr_t, decay);
      for (std::size_t j = 0; j < h; ++j) adam_step(p.b1[j], g_b1[j] * inv_b, mb1.m[j], mb1.v[j], lr_t, 1.0);
      for (std::size_t c = 0; c < 2; ++c) adam_step(p.b2[c], g_b2[c] * inv_b, mb2.m[c], mb2.v[c], lr_t, 1.0);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t base = static_cast<std::size_t>(rows[r]) * h;
        const double* g = &g_rows[r * h];
        for (std::size_t j = 0; j < h; ++j)
          adam_step(p.w1[base + j], g[j] * inv_b, mw1.m[base + j], mw1.v[base + j], lr_t, decay);
      }
    }
  }
  return p;
}

}  // namespace lund::classifiers::detail
