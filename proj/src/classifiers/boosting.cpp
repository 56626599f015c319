#include <algorithm>
#include <cmath>

#include "lund/classifiers_detail.hpp"

namespace lund::classifiers::detail {

namespace {

constexpr double kMinHessian = 1e-12;
constexpr int kMaxHalvings = 30;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double mean_log_loss(const std::vector<double>& f, const std::vector<double>& y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += softplus(f[i]) - y[i] * f[i];
  return sum / static_cast<double>(f.size());
}

struct Cell {
  double value;
  std::uint32_t sample;
};

struct StumpSplit {
  bool valid = false;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

}  // namespace

// Logistic-loss boosting of depth-one trees. Split search maximises the
// squared-residual reduction; leaf values take one Newton step, scaled by
// shrinkage and halved while the training loss would increase.
BoostParams train_boosting(const Dataset& data, const TrainConfig& config,
                           std::vector<double>* loss_history) {
  const std::size_t n = data.size();
  std::vector<double> y(n);
  double n_fake = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = data.labels[i] == Label::Fake ? 1.0 : 0.0;
    n_fake += y[i];
  }
  BoostParams params;
  params.base_score = std::log(n_fake / (static_cast<double>(n) - n_fake));

  std::vector<std::vector<Cell>> columns(data.dimension);
  for (std::uint32_t i = 0; i < n; ++i)
    for (const auto& [id, w] : data.vectors[i].entries()) columns[id].push_back({w, i});
  for (auto& col : columns)
    std::sort(col.begin(), col.end(), [](const Cell& a, const Cell& b) {
      return a.value < b.value || (a.value == b.value && a.sample < b.sample);
    });

  std::vector<double> f(n, params.base_score);
  std::vector<double> r(n), h(n), trial(n);
  double loss = mean_log_loss(f, y);
  if (loss_history) loss_history->push_back(loss);
  const double dn = static_cast<double>(n);
  const double min_n = static_cast<double>(config.min_leaf);

  for (std::size_t round = 0; round < config.boosting_rounds; ++round) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = logistic(f[i]);
      r[i] = y[i] - p;
      h[i] = p * (1.0 - p);
      total += r[i];
    }
    const double base = total * total / dn;

    StumpSplit best;
    for (std::uint32_t feature = 0; feature < columns.size(); ++feature) {
      const auto& col = columns[feature];
      if (col.empty()) continue;
      double nonzero_sum = 0.0;
      for (const auto& c : col) nonzero_sum += r[c.sample];
      const double zeros = dn - static_cast<double>(col.size());
      const double zero_sum = total - nonzero_sum;

      double left_n = 0.0, left_sum = 0.0, prev = 0.0;
      bool have_prev = false;
      auto consider = [&](double next) {
        if (!have_prev) return;
        const double right_n = dn - left_n;
        if (left_n < min_n || right_n < min_n) return;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / left_n + right_sum * right_sum / right_n - base;
        if (gain > 1e-15 && gain > best.gain) {
          double threshold = prev + (next - prev) / 2.0;
          if (!(threshold >= prev && threshold < next)) threshold = prev;
          best = StumpSplit{true, feature, threshold, gain};
        }
      };
      auto absorb = [&](double value, double count, double sum) {
        if (have_prev && value != prev) consider(value);
        left_n += count;
        left_sum += sum;
        prev = value;
        have_prev = true;
      };
      bool zero_done = zeros <= 0.0;
      for (const auto& c : col) {
        if (!zero_done && c.value > 0.0) {
          absorb(0.0, zeros, zero_sum);
          zero_done = true;
        }
        absorb(c.value, 1.0, r[c.sample]);
      }
      if (!zero_done) absorb(0.0, zeros, zero_sum);
    }
    if (!best.valid) break;

    std::vector<bool> goes_right(n, 0.0 > best.threshold);
    for (const auto& c : columns[best.feature]) goes_right[c.sample] = c.value > best.threshold;
    double g_l = 0.0, h_l = 0.0, g_r = 0.0, h_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (goes_right[i]) {
        g_r += r[i];
        h_r += h[i];
      } else {
        g_l += r[i];
        h_l += h[i];
      }
    }
    const double gamma_l = g_l / std::max(h_l, kMinHessian);
    const double gamma_r = g_r / std::max(h_r, kMinHessian);

    double step = config.shrinkage;
    bool accepted = false;
    double trial_loss = loss;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, step /= 2.0) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] + step * (goes_right[i] ? gamma_r : gamma_l);
      trial_loss = mean_log_loss(trial, y);
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    f.swap(trial);
    loss = trial_loss;
    params.stumps.push_back(Stump{best.feature, best.threshold, step * gamma_l, step * gamma_r});
    if (loss_history) loss_history->push_back(loss);
  }
  return params;
}

double boosting_score(const BoostParams& p, const FeatureVector& x) {
  double score = p.base_score;
  for (const auto& s : p.stumps)
    score += x.get(s.feature) <= s.threshold ? s.left_value : s.right_value;
  return score;
}

}  // namespace lund::classifiers::detail
