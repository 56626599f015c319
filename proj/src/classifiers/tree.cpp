#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "lund/classifiers_detail.hpp"
#include "lund/util/parallel.hpp"

namespace lund::classifiers::detail {

namespace {

constexpr std::uint64_t kForestTag = 0x666f726573740001ULL;
constexpr double kMinGain = 1e-12;

struct Split {
  bool valid = false;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Gini impurity times sample count: 2 * fake * (n - fake) / n.
double weighted_gini(double n, double fake) {
  return n > 0 ? 2.0 * fake * (n - fake) / n : 0.0;
}

struct ColumnEntry {
  double value;
  bool fake;
};

// Best threshold on one feature. `column` holds the non-zero values present in
// the node; the remaining samples sit at an implicit zero.
Split best_split_on(std::uint32_t feature, std::vector<ColumnEntry>& column, double n,
                    double n_fake, double parent, std::size_t min_leaf) {
  Split best;
  std::sort(column.begin(), column.end(),
            [](const ColumnEntry& a, const ColumnEntry& b) { return a.value < b.value; });
  const double zeros = n - static_cast<double>(column.size());
  double zero_fake = n_fake;
  for (const auto& e : column) zero_fake -= e.fake ? 1.0 : 0.0;

  // Walk distinct values in ascending order, splicing the zero group in.
  double left_n = 0.0;
  double left_fake = 0.0;
  bool have_prev = false;
  double prev = 0.0;
  const double min_n = static_cast<double>(min_leaf);

  auto consider = [&](double next) {
    if (!have_prev) return;
    const double right_n = n - left_n;
    if (left_n < min_n || right_n < min_n) return;
    const double gain = parent - weighted_gini(left_n, left_fake) -
                        weighted_gini(right_n, n_fake - left_fake);
    if (gain > kMinGain && gain > best.gain) {
      double threshold = prev + (next - prev) / 2.0;
      if (!(threshold >= prev && threshold < next)) threshold = prev;
      best = Split{true, feature, threshold, gain};
    }
  };
  auto absorb = [&](double value, double count, double fake) {
    if (have_prev && value != prev) consider(value);
    left_n += count;
    left_fake += fake;
    prev = value;
    have_prev = true;
  };

  bool zero_done = zeros <= 0.0;
  for (const auto& e : column) {
    if (!zero_done && e.value > 0.0) {
      absorb(0.0, zeros, zero_fake);
      zero_done = true;
    }
    absorb(e.value, 1.0, e.fake ? 1.0 : 0.0);
  }
  if (!zero_done) absorb(0.0, zeros, zero_fake);
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeGrowth& growth, Rng& rng)
      : data_(data), growth_(growth), rng_(rng) {}

  TreeParams build(std::vector<std::uint32_t> samples) {
    TreeParams tree;
    tree.nodes.emplace_back();
    struct Task {
      std::uint32_t node;
      std::vector<std::uint32_t> samples;
      std::size_t depth;
    };
    std::vector<Task> stack;
    stack.push_back({0, std::move(samples), 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      const double n = static_cast<double>(task.samples.size());
      double fake = 0.0;
      for (auto s : task.samples) fake += data_.labels[s] == Label::Fake ? 1.0 : 0.0;
      tree.nodes[task.node].fake_fraction = n > 0 ? fake / n : 0.5;

      if (task.depth >= growth_.max_depth || fake == 0.0 || fake == n ||
          task.samples.size() < 2 * growth_.min_leaf)
        continue;
      const Split split = find_split(task.samples, n, fake);
      if (!split.valid) continue;

      std::vector<std::uint32_t> left, right;
      for (auto s : task.samples)
        (data_.vectors[s].get(split.feature) <= split.threshold ? left : right).push_back(s);

      const auto left_id = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      const auto right_id = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[task.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left_id;
      node.right = right_id;
      // Right pushed first so the left subtree is numbered first.
      stack.push_back({right_id, std::move(right), task.depth + 1});
      stack.push_back({left_id, std::move(left), task.depth + 1});
    }
    return tree;
  }

 private:
  Split find_split(const std::vector<std::uint32_t>& samples, double n, double fake) {
    std::unordered_map<std::uint32_t, std::vector<ColumnEntry>> columns;
    for (auto s : samples) {
      const bool is_fake = data_.labels[s] == Label::Fake;
      for (const auto& [id, w] : data_.vectors[s].entries()) columns[id].push_back({w, is_fake});
    }
    const double parent = weighted_gini(n, fake);
    Split best;
    auto evaluate = [&](std::uint32_t feature) {
      auto it = columns.find(feature);
      if (it == columns.end()) return;  // constant zero in this node
      const Split s = best_split_on(feature, it->second, n, fake, parent, growth_.min_leaf);
      if (s.valid && s.gain > best.gain) best = s;
    };

    if (growth_.features_per_split == 0 || growth_.features_per_split >= data_.dimension) {
      std::vector<std::uint32_t> present;
      present.reserve(columns.size());
      for (const auto& [id, _] : columns) present.push_back(id);
      std::sort(present.begin(), present.end());
      for (auto id : present) evaluate(id);
      return best;
    }

    // Lazy Fisher-Yates over [0, dimension): draw at least features_per_split
    // candidates, and keep drawing until a valid split appears.
    std::unordered_map<std::uint32_t, std::uint32_t> swapped;
    const auto d = static_cast<std::uint32_t>(data_.dimension);
    auto at = [&](std::uint32_t i) {
      auto it = swapped.find(i);
      return it == swapped.end() ? i : it->second;
    };
    for (std::uint32_t drawn = 0; drawn < d; ++drawn) {
      if (drawn >= growth_.features_per_split && best.valid) break;
      const auto j = drawn + static_cast<std::uint32_t>(rng_.below(d - drawn));
      const std::uint32_t feature = at(j);
      swapped[j] = at(drawn);
      evaluate(feature);
    }
    return best;
  }

  const Dataset& data_;
  const TreeGrowth& growth_;
  Rng& rng_;
};

TreeGrowth growth_of(const TrainConfig& config) {
  return TreeGrowth{config.max_depth, config.min_leaf, 0};
}

}  // namespace

TreeParams build_tree(const Dataset& data, std::vector<std::uint32_t> samples,
                      const TreeGrowth& growth, Rng& rng) {
  return TreeBuilder(data, growth, rng).build(std::move(samples));
}

double tree_fake_probability(const TreeParams& tree, const FeatureVector& x) {
  std::uint32_t at = 0;
  while (tree.nodes[at].feature >= 0) {
    const TreeNode& node = tree.nodes[at];
    at = x.get(static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left
                                                                            : node.right;
  }
  return tree.nodes[at].fake_fraction;
}

TreeParams train_decision_tree(const Dataset& data, const TrainConfig& config) {
  std::vector<std::uint32_t> samples(data.size());
  for (std::uint32_t i = 0; i < samples.size(); ++i) samples[i] = i;
  Rng rng(config.seed);
  return build_tree(data, std::move(samples), growth_of(config), rng);
}

ForestParams train_random_forest(const Dataset& data, const TrainConfig& config) {
  TreeGrowth growth = growth_of(config);
  if (config.feature_subsampling)
    growth.features_per_split = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.dimension))));
  ForestParams forest;
  forest.trees.resize(config.n_trees);
  const std::size_t n = data.size();
  parallel_for(config.n_trees, 1, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, kForestTag + t));
    std::vector<std::uint32_t> samples(n);
    for (std::uint32_t i = 0; i < n; ++i)
      samples[i] = config.bootstrap ? static_cast<std::uint32_t>(rng.below(n)) : i;
    forest.trees[t] = build_tree(data, std::move(samples), growth, rng);
  });
  return forest;
}

// Majority leaf vote: each tree casts its leaf's majority class (ties to
// Fake); the probability is the share of Fake votes.
double forest_fake_probability(const ForestParams& forest, const FeatureVector& x) {
  std::size_t fake = 0;
  for (const auto& tree : forest.trees) fake += tree_fake_probability(tree, x) >= 0.5;
  return forest.trees.empty() ? 0.5 : static_cast<double>(fake) / static_cast<double>(forest.trees.size());
}

}  // namespace lund::classifiers::detail
