#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infboost/data.hpp"
#include "infboost/random.hpp"

namespace infboost {

struct TreeConfig {
  // nullopt means unlimited depth; 0 yields a single leaf.
  std::optional<int> max_depth = 7;
  double subsample = 0.7;
  double max_features = 0.7;
  std::size_t min_samples_leaf = 1;
  // Rows drawn with replacement (n draws) instead of subsampling.
  bool bootstrap = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flat binary regression tree. A node is a leaf iff feature < 0.
// Routing: left iff x[feature] <= threshold.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
  };

  DecisionTree() = default;
  DecisionTree(std::vector<Node> nodes, std::size_t n_features);

  // Throws DataError on dimension mismatch.
  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Dataset& dataset) const;

  // predict() without the dimension check.
  double predict_unchecked(const double* row) const {
    const Node* node = &nodes_[0];
    while (!node->is_leaf()) {
      node = &nodes_[row[node->feature] <= node->threshold ? node->left : node->right];
    }
    return node->value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_leaves() const;
  // Longest root-to-leaf path, in edges.
  std::size_t max_depth_used() const;

  static DecisionTree constant(double value, std::size_t n_features);

 private:
  std::vector<Node> nodes_;
  std::size_t n_features_ = 0;
};

// Variance-reduction learner over a fixed dataset. Per-feature sort orders are
// computed once and reused by every fit; fits are const and thread-safe.
class TreeLearner {
 public:
  explicit TreeLearner(const Dataset& dataset);

  // Draws rows (subsample without replacement, or bootstrap), then grows the
  // tree depth-first. At every node a fresh set of ceil(max_features * d)
  // features is drawn; among valid splits the one maximising the reduction of
  // the count-weighted sum of squared deviations wins, ties going to the lowest
  // feature index and then the lowest threshold. Leaf value is the mean of the
  // pseudo-targets reaching it.
  DecisionTree fit(std::span<const double> pseudo_targets, const TreeConfig& config,
                   Rng& rng) const;

  const Dataset& dataset() const { return dataset_; }

 private:
  const Dataset& dataset_;
  // Column-major copy of the features.
  std::vector<double> columns_;
  // sorted_[f] is the row order by (feature f value, row index).
  std::vector<std::vector<std::uint32_t>> sorted_;
};

DecisionTree fit_tree(const Dataset& dataset, std::span<const double> pseudo_targets,
                      const TreeConfig& config, Rng& rng);
// Same, with a stream seeded from config.seed.
DecisionTree fit_tree(const Dataset& dataset, std::span<const double> pseudo_targets,
                      const TreeConfig& config);

// Per-row multiplicities for one tree: subsampling gives 0/1 counts, bootstrap
// gives multinomial counts summing to n.
std::vector<std::uint32_t> draw_row_counts(std::size_t n_samples, const TreeConfig& config,
                                           Rng& rng);

}  // namespace infboost
