#include "infboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "infboost/error.hpp"

namespace infboost {

void TreeConfig::validate() const {
  if (max_depth && *max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (!(max_features > 0.0 && max_features <= 1.0)) {
    throw ConfigError("max_features must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
}

DecisionTree::DecisionTree(std::vector<Node> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw DataError("tree has no nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (!std::isfinite(node.value)) throw NumericError("non-finite leaf value");
      continue;
    }
    if (static_cast<std::size_t>(node.feature) >= n_features_ || node.left <= 0 ||
        node.right <= 0 || node.left >= n || node.right >= n) {
      throw DataError("tree node references out of range");
    }
  }
}

DecisionTree DecisionTree::constant(double value, std::size_t n_features) {
  Node leaf;
  leaf.value = value;
  return DecisionTree({leaf}, n_features);
}

double DecisionTree::predict(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw DataError("tree expects " + std::to_string(n_features_) + " features, got " +
                    std::to_string(row.size()));
  }
  return predict_unchecked(row.data());
}

std::vector<double> DecisionTree::predict(const Dataset& dataset) const {
  if (dataset.n_features() != n_features_) {
    throw DataError("tree expects " + std::to_string(n_features_) + " features, got " +
                    std::to_string(dataset.n_features()));
  }
  std::vector<double> out(dataset.n_samples());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_unchecked(dataset.row(i).data());
  return out;
}

std::size_t DecisionTree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::max_depth_used() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [index, depth] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[index];
    if (node.is_leaf()) {
      deepest = std::max(deepest, depth);
    } else {
      stack.emplace_back(node.left, depth + 1);
      stack.emplace_back(node.right, depth + 1);
    }
  }
  return deepest;
}

std::vector<std::uint32_t> draw_row_counts(std::size_t n_samples, const TreeConfig& config,
                                           Rng& rng) {
  std::vector<std::uint32_t> counts(n_samples, 0);
  if (config.bootstrap) {
    for (std::size_t draw = 0; draw < n_samples; ++draw) ++counts[rng.uniform_index(n_samples)];
    return counts;
  }
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.subsample * n_samples + 1e-9)));
  if (k >= n_samples) {
    std::fill(counts.begin(), counts.end(), 1u);
    return counts;
  }
  for (auto i : rng.sample_without_replacement(n_samples, k)) counts[i] = 1;
  return counts;
}

TreeLearner::TreeLearner(const Dataset& dataset)
    : dataset_(dataset),
      columns_(dataset.n_samples() * dataset.n_features()),
      sorted_(dataset.n_features()) {
  const std::size_t n = dataset.n_samples();
  const std::size_t d = dataset.n_features();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DataError("too many samples");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) columns_[f * n + i] = dataset.feature(i, f);
  }
  for (std::size_t f = 0; f < d; ++f) {
    const double* column = &columns_[f * n];
    auto& order = sorted_[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [column](std::uint32_t a, std::uint32_t b) { return column[a] < column[b]; });
  }
}

namespace {

// Scores within this relative distance count as ties. Splits of different
// features that induce the same partition accumulate their sums in different
// orders and may differ in the last bits.
constexpr double kTieTolerance = 1e-12;

struct SplitCandidate {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::size_t left_size = 0;  // rows (not weight) in the left child
  double score = -std::numeric_limits<double>::infinity();
};

class Builder {
 public:
  Builder(const Dataset& dataset, const std::vector<double>& columns,
          std::span<const double> targets, std::vector<std::uint32_t> counts,
          const std::vector<std::vector<std::uint32_t>>& sorted, const TreeConfig& config,
          Rng& rng)
      : n_(dataset.n_samples()),
        d_(dataset.n_features()),
        columns_(columns),
        targets_(targets),
        counts_(std::move(counts)),
        config_(config),
        rng_(rng),
        goes_left_(n_, 0) {
    orders_.resize(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      orders_[f].reserve(n_);
      for (auto row : sorted[f]) {
        if (counts_[row] > 0) orders_[f].push_back(row);
      }
    }
    buffer_.resize(orders_[0].size());
    const double scaled = config_.max_features * static_cast<double>(d_);
    features_per_node_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(scaled - 1e-9)), 1, d_);
  }

  std::vector<DecisionTree::Node> build() {
    grow(0, orders_[0].size(), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, int depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    double weight = 0.0;
    double sum = 0.0;
    bool pure = true;
    const double first = targets_[orders_[0][begin]];
    for (std::size_t p = begin; p < end; ++p) {
      const auto row = orders_[0][p];
      weight += counts_[row];
      sum += counts_[row] * targets_[row];
      pure = pure && targets_[row] == first;
    }
    nodes_[index].value = pure ? first : sum / weight;

    const bool depth_reached = config_.max_depth && depth >= *config_.max_depth;
    if (pure || depth_reached || weight < 2.0 * config_.min_samples_leaf) return index;

    const auto split = find_split(begin, end, weight, sum);
    if (split.feature < 0) return index;

    partition(begin, end, split);
    const auto left = grow(begin, begin + split.left_size, depth + 1);
    const auto right = grow(begin + split.left_size, end, depth + 1);
    auto& node = nodes_[index];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  std::vector<std::size_t> draw_features() {
    if (features_per_node_ >= d_) {
      std::vector<std::size_t> all(d_);
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
    auto chosen = rng_.sample_without_replacement(d_, features_per_node_);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  SplitCandidate find_split(std::size_t begin, std::size_t end, double weight, double sum) {
    SplitCandidate best;
    const double min_leaf = static_cast<double>(config_.min_samples_leaf);
    for (const auto f : draw_features()) {
      const double* column = &columns_[f * n_];
      const auto& order = orders_[f];
      double left_weight = 0.0;
      double left_sum = 0.0;
      for (std::size_t p = begin; p + 1 < end; ++p) {
        const auto row = order[p];
        left_weight += counts_[row];
        left_sum += counts_[row] * targets_[row];
        const double x = column[row];
        const double next = column[order[p + 1]];
        if (!(x < next)) continue;
        const double right_weight = weight - left_weight;
        if (left_weight < min_leaf || right_weight < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double score =
            left_sum * left_sum / left_weight + right_sum * right_sum / right_weight;
        if (best.feature < 0 || score > best.score + kTieTolerance * best.score) {
          double threshold = x / 2.0 + next / 2.0;
          if (!(threshold < next)) threshold = x;
          best = {static_cast<std::int32_t>(f), threshold, p + 1 - begin, score};
        }
      }
    }
    return best;
  }

  void partition(std::size_t begin, std::size_t end, const SplitCandidate& split) {
    const auto& chosen = orders_[split.feature];
    for (std::size_t p = begin; p < end; ++p) goes_left_[chosen[p]] = p < begin + split.left_size;
    for (auto& order : orders_) {
      std::size_t left = begin;
      std::size_t right = 0;
      for (std::size_t p = begin; p < end; ++p) {
        const auto row = order[p];
        if (goes_left_[row]) {
          order[left++] = row;
        } else {
          buffer_[right++] = row;
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + right, order.begin() + left);
    }
  }

  std::size_t n_;
  std::size_t d_;
  const std::vector<double>& columns_;
  std::span<const double> targets_;
  std::vector<std::uint32_t> counts_;
  const TreeConfig& config_;
  Rng& rng_;
  std::size_t features_per_node_ = 1;
  std::vector<std::vector<std::uint32_t>> orders_;
  std::vector<std::uint32_t> buffer_;
  std::vector<char> goes_left_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

DecisionTree TreeLearner::fit(std::span<const double> pseudo_targets, const TreeConfig& config,
                              Rng& rng) const {
  config.validate();
  if (pseudo_targets.size() != dataset_.n_samples()) {
    throw DataError("pseudo-targets length " + std::to_string(pseudo_targets.size()) +
                    " does not match n_samples " + std::to_string(dataset_.n_samples()));
  }
  for (double t : pseudo_targets) {
    if (!std::isfinite(t)) throw NumericError("non-finite pseudo-target");
  }
  auto counts = draw_row_counts(dataset_.n_samples(), config, rng);
  Builder builder(dataset_, columns_, pseudo_targets, std::move(counts), sorted_, config, rng);
  return DecisionTree(builder.build(), dataset_.n_features());
}

DecisionTree fit_tree(const Dataset& dataset, std::span<const double> pseudo_targets,
                      const TreeConfig& config, Rng& rng) {
  return TreeLearner(dataset).fit(pseudo_targets, config, rng);
}

DecisionTree fit_tree(const Dataset& dataset, std::span<const double> pseudo_targets,
                      const TreeConfig& config) {
  Rng rng(config.seed);
  return fit_tree(dataset, pseudo_targets, config, rng);
}

}  // namespace infboost
