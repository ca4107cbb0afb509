#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "infboost/data.hpp"
#include "infboost/loss.hpp"
#include "infboost/tree.hpp"

namespace infboost {

enum class Mode { gb, infinite, infinite_adaptive, forest };
enum class Weighting { uniform, linear };

// CLI spelling: gb, infinite, infinite-adaptive, forest.
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);
std::string_view to_string(Weighting weighting);
Weighting parse_weighting(std::string_view name);

inline constexpr double kAdaptiveInitialCapacity = 0.5;
inline constexpr double kMinAdaptiveCapacity = 1e-4;
inline constexpr double kMaxAdaptiveCapacity = 1e4;

struct BoostConfig {
  Mode mode = Mode::infinite;
  LossKind loss = LossKind::squared_error;
  std::size_t n_trees = 100;
  std::optional<double> shrinkage;  // gb only
  std::optional<double> capacity;   // infinite only
  Weighting weighting = Weighting::linear;
  double holdout_fraction = 0.05;   // infinite_adaptive only
  std::uint64_t seed = 0;
  TreeConfig tree;
  // nullopt selects the loss default; a value <= 0 disables clipping.
  std::optional<double> clip_threshold;
  // Standard deviation of Gaussian noise added to the scores before each
  // gradient evaluation (boosting modes). 0 disables.
  double noise_sigma = 0.0;
  std::size_t threads = 1;

  // Forest mode defaults: unlimited depth, bootstrap rows.
  static BoostConfig defaults_for(Mode mode);

  // Throws ConfigError naming missing or conflicting parameters.
  void validate() const;

  LossFunction loss_function() const;
};

// Ordered trees with per-tree weights and a mode-specific aggregation:
//   gb:        shrinkage * sum_k tree_k(x)
//   infinite*: capacity * sum_k w_k tree_k(x) / sum_k w_k
//   forest:    mean_k tree_k(x)
struct Ensemble {
  Mode mode = Mode::infinite;
  LossKind loss = LossKind::squared_error;
  std::optional<double> clip_threshold;
  double shrinkage = 1.0;
  // Capacity applied by predict(); for trained infinite ensembles this is the
  // last entry of capacity_trace.
  double capacity = 1.0;
  double initial_capacity = 1.0;
  Weighting weighting = Weighting::linear;
  TreeConfig tree_config;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> weights;
  // Infinite modes: capacity in effect after iteration k (index k - 1).
  std::vector<double> capacity_trace;

  std::size_t size() const { return trees.size(); }
  // Throws DataError when the fields are inconsistent.
  void validate() const;
};

// Step size of the incremental update: uniform -> 1/m, linear -> 2/(m+1).
double eta_schedule(Weighting weighting, std::size_t m);
// Tree weight implied by the schedule: uniform -> 1, linear -> m.
double tree_weight(Weighting weighting, std::size_t m);
// min(c, 1/eta): caps a single tree's multiplier eta * c at one.
double effective_capacity(double capacity, double eta);
// c * ((m+1)/m)^sign, clamped to [kMinAdaptiveCapacity, kMaxAdaptiveCapacity].
double adapt_capacity(double capacity, std::size_t m, int sign);
// sign(sum_i negative_gradient_i * score_i) on the holdout; 0 when the sum is 0.
int holdout_capacity_sign(const LossFunction& loss, const Dataset& holdout,
                          std::span<const double> scores);

struct TrainState {
  std::vector<double> z;  // ensemble scores on training rows
  std::size_t m = 0;
  std::vector<double> capacity_trace;
  std::optional<HoldoutSplit> holdout;
};

// Step-wise trainer for all four modes. For infinite modes the weighted
// average of tree outputs is maintained incrementally,
//   avg <- (1 - eta_m) avg + eta_m tree_m,   z = c_eff * avg,
// which reproduces the direct weighted-average prediction of the ensemble.
class Trainer {
 public:
  Trainer(const Dataset& dataset, BoostConfig config);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  void step();
  void run() {
    while (state_.m < config_.n_trees) step();
  }

  const BoostConfig& config() const { return config_; }
  const TrainState& state() const { return state_; }
  std::size_t iteration() const { return state_.m; }
  std::span<const double> train_scores() const { return state_.z; }
  std::span<const double> holdout_scores() const { return holdout_z_; }
  // Rows the trees are fit on (the train side in adaptive mode).
  const Dataset& train_data() const { return *train_; }
  const Dataset* holdout_data() const { return parts_.holdout ? &*parts_.holdout : nullptr; }
  const TreeLearner& learner() const { return learner_; }
  const LossFunction& loss() const { return loss_; }
  // Capacity multiplying the current average (infinite modes).
  double capacity_in_effect() const { return ensemble_.capacity; }
  // Adaptive capacity that the next iteration starts from.
  double adaptive_capacity() const { return adaptive_capacity_; }
  const Ensemble& ensemble() const { return ensemble_; }
  Ensemble release() && { return std::move(ensemble_); }

 private:
  struct Parts {
    std::optional<HoldoutSplit> split;
    std::optional<Dataset> train;
    std::optional<Dataset> holdout;
  };
  static Parts partition(const Dataset& dataset, const BoostConfig& config);
  std::vector<double> pseudo_targets();

  BoostConfig config_;
  LossFunction loss_;
  Parts parts_;
  const Dataset* train_;
  TreeLearner learner_;
  TrainState state_;
  std::vector<double> average_;
  std::vector<double> holdout_average_;
  std::vector<double> holdout_z_;
  double adaptive_capacity_ = kAdaptiveInitialCapacity;
  Ensemble ensemble_;
};

Ensemble train_gradient_boosting(const Dataset& dataset, const BoostConfig& config);
Ensemble train_infiniteboost(const Dataset& dataset, const BoostConfig& config);
Ensemble train_infiniteboost_adaptive(const Dataset& dataset, const BoostConfig& config);
Ensemble train_random_forest(const Dataset& dataset, const BoostConfig& config);
// Dispatches on config.mode.
Ensemble train(const Dataset& dataset, const BoostConfig& config);

// Throws DataError on feature-count mismatch. Empty ensembles predict 0.
std::vector<double> predict(const Ensemble& ensemble, const Dataset& dataset,
                            std::size_t threads = 1);
double predict_row(const Ensemble& ensemble, std::span<const double> row);
// Logistic models: sigmoid of the score (forest scores are already averaged
// {0,1} leaf means and are returned unchanged).
std::vector<double> predict_proba(const Ensemble& ensemble, const Dataset& dataset,
                                  std::size_t threads = 1);

struct StagedPrediction {
  std::size_t iteration;
  std::vector<double> predictions;
};

// Predictions of the first k trees for k = step, 2*step, ..., plus the full
// ensemble when its size is not a multiple of step.
std::vector<StagedPrediction> staged_predict(const Ensemble& ensemble, const Dataset& dataset,
                                             std::size_t step);

}  // namespace infboost
