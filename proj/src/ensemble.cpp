#include "infboost/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infboost/error.hpp"
#include "infboost/parallel.hpp"

namespace infboost {

namespace {

// Stream ids for the per-iteration generators.
constexpr std::uint64_t kTreeStream = 0;
constexpr std::uint64_t kNoiseStream = 1ULL << 40;
constexpr std::uint64_t kHoldoutStream = 1ULL << 41;

bool is_infinite(Mode mode) { return mode == Mode::infinite || mode == Mode::infinite_adaptive; }

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
  }
}

void check_dimensions(const Ensemble& ensemble, std::size_t n_features) {
  if (n_features != ensemble.n_features) {
    throw DataError("model expects " + std::to_string(ensemble.n_features) +
                    " features, data has " + std::to_string(n_features));
  }
}

// Aggregates the first `count` trees for one row; shared by predict and
// staged_predict so both produce identical bits.
struct RowAccumulator {
  double numerator = 0.0;
  double denominator = 0.0;

  void add(const Ensemble& e, std::size_t k, double value) {
    if (e.mode == Mode::gb || e.mode == Mode::forest) {
      numerator += value;
    } else {
      numerator += e.weights[k] * value;
      denominator += e.weights[k];
    }
  }

  double result(const Ensemble& e, std::size_t count, double capacity) const {
    if (count == 0) return 0.0;
    switch (e.mode) {
      case Mode::gb: return e.shrinkage * numerator;
      case Mode::forest: return numerator / static_cast<double>(count);
      default: return denominator > 0.0 ? capacity * (numerator / denominator) : 0.0;
    }
  }
};

double capacity_at(const Ensemble& e, std::size_t count) {
  if (!e.capacity_trace.empty() && count >= 1 && count <= e.capacity_trace.size()) {
    return e.capacity_trace[count - 1];
  }
  return e.capacity;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::gb: return "gb";
    case Mode::infinite: return "infinite";
    case Mode::infinite_adaptive: return "infinite-adaptive";
    case Mode::forest: return "forest";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  if (name == "gb") return Mode::gb;
  if (name == "infinite") return Mode::infinite;
  if (name == "infinite-adaptive" || name == "infinite_adaptive") return Mode::infinite_adaptive;
  if (name == "forest") return Mode::forest;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected gb|infinite|infinite-adaptive|forest)");
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::uniform ? "uniform" : "linear";
}

Weighting parse_weighting(std::string_view name) {
  if (name == "uniform") return Weighting::uniform;
  if (name == "linear") return Weighting::linear;
  throw ConfigError("unknown weighting '" + std::string(name) + "' (expected uniform|linear)");
}

BoostConfig BoostConfig::defaults_for(Mode mode) {
  BoostConfig config;
  config.mode = mode;
  if (mode == Mode::forest) {
    config.tree.max_depth = std::nullopt;
    config.tree.bootstrap = true;
  }
  return config;
}

void BoostConfig::validate() const {
  tree.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("noise_sigma must be a finite value >= 0");
  }
  switch (mode) {
    case Mode::gb:
      if (!shrinkage) throw ConfigError("gb mode requires shrinkage (--shrinkage)");
      if (!(*shrinkage > 0.0)) throw ConfigError("shrinkage must be positive");
      if (capacity) throw ConfigError("capacity (--capacity) does not apply to gb mode");
      break;
    case Mode::infinite:
      if (!capacity) throw ConfigError("infinite mode requires capacity (--capacity)");
      if (!(*capacity > 0.0)) throw ConfigError("capacity must be positive");
      if (shrinkage) throw ConfigError("shrinkage (--shrinkage) does not apply to infinite mode");
      break;
    case Mode::infinite_adaptive:
      if (capacity) {
        throw ConfigError(
            "capacity (--capacity) does not apply to infinite-adaptive mode; it starts at 0.5");
      }
      if (shrinkage) {
        throw ConfigError("shrinkage (--shrinkage) does not apply to infinite-adaptive mode");
      }
      if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw ConfigError("holdout fraction must lie in (0, 1)");
      }
      break;
    case Mode::forest:
      if (capacity) throw ConfigError("capacity (--capacity) does not apply to forest mode");
      if (shrinkage) throw ConfigError("shrinkage (--shrinkage) does not apply to forest mode");
      break;
  }
}

LossFunction BoostConfig::loss_function() const {
  auto fn = LossFunction::with_defaults(loss);
  if (clip_threshold) {
    fn.clip_threshold = *clip_threshold > 0.0 ? clip_threshold : std::nullopt;
  }
  return fn;
}

void Ensemble::validate() const {
  if (weights.size() != trees.size()) throw DataError("weights length does not match trees");
  if (!capacity_trace.empty() && capacity_trace.size() != trees.size()) {
    throw DataError("capacity trace length does not match trees");
  }
  if (n_features == 0) throw DataError("ensemble has no features");
  for (const auto& tree : trees) {
    if (tree.n_features() != n_features) throw DataError("tree feature count mismatch");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("tree weights must be finite and >= 0");
  }
  if (!std::isfinite(capacity) || capacity < 0.0) throw DataError("invalid capacity");
  if (!std::isfinite(shrinkage) || shrinkage <= 0.0) throw DataError("invalid shrinkage");
}

double eta_schedule(Weighting weighting, std::size_t m) {
  if (m < 1) throw ConfigError("iteration must be >= 1");
  const auto mm = static_cast<double>(m);
  return weighting == Weighting::uniform ? 1.0 / mm : 2.0 / (mm + 1.0);
}

double tree_weight(Weighting weighting, std::size_t m) {
  return weighting == Weighting::uniform ? 1.0 : static_cast<double>(m);
}

double effective_capacity(double capacity, double eta) { return std::min(capacity, 1.0 / eta); }

double adapt_capacity(double capacity, std::size_t m, int sign) {
  const auto mm = static_cast<double>(m);
  double next = capacity;
  if (sign > 0) next = capacity * (mm + 1.0) / mm;
  if (sign < 0) next = capacity * mm / (mm + 1.0);
  return std::clamp(next, kMinAdaptiveCapacity, kMaxAdaptiveCapacity);
}

int holdout_capacity_sign(const LossFunction& loss, const Dataset& holdout,
                          std::span<const double> scores) {
  const auto gradient = negative_gradient(loss, holdout, scores);
  double correlation = 0.0;
  for (std::size_t i = 0; i < gradient.size(); ++i) correlation += gradient[i] * scores[i];
  return (correlation > 0.0) - (correlation < 0.0);
}

Trainer::Parts Trainer::partition(const Dataset& dataset, const BoostConfig& config) {
  config.validate();
  Parts parts;
  if (config.mode == Mode::infinite_adaptive) {
    auto split = split_holdout(dataset, config.holdout_fraction,
                               splitmix64(config.seed ^ kHoldoutStream));
    parts.train = dataset.subset(split.train_indices);
    parts.holdout = dataset.subset(split.holdout_indices);
    parts.split = std::move(split);
  }
  return parts;
}

Trainer::Trainer(const Dataset& dataset, BoostConfig config)
    : config_(std::move(config)),
      loss_(config_.loss_function()),
      parts_(partition(dataset, config_)),
      train_(parts_.train ? &*parts_.train : &dataset),
      learner_(*train_) {
  if (loss_.kind == LossKind::pairwise_rank && !train_->has_query_groups()) {
    throw DataError("rank loss requires query groups (load with ranking enabled)");
  }
  state_.z.assign(train_->n_samples(), 0.0);
  state_.holdout = parts_.split;
  if (is_infinite(config_.mode)) average_.assign(train_->n_samples(), 0.0);
  if (parts_.holdout) {
    holdout_average_.assign(parts_.holdout->n_samples(), 0.0);
    holdout_z_.assign(parts_.holdout->n_samples(), 0.0);
  }

  ensemble_.mode = config_.mode;
  ensemble_.loss = config_.loss;
  ensemble_.clip_threshold = loss_.clip_threshold;
  ensemble_.weighting = config_.weighting;
  ensemble_.tree_config = config_.tree;
  ensemble_.n_features = dataset.n_features();
  switch (config_.mode) {
    case Mode::gb:
      ensemble_.shrinkage = *config_.shrinkage;
      break;
    case Mode::infinite:
      ensemble_.initial_capacity = ensemble_.capacity = *config_.capacity;
      break;
    case Mode::infinite_adaptive:
      ensemble_.initial_capacity = ensemble_.capacity = kAdaptiveInitialCapacity;
      break;
    case Mode::forest:
      break;
  }
}

std::vector<double> Trainer::pseudo_targets() {
  const auto targets = train_->targets();
  if (config_.mode == Mode::forest) {
    std::vector<double> raw(targets.begin(), targets.end());
    if (config_.loss == LossKind::logistic) {
      for (double& y : raw) y = y > 0.0 ? 1.0 : 0.0;
    }
    return raw;
  }
  if (config_.noise_sigma > 0.0) {
    auto noise_rng = Rng::derive(config_.seed, kNoiseStream + state_.m);
    std::vector<double> noisy(state_.z);
    for (double& v : noisy) v += config_.noise_sigma * noise_rng.normal();
    return negative_gradient(loss_, *train_, noisy);
  }
  return negative_gradient(loss_, *train_, state_.z);
}

void Trainer::step() {
  const std::size_t m = state_.m + 1;
  const auto targets = pseudo_targets();
  auto rng = Rng::derive(config_.seed, kTreeStream + m);
  DecisionTree tree = learner_.fit(targets, config_.tree, rng);
  const std::size_t n = train_->n_samples();

  switch (config_.mode) {
    case Mode::gb: {
      for (std::size_t i = 0; i < n; ++i) {
        state_.z[i] += config_.shrinkage.value() * tree.predict_unchecked(train_->row(i).data());
      }
      ensemble_.weights.push_back(1.0);
      break;
    }
    case Mode::forest: {
      const double eta = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) {
        state_.z[i] = (1.0 - eta) * state_.z[i] +
                      eta * tree.predict_unchecked(train_->row(i).data());
      }
      ensemble_.weights.push_back(1.0);
      break;
    }
    case Mode::infinite:
    case Mode::infinite_adaptive: {
      const double eta = eta_schedule(config_.weighting, m);
      const double base = config_.mode == Mode::infinite ? *config_.capacity : adaptive_capacity_;
      const double capacity = effective_capacity(base, eta);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = tree.predict_unchecked(train_->row(i).data());
        average_[i] = (1.0 - eta) * average_[i] + eta * t;
        state_.z[i] = capacity * average_[i];
      }
      if (parts_.holdout) {
        const auto& holdout = *parts_.holdout;
        for (std::size_t i = 0; i < holdout.n_samples(); ++i) {
          const double t = tree.predict_unchecked(holdout.row(i).data());
          holdout_average_[i] = (1.0 - eta) * holdout_average_[i] + eta * t;
          holdout_z_[i] = capacity * holdout_average_[i];
        }
        const int sign = holdout_capacity_sign(loss_, holdout, holdout_z_);
        adaptive_capacity_ = adapt_capacity(adaptive_capacity_, m, sign);
      }
      ensemble_.weights.push_back(tree_weight(config_.weighting, m));
      ensemble_.capacity = capacity;
      ensemble_.capacity_trace.push_back(capacity);
      state_.capacity_trace.push_back(capacity);
      break;
    }
  }
  ensemble_.trees.push_back(std::move(tree));
  state_.m = m;
  check_finite(state_.z, "training scores");
}

Ensemble train_gradient_boosting(const Dataset& dataset, const BoostConfig& config) {
  if (config.mode != Mode::gb) throw ConfigError("train_gradient_boosting requires gb mode");
  return train(dataset, config);
}

Ensemble train_infiniteboost(const Dataset& dataset, const BoostConfig& config) {
  if (config.mode != Mode::infinite) throw ConfigError("train_infiniteboost requires infinite mode");
  return train(dataset, config);
}

Ensemble train_infiniteboost_adaptive(const Dataset& dataset, const BoostConfig& config) {
  if (config.mode != Mode::infinite_adaptive) {
    throw ConfigError("train_infiniteboost_adaptive requires infinite-adaptive mode");
  }
  return train(dataset, config);
}

Ensemble train_random_forest(const Dataset& dataset, const BoostConfig& config) {
  if (config.mode != Mode::forest) throw ConfigError("train_random_forest requires forest mode");
  return train(dataset, config);
}

Ensemble train(const Dataset& dataset, const BoostConfig& config) {
  Trainer trainer(dataset, config);
  trainer.run();
  return std::move(trainer).release();
}

double predict_row(const Ensemble& ensemble, std::span<const double> row) {
  check_dimensions(ensemble, row.size());
  RowAccumulator acc;
  for (std::size_t k = 0; k < ensemble.trees.size(); ++k) {
    acc.add(ensemble, k, ensemble.trees[k].predict_unchecked(row.data()));
  }
  return acc.result(ensemble, ensemble.trees.size(), ensemble.capacity);
}

std::vector<double> predict(const Ensemble& ensemble, const Dataset& dataset,
                            std::size_t threads) {
  check_dimensions(ensemble, dataset.n_features());
  std::vector<double> out(dataset.n_samples(), 0.0);
  parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = predict_row(ensemble, dataset.row(i));
  });
  check_finite(out, "predictions");
  return out;
}

std::vector<double> predict_proba(const Ensemble& ensemble, const Dataset& dataset,
                                  std::size_t threads) {
  if (ensemble.loss != LossKind::logistic) {
    throw ConfigError("probabilities are only defined for logloss models");
  }
  auto scores = predict(ensemble, dataset, threads);
  if (ensemble.mode != Mode::forest) {
    for (double& s : scores) s = sigmoid(s);
  }
  return scores;
}

std::vector<StagedPrediction> staged_predict(const Ensemble& ensemble, const Dataset& dataset,
                                             std::size_t step) {
  if (step < 1) throw ConfigError("step must be >= 1");
  check_dimensions(ensemble, dataset.n_features());
  const std::size_t total = ensemble.trees.size();
  std::vector<std::size_t> checkpoints;
  for (std::size_t k = step; k <= total; k += step) checkpoints.push_back(k);
  if (total > 0 && (checkpoints.empty() || checkpoints.back() != total)) {
    checkpoints.push_back(total);
  }

  std::vector<StagedPrediction> stages;
  for (auto k : checkpoints) stages.push_back({k, std::vector<double>(dataset.n_samples())});
  for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
    const double* row = dataset.row(i).data();
    RowAccumulator acc;
    std::size_t next = 0;
    for (std::size_t k = 0; k < total && next < stages.size(); ++k) {
      acc.add(ensemble, k, ensemble.trees[k].predict_unchecked(row));
      if (k + 1 == stages[next].iteration) {
        const bool full = k + 1 == total;
        const double capacity = full ? ensemble.capacity : capacity_at(ensemble, k + 1);
        stages[next].predictions[i] = acc.result(ensemble, k + 1, capacity);
        ++next;
      }
    }
  }
  return stages;
}

}  // namespace infboost
