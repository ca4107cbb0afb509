#include "infboost/loss.hpp"

#include <cmath>

#include "infboost/error.hpp"

namespace infboost {

namespace {

void check_inputs(const LossFunction& loss, const Dataset& dataset,
                  std::span<const double> scores) {
  if (scores.size() != dataset.n_samples()) {
    throw DataError("scores length " + std::to_string(scores.size()) +
                    " does not match n_samples " + std::to_string(dataset.n_samples()));
  }
  if (loss.kind == LossKind::pairwise_rank && !dataset.has_query_groups()) {
    throw DataError("pairwise_rank loss requires query groups");
  }
  if (loss.clip_threshold && !(*loss.clip_threshold > 0.0)) {
    throw ConfigError("clip threshold must be positive");
  }
}

// Calls fn(preferred, other) for every in-group pair with unequal grades.
template <typename Fn>
void for_each_ranked_pair(const Dataset& dataset, Fn&& fn) {
  const auto& groups = *dataset.query_groups();
  const auto grades = dataset.targets();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = groups.begin(g); i < groups.end(g); ++i) {
      for (std::size_t j = groups.begin(g); j < groups.end(g); ++j) {
        if (grades[i] > grades[j]) fn(i, j);
      }
    }
  }
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared_error: return "mse";
    case LossKind::logistic: return "logloss";
    case LossKind::pairwise_rank: return "rank";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse" || name == "squared_error") return LossKind::squared_error;
  if (name == "logloss" || name == "logistic") return LossKind::logistic;
  if (name == "rank" || name == "pairwise_rank") return LossKind::pairwise_rank;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected mse|logloss|rank)");
}

LossFunction LossFunction::with_defaults(LossKind kind) {
  LossFunction loss{kind, std::nullopt};
  if (kind != LossKind::logistic) loss.clip_threshold = 1e4;
  return loss;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

std::vector<double> negative_gradient(const LossFunction& loss, const Dataset& dataset,
                                      std::span<const double> scores) {
  check_inputs(loss, dataset, scores);
  const auto targets = dataset.targets();
  std::vector<double> gradient(scores.size(), 0.0);
  switch (loss.kind) {
    case LossKind::squared_error:
      for (std::size_t i = 0; i < scores.size(); ++i) gradient[i] = targets[i] - scores[i];
      break;
    case LossKind::logistic:
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const double y = signed_label(targets[i]);
        gradient[i] = y * sigmoid(-y * scores[i]);
      }
      break;
    case LossKind::pairwise_rank:
      for_each_ranked_pair(dataset, [&](std::size_t i, std::size_t j) {
        const double push = sigmoid(scores[j] - scores[i]);
        gradient[i] += push;
        gradient[j] -= push;
      });
      break;
  }
  if (loss.clip_threshold) return clip_gradient(gradient, *loss.clip_threshold);
  return gradient;
}

double loss_value(const LossFunction& loss, const Dataset& dataset,
                  std::span<const double> scores) {
  check_inputs(loss, dataset, scores);
  const auto targets = dataset.targets();
  double total = 0.0;
  switch (loss.kind) {
    case LossKind::squared_error:
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const double r = targets[i] - scores[i];
        total += 0.5 * r * r;
      }
      break;
    case LossKind::logistic:
      for (std::size_t i = 0; i < scores.size(); ++i) {
        total += softplus(-signed_label(targets[i]) * scores[i]);
      }
      break;
    case LossKind::pairwise_rank:
      for_each_ranked_pair(dataset, [&](std::size_t i, std::size_t j) {
        total += softplus(scores[j] - scores[i]);
      });
      break;
  }
  return total;
}

std::vector<double> clip_gradient(std::span<const double> gradient, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("clip threshold must be positive");
  std::vector<double> clipped(gradient.begin(), gradient.end());
  for (double& g : clipped) {
    if (std::abs(g) > threshold) g = std::copysign(threshold, g);
  }
  return clipped;
}

}  // namespace infboost
