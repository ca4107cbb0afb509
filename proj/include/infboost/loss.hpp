#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infboost/data.hpp"

namespace infboost {

enum class LossKind { squared_error, logistic, pairwise_rank };

// CLI spelling: mse, logloss, rank.
std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct LossFunction {
  LossKind kind = LossKind::squared_error;
  // Gradients with larger magnitude are clamped to +-clip_threshold.
  std::optional<double> clip_threshold;

  // Default clipping: off for logistic, 1e4 otherwise.
  static LossFunction with_defaults(LossKind kind);
};

// Classification targets are read as {0,1} or {-1,+1}; positive means +1.
inline double signed_label(double target) { return target > 0.0 ? 1.0 : -1.0; }

// Squared error uses L = (y - F)^2 / 2, logistic L = log(1 + exp(-yF)) with
// y in {-1,+1}, pairwise_rank sums log(1 + exp(F_j - F_i)) over in-group
// pairs where grade_i > grade_j.
std::vector<double> negative_gradient(const LossFunction& loss, const Dataset& dataset,
                                      std::span<const double> scores);

double loss_value(const LossFunction& loss, const Dataset& dataset,
                  std::span<const double> scores);

std::vector<double> clip_gradient(std::span<const double> gradient, double threshold);

double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace infboost
