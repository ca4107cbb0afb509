#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "infboost/data.hpp"
#include "infboost/ensemble.hpp"
#include "infboost/loss.hpp"
#include "infboost/random.hpp"
#include "infboost/tree.hpp"

namespace infboost {

// Distance of the training scores from the stationary equation z = c * T(z),
// where T(z) is the expected tree output when fitting the negative gradient
// at z. T(z) is estimated by averaging independently fitted probe trees that
// are not added to any ensemble.
struct FixedPointReport {
  double residual_norm = 0.0;  // ||z - c * T_hat(z)||_2
  std::size_t n_probe_trees = 0;
  double z_norm = 0.0;
  double capacity = 0.0;
};

FixedPointReport fixed_point_residual(const Ensemble& ensemble, const Dataset& dataset,
                                      std::size_t n_probe_trees, Rng& rng,
                                      std::size_t threads = 1);

// Lower-level form used during training: scores are given and the learner's
// presorted dataset is reused.
FixedPointReport fixed_point_residual(const TreeLearner& learner, const LossFunction& loss,
                                      const TreeConfig& tree_config,
                                      std::span<const double> scores, double capacity,
                                      std::size_t n_probe_trees, Rng& rng,
                                      std::size_t threads = 1);

// ||z||^2 / 2 + c * sum_i L(y_i, z_i)
double regularized_objective(const Dataset& dataset, std::span<const double> scores,
                             double capacity, const LossFunction& loss);

struct TraceRow {
  std::size_t iteration = 0;
  double residual = 0.0;
  double objective = 0.0;
  double capacity = 0.0;
};

// Trains an infinite-mode ensemble, probing every `probe_every` iterations.
std::vector<TraceRow> convergence_trace(const BoostConfig& config, const Dataset& dataset,
                                        std::size_t probe_every, std::size_t n_probe_trees);

// Header "iteration,residual,objective,capacity", LF line endings.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

}  // namespace infboost
