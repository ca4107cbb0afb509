#include "infboost/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "infboost/error.hpp"
#include "infboost/parallel.hpp"

namespace infboost {

namespace {

constexpr std::uint64_t kProbeStream = 1ULL << 42;

double norm2(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x * x;
  return std::sqrt(total);
}

void put_real(std::ostream& out, double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  out.write(buffer, ptr - buffer);
}

}  // namespace

FixedPointReport fixed_point_residual(const TreeLearner& learner, const LossFunction& loss,
                                      const TreeConfig& tree_config,
                                      std::span<const double> scores, double capacity,
                                      std::size_t n_probe_trees, Rng& rng, std::size_t threads) {
  if (n_probe_trees < 1) throw ConfigError("n_probe_trees must be >= 1");
  const Dataset& dataset = learner.dataset();
  const auto gradient = negative_gradient(loss, dataset, scores);

  // Seeds are drawn up front so the estimate does not depend on `threads`.
  std::vector<std::uint64_t> seeds(n_probe_trees);
  for (auto& s : seeds) s = rng.next();

  const std::size_t n = dataset.n_samples();
  std::vector<std::vector<double>> outputs(n_probe_trees);
  parallel_for(n_probe_trees, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      Rng probe_rng(seeds[p]);
      outputs[p] = learner.fit(gradient, tree_config, probe_rng).predict(dataset);
    }
  });

  std::vector<double> mean(n, 0.0);
  for (const auto& out : outputs) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += out[i];
  }
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = scores[i] - capacity * (mean[i] / static_cast<double>(n_probe_trees));
  }
  return {norm2(residual), n_probe_trees, norm2(scores), capacity};
}

FixedPointReport fixed_point_residual(const Ensemble& ensemble, const Dataset& dataset,
                                      std::size_t n_probe_trees, Rng& rng, std::size_t threads) {
  if (ensemble.mode != Mode::infinite && ensemble.mode != Mode::infinite_adaptive) {
    throw ConfigError("fixed-point residual requires an infinite-mode ensemble");
  }
  const auto scores = predict(ensemble, dataset, threads);
  const TreeLearner learner(dataset);
  const LossFunction loss{ensemble.loss, ensemble.clip_threshold};
  return fixed_point_residual(learner, loss, ensemble.tree_config, scores, ensemble.capacity,
                              n_probe_trees, rng, threads);
}

double regularized_objective(const Dataset& dataset, std::span<const double> scores,
                             double capacity, const LossFunction& loss) {
  const double z_norm = norm2(scores);
  return 0.5 * z_norm * z_norm + capacity * loss_value(loss, dataset, scores);
}

std::vector<TraceRow> convergence_trace(const BoostConfig& config, const Dataset& dataset,
                                        std::size_t probe_every, std::size_t n_probe_trees) {
  if (probe_every < 1) throw ConfigError("probe_every must be >= 1");
  if (config.mode != Mode::infinite && config.mode != Mode::infinite_adaptive) {
    throw ConfigError("convergence trace requires infinite or infinite-adaptive mode");
  }
  Trainer trainer(dataset, config);
  std::vector<TraceRow> rows;
  while (trainer.iteration() < config.n_trees) {
    trainer.step();
    const std::size_t m = trainer.iteration();
    if (m % probe_every != 0) continue;
    auto rng = Rng::derive(config.seed, kProbeStream + m);
    const double capacity = trainer.capacity_in_effect();
    const auto report =
        fixed_point_residual(trainer.learner(), trainer.loss(), config.tree,
                             trainer.train_scores(), capacity, n_probe_trees, rng, config.threads);
    rows.push_back({m, report.residual_norm,
                    regularized_objective(trainer.train_data(), trainer.train_scores(), capacity,
                                          trainer.loss()),
                    capacity});
  }
  return rows;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "iteration,residual,objective,capacity\n";
  for (const auto& row : rows) {
    out << row.iteration << ',';
    put_real(out, row.residual);
    out << ',';
    put_real(out, row.objective);
    out << ',';
    put_real(out, row.capacity);
    out << '\n';
  }
}

}  // namespace infboost
