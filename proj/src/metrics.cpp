#include "infboost/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <vector>

#include "infboost/error.hpp"

namespace infboost {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
  if (a == 0) throw DataError("empty input");
}

double dcg(std::span<const double> grades, std::span<const std::size_t> order, std::size_t k) {
  double total = 0.0;
  const std::size_t cutoff = std::min(k, order.size());
  for (std::size_t rank = 0; rank < cutoff; ++rank) {
    const double gain = std::exp2(grades[order[rank]]) - 1.0;
    total += gain / std::log2(static_cast<double>(rank) + 2.0);
  }
  return total;
}

}  // namespace

double mse(std::span<const double> targets, std::span<const double> predictions) {
  check_lengths(targets.size(), predictions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = targets[i] - predictions[i];
    total += r * r;
  }
  return total / static_cast<double>(targets.size());
}

double roc_auc(std::span<const double> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  double n_positive = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share their mean.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t p = i; p < j; ++p) {
      if (labels[order[p]] > 0.0) {
        positive_rank_sum += midrank;
        n_positive += 1.0;
      }
    }
    i = j;
  }
  const double n_negative = static_cast<double>(n) - n_positive;
  if (n_positive == 0.0 || n_negative == 0.0) {
    throw DataError("roc_auc requires both classes");
  }
  const double u = positive_rank_sum - n_positive * (n_positive + 1.0) / 2.0;
  return u / (n_positive * n_negative);
}

double ndcg_at_k(std::span<const double> grades, std::span<const double> scores,
                 const QueryGroups& groups, std::size_t k) {
  check_lengths(grades.size(), scores.size());
  if (k < 1) throw DataError("ndcg cutoff must be >= 1");
  groups.validate(grades.size());

  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::size_t begin = groups.begin(g);
    const std::size_t size = groups.end(g) - begin;
    std::vector<std::size_t> by_score(size);
    std::iota(by_score.begin(), by_score.end(), begin);
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> ideal(by_score);
    std::stable_sort(ideal.begin(), ideal.end(),
                     [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
    const double ideal_dcg = dcg(grades, ideal, k);
    total += ideal_dcg > 0.0 ? dcg(grades, by_score, k) / ideal_dcg : 1.0;
  }
  return total / static_cast<double>(groups.size());
}

MetricResult evaluate_metric(const std::string& metric, const Dataset& dataset,
                             std::span<const double> scores) {
  const auto targets = dataset.targets();
  if (metric == "mse") return {"mse", mse(targets, scores), targets.size()};
  if (metric == "auc") return {"auc", roc_auc(targets, scores), targets.size()};
  if (metric.rfind("ndcg", 0) == 0) {
    std::size_t k = 10;
    if (metric.size() > 4) {
      if (metric[4] != '@') throw ConfigError("unknown metric '" + metric + "'");
      const char* first = metric.data() + 5;
      const char* last = metric.data() + metric.size();
      const auto [ptr, ec] = std::from_chars(first, last, k);
      if (ec != std::errc() || ptr != last || k == 0) {
        throw ConfigError("bad ndcg cutoff in '" + metric + "'");
      }
    }
    if (!dataset.has_query_groups()) {
      throw ConfigError("metric " + metric + " requires query groups");
    }
    const auto& groups = *dataset.query_groups();
    return {"ndcg@" + std::to_string(k), ndcg_at_k(targets, scores, groups, k), groups.size()};
  }
  throw ConfigError("unknown metric '" + metric + "' (expected mse|auc|ndcg@K)");
}

}  // namespace infboost
