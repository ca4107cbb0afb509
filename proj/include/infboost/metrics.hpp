#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "infboost/data.hpp"

namespace infboost {

struct MetricResult {
  std::string name;
  double value = 0.0;
  std::size_t count = 0;  // samples, or queries for ndcg
};

double mse(std::span<const double> targets, std::span<const double> predictions);

// Mann-Whitney statistic with midranks for ties. Labels are 0/1 (any
// positive value counts as 1). Throws DataError if only one class occurs.
double roc_auc(std::span<const double> labels, std::span<const double> scores);

// Mean NDCG@k over query groups with gain 2^grade - 1 and discount
// 1/log2(rank + 1). Documents are ordered by descending score, ties by index.
// Groups whose ideal DCG is zero score 1.
double ndcg_at_k(std::span<const double> grades, std::span<const double> scores,
                 const QueryGroups& groups, std::size_t k);

// Parses "mse", "auc" or "ndcg@K" and evaluates it against the dataset
// targets.
MetricResult evaluate_metric(const std::string& metric, const Dataset& dataset,
                             std::span<const double> scores);

}  // namespace infboost
