#include <gtest/gtest.h>

#include "infboost/error.hpp"
#include "infboost/metrics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace infboost;

namespace {

QueryGroups single_group(std::size_t n) {
  QueryGroups groups;
  groups.ids = {1};
  groups.offsets = {0, n};
  return groups;
}

}  // namespace

TEST(Mse, SimpleValues) {
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 5}), 4.0 / 3.0);
  EXPECT_THROW(mse(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST(RocAuc, PerfectInvertedAndTied) {
  const std::vector<double> labels{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(labels, std::vector<double>{0.1, 0.2, 0.8, 0.9}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(labels, std::vector<double>{0.9, 0.8, 0.2, 0.1}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(labels, std::vector<double>{0.5, 0.5, 0.5, 0.5}), 0.5);
  // One tie between a positive and a negative: (3 + 0.5) / 4.
  EXPECT_DOUBLE_EQ(roc_auc(labels, std::vector<double>{0.1, 0.5, 0.5, 0.9}), 0.875);
}

TEST(RocAuc, SingleClassIsAnError) {
  EXPECT_THROW(roc_auc(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.2}), DataError);
}

TEST(RocAuc, MatchesPairCountingOnRandomInputs) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> labels(n), scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<double>(rng.uniform_index(2));
      // Coarse scores so that ties are common.
      scores[i] = trial % 2 == 0 ? static_cast<double>(rng.uniform_index(5)) : rng.normal();
    }
    labels[0] = 1.0;
    labels[1] = 0.0;
    EXPECT_NEAR(roc_auc(labels, scores), oracle::pairwise_auc(labels, scores), 1e-12);
  }
}

TEST(Ndcg, PerfectAndWorstOrder) {
  const std::vector<double> grades{3, 2, 0};
  const auto groups = single_group(3);
  EXPECT_DOUBLE_EQ(ndcg_at_k(grades, std::vector<double>{3, 2, 1}, groups, 10), 1.0);
  const double ideal = 7.0 + 3.0 / std::log2(3.0);
  const double worst = 0.0 + 3.0 / std::log2(3.0) + 7.0 / 2.0;
  EXPECT_NEAR(ndcg_at_k(grades, std::vector<double>{1, 2, 3}, groups, 10), worst / ideal, 1e-15);
}

TEST(Ndcg, AllZeroGradesScoreOne) {
  const auto groups = single_group(3);
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<double>{0, 0, 0}, std::vector<double>{1, 2, 3}, groups, 5),
                   1.0);
}

TEST(Ndcg, TiesBrokenByIndex) {
  const auto groups = single_group(2);
  // Equal scores: document 0 ranks first.
  const double value = ndcg_at_k(std::vector<double>{0, 1}, std::vector<double>{1, 1}, groups, 1);
  EXPECT_DOUBLE_EQ(value, 0.0);
}

TEST(Ndcg, IdealMatchesPermutationOracle) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(7);
    const std::size_t k = 1 + rng.uniform_index(8);
    std::vector<double> grades(n);
    for (auto& g : grades) g = static_cast<double>(rng.uniform_index(5));
    // Scoring by grade gives the ideal ordering, so NDCG is 1 unless ideal DCG is 0.
    EXPECT_NEAR(ndcg_at_k(grades, grades, single_group(n), k), 1.0, 1e-12);
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.normal();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double ideal = oracle::brute_force_ideal_dcg(grades, k);
    const double expected = ideal > 0 ? oracle::dcg_of_order(grades, order, k) / ideal : 1.0;
    EXPECT_NEAR(ndcg_at_k(grades, scores, single_group(n), k), expected, 1e-12);
  }
}

TEST(Ndcg, AveragesOverGroups) {
  QueryGroups groups;
  groups.ids = {1, 2};
  groups.offsets = {0, 2, 4};
  const std::vector<double> grades{1, 0, 1, 0};
  const std::vector<double> scores{2, 1, 1, 2};
  EXPECT_NEAR(ndcg_at_k(grades, scores, groups, 10), (1.0 + 1.0 / std::log2(3.0)) / 2.0, 1e-15);
}

TEST(EvaluateMetric, ParsesNamesAndChecksCompatibility) {
  const auto ranking = synth::make_ranking(4, 5, 2, 1);
  const std::vector<double> scores(ranking.n_samples(), 0.0);
  const auto r = evaluate_metric("ndcg", ranking, scores);
  EXPECT_EQ(r.name, "ndcg@10");
  EXPECT_EQ(r.count, 4u);
  EXPECT_EQ(evaluate_metric("ndcg@3", ranking, scores).name, "ndcg@3");
  EXPECT_THROW(evaluate_metric("ndcg@x", ranking, scores), ConfigError);
  EXPECT_THROW(evaluate_metric("ndcg@0", ranking, scores), ConfigError);
  EXPECT_THROW(evaluate_metric("rmse", ranking, scores), ConfigError);
  const auto plain = synth::make_random_regression(10, 2, 1);
  EXPECT_THROW(evaluate_metric("ndcg@5", plain, std::vector<double>(10, 0.0)), ConfigError);
  const auto m = evaluate_metric("mse", plain, plain.targets());
  EXPECT_EQ(m.value, 0.0);
  EXPECT_EQ(m.count, 10u);
}
