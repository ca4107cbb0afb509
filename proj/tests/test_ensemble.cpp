#include <gtest/gtest.h>

#include <cmath>

#include "infboost/error.hpp"
#include "infboost/ensemble.hpp"
#include "infboost/metrics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace infboost;

namespace {

BoostConfig infinite_config(double capacity, std::size_t trees, std::uint64_t seed = 0) {
  auto config = BoostConfig::defaults_for(Mode::infinite);
  config.capacity = capacity;
  config.n_trees = trees;
  config.seed = seed;
  return config;
}

BoostConfig gb_config(double shrinkage, std::size_t trees, std::uint64_t seed = 0) {
  auto config = BoostConfig::defaults_for(Mode::gb);
  config.shrinkage = shrinkage;
  config.n_trees = trees;
  config.seed = seed;
  return config;
}

// Weighted average of the first `count` trees computed from scratch.
double direct_prediction(const Ensemble& e, std::span<const double> row, std::size_t count,
                         double capacity) {
  double numerator = 0.0, denominator = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    numerator += e.weights[k] * e.trees[k].predict(row);
    denominator += e.weights[k];
  }
  return capacity * numerator / denominator;
}

}  // namespace

TEST(Schedules, EtaAndWeights) {
  EXPECT_DOUBLE_EQ(eta_schedule(Weighting::uniform, 4), 0.25);
  EXPECT_DOUBLE_EQ(eta_schedule(Weighting::linear, 1), 1.0);
  EXPECT_DOUBLE_EQ(eta_schedule(Weighting::linear, 3), 0.5);
  EXPECT_DOUBLE_EQ(tree_weight(Weighting::linear, 7), 7.0);
  EXPECT_DOUBLE_EQ(tree_weight(Weighting::uniform, 7), 1.0);
  EXPECT_THROW(eta_schedule(Weighting::uniform, 0), ConfigError);
}

TEST(Schedules, LinearEtaMatchesWeightRatio) {
  // eta_m = alpha_m / sum_{k<=m} alpha_k with alpha_k = k.
  double total = 0.0;
  for (std::size_t m = 1; m <= 200; ++m) {
    total += tree_weight(Weighting::linear, m);
    EXPECT_NEAR(eta_schedule(Weighting::linear, m), tree_weight(Weighting::linear, m) / total,
                1e-15);
  }
}

TEST(Schedules, EffectiveCapacityCapsStep) {
  EXPECT_DOUBLE_EQ(effective_capacity(100.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(effective_capacity(100.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(effective_capacity(0.3, 0.5), 0.3);
}

TEST(Schedules, AdaptCapacityMovesByRatioAndClamps) {
  EXPECT_DOUBLE_EQ(adapt_capacity(0.5, 1, +1), 1.0);
  EXPECT_DOUBLE_EQ(adapt_capacity(0.5, 1, -1), 0.25);
  EXPECT_DOUBLE_EQ(adapt_capacity(0.5, 3, 0), 0.5);
  EXPECT_DOUBLE_EQ(adapt_capacity(9999.0, 1, +1), kMaxAdaptiveCapacity);
  EXPECT_DOUBLE_EQ(adapt_capacity(1.5e-4, 1, -1), kMinAdaptiveCapacity);
}

TEST(Schedules, HoldoutSignFollowsGradientCorrelation) {
  const Dataset data({0, 1}, 2, 1, {1.0, 1.0});
  const LossFunction loss{LossKind::squared_error, {}};
  EXPECT_EQ(holdout_capacity_sign(loss, data, std::vector<double>{0.5, 0.5}), 1);
  EXPECT_EQ(holdout_capacity_sign(loss, data, std::vector<double>{2.0, 2.0}), -1);
  EXPECT_EQ(holdout_capacity_sign(loss, data, std::vector<double>{1.0, 1.0}), 0);
}

TEST(BoostConfigTest, ValidationMessagesNameTheParameter) {
  auto config = BoostConfig::defaults_for(Mode::gb);
  try {
    config.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("shrinkage"), std::string::npos);
  }
  config = BoostConfig::defaults_for(Mode::infinite);
  EXPECT_THROW(config.validate(), ConfigError);
  config.capacity = 1.0;
  config.shrinkage = 0.1;
  EXPECT_THROW(config.validate(), ConfigError);
  config = BoostConfig::defaults_for(Mode::infinite_adaptive);
  config.capacity = 2.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = BoostConfig::defaults_for(Mode::forest);
  EXPECT_NO_THROW(config.validate());
  EXPECT_FALSE(config.tree.max_depth.has_value());
  EXPECT_TRUE(config.tree.bootstrap);
  config.capacity = 1.0;
  EXPECT_THROW(config.validate(), ConfigError);
}

TEST(BoostConfigTest, ModeNamesRoundTrip) {
  for (auto mode : {Mode::gb, Mode::infinite, Mode::infinite_adaptive, Mode::forest}) {
    EXPECT_EQ(parse_mode(to_string(mode)), mode);
  }
  EXPECT_THROW(parse_mode("boost"), ConfigError);
  EXPECT_THROW(parse_weighting("cubic"), ConfigError);
}

TEST(BoostConfigTest, ClipThresholdOverride) {
  auto config = infinite_config(1.0, 1);
  EXPECT_DOUBLE_EQ(*config.loss_function().clip_threshold, 1e4);
  config.clip_threshold = 0.0;
  EXPECT_FALSE(config.loss_function().clip_threshold.has_value());
  config.clip_threshold = 3.0;
  EXPECT_DOUBLE_EQ(*config.loss_function().clip_threshold, 3.0);
}

TEST(TrainGb, DepthZeroFollowsClosedForm) {
  // With one leaf every tree fits mean(y - z), so z_m = ybar (1 - (1 - eta)^m).
  const auto data = synth::make_friedman1(60, 5, 1.0, 4);
  double ybar = 0.0;
  for (double y : data.targets()) ybar += y;
  ybar /= 60.0;
  auto config = gb_config(0.3, 25);
  config.tree.max_depth = 0;
  config.tree.subsample = 1.0;
  Trainer trainer(data, config);
  for (std::size_t m = 1; m <= 25; ++m) {
    trainer.step();
    const double expected = ybar * (1.0 - std::pow(0.7, static_cast<double>(m)));
    for (double z : trainer.train_scores()) EXPECT_NEAR(z, expected, 1e-12);
  }
}

TEST(TrainGb, MatchesNaiveReferenceImplementation) {
  const auto data = synth::make_friedman1(40, 5, 0.5, 21);
  auto config = gb_config(0.5, 6, 9);
  config.tree.max_depth = 3;
  config.tree.subsample = 0.75;
  config.tree.max_features = 0.6;
  config.clip_threshold = 0.0;
  Trainer trainer(data, config);
  oracle::NaiveTreeConfig naive;
  naive.max_depth = 3;
  naive.subsample = 0.75;
  naive.max_features = 0.6;
  const auto reference = oracle::naive_gradient_boosting(
      data, 6, 0.5, naive, [&](std::size_t m) { return Rng::derive(9, m); });
  for (std::size_t m = 0; m < 6; ++m) {
    trainer.step();
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
      EXPECT_NEAR(trainer.train_scores()[i], reference.z_history[m][i], 1e-12);
    }
  }
}

TEST(TrainGb, TrainScoresEqualPredict) {
  const auto data = synth::make_friedman1(100, 6, 1.0, 2);
  Trainer trainer(data, gb_config(0.1, 30, 5));
  trainer.run();
  const auto predicted = predict(trainer.ensemble(), data);
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    EXPECT_NEAR(predicted[i], trainer.train_scores()[i], 1e-9);
  }
}

TEST(TrainInfinite, DepthZeroConvergesToFixedPoint) {
  // Single-leaf trees: z* = c * mean(y - z*), so z* = c ybar / (1 + c).
  const auto data = synth::make_constant_targets(20, 2.0);
  auto config = infinite_config(1.0, 400);
  config.tree.max_depth = 0;
  config.tree.subsample = 1.0;
  const auto ensemble = train_infiniteboost(data, config);
  for (double z : predict(ensemble, data)) EXPECT_NEAR(z, 1.0, 1e-2);
}

TEST(TrainInfinite, IncrementalScoresMatchDirectAverage) {
  for (auto weighting : {Weighting::uniform, Weighting::linear}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto data = synth::make_friedman1(80, 5, 1.0, seed);
      auto config = infinite_config(seed % 2 == 0 ? 3.0 : 0.7, 40, seed);
      config.weighting = weighting;
      Trainer trainer(data, config);
      for (std::size_t m = 1; m <= 40; ++m) {
        trainer.step();
        const auto& e = trainer.ensemble();
        for (std::size_t i = 0; i < data.n_samples(); i += 7) {
          EXPECT_NEAR(trainer.train_scores()[i],
                      direct_prediction(e, data.row(i), m, e.capacity_trace[m - 1]), 1e-9);
        }
      }
    }
  }
}

TEST(TrainInfinite, OversteppingGuardCapsEarlyCapacity) {
  const auto data = synth::make_friedman1(50, 5, 1.0, 1);
  auto config = infinite_config(100.0, 5);
  const auto ensemble = train_infiniteboost(data, config);
  ASSERT_EQ(ensemble.capacity_trace.size(), 5u);
  // Linear: eta = 2/(m+1), so 1/eta = 1, 1.5, 2, 2.5, 3.
  EXPECT_DOUBLE_EQ(ensemble.capacity_trace[0], 1.0);
  EXPECT_DOUBLE_EQ(ensemble.capacity_trace[1], 1.5);
  EXPECT_DOUBLE_EQ(ensemble.capacity_trace[4], 3.0);
  EXPECT_DOUBLE_EQ(ensemble.capacity, 3.0);
}

TEST(TrainInfinite, WeightsFollowWeighting) {
  const auto data = synth::make_friedman1(30, 5, 1.0, 1);
  const auto linear = train_infiniteboost(data, infinite_config(1.0, 4));
  EXPECT_EQ(linear.weights, (std::vector<double>{1, 2, 3, 4}));
  auto config = infinite_config(1.0, 3);
  config.weighting = Weighting::uniform;
  EXPECT_EQ(train_infiniteboost(data, config).weights, (std::vector<double>{1, 1, 1}));
}

TEST(TrainInfinite, RankLossNeedsGroups) {
  const auto data = synth::make_friedman1(30, 5, 1.0, 1);
  auto config = infinite_config(1.0, 2);
  config.loss = LossKind::pairwise_rank;
  EXPECT_THROW(train(data, config), DataError);
  const auto ranking = synth::make_ranking(10, 6, 4, 2);
  const auto ensemble = train(ranking, config);
  EXPECT_EQ(ensemble.size(), 2u);
}

TEST(TrainAdaptive, StartsAtHalfAndHoldsOutFivePercent) {
  const auto data = synth::make_noisy_classification(400, 6, 0.1, 3);
  auto config = BoostConfig::defaults_for(Mode::infinite_adaptive);
  config.loss = LossKind::logistic;
  config.n_trees = 30;
  Trainer trainer(data, config);
  EXPECT_EQ(trainer.train_data().n_samples(), 380u);
  ASSERT_NE(trainer.holdout_data(), nullptr);
  EXPECT_EQ(trainer.holdout_data()->n_samples(), 20u);
  EXPECT_DOUBLE_EQ(trainer.adaptive_capacity(), 0.5);
  trainer.step();
  // m = 1: c moves to 1.0 or 0.25 (or stays when the correlation is exactly 0).
  const double c = trainer.adaptive_capacity();
  EXPECT_TRUE(c == 1.0 || c == 0.25 || c == 0.5) << c;
  trainer.run();
  const auto ensemble = std::move(trainer).release();
  EXPECT_EQ(ensemble.capacity_trace.size(), 30u);
  EXPECT_DOUBLE_EQ(ensemble.capacity, ensemble.capacity_trace.back());
  EXPECT_DOUBLE_EQ(ensemble.initial_capacity, 0.5);
}

TEST(TrainAdaptive, CapacityStepsAreRatiosOfConsecutiveIntegers) {
  const auto data = synth::make_friedman1(300, 5, 1.0, 8);
  auto config = BoostConfig::defaults_for(Mode::infinite_adaptive);
  config.n_trees = 40;
  Trainer trainer(data, config);
  for (std::size_t m = 1; m <= 40; ++m) {
    const double before = trainer.adaptive_capacity();
    trainer.step();
    const double ratio = trainer.adaptive_capacity() / before;
    const double up = (m + 1.0) / m;
    EXPECT_TRUE(std::abs(ratio - up) < 1e-12 || std::abs(ratio - 1.0 / up) < 1e-12 ||
                ratio == 1.0)
        << "m=" << m << " ratio " << ratio;
  }
}

TEST(TrainAdaptive, HoldoutScoresMatchPrediction) {
  const auto data = synth::make_friedman1(300, 5, 1.0, 8);
  auto config = BoostConfig::defaults_for(Mode::infinite_adaptive);
  config.n_trees = 25;
  Trainer trainer(data, config);
  trainer.run();
  const auto predicted = predict(trainer.ensemble(), *trainer.holdout_data());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    EXPECT_NEAR(predicted[i], trainer.holdout_scores()[i], 1e-9);
  }
}

TEST(TrainForest, PredictionIsTreeMean) {
  const auto data = synth::make_friedman1(120, 5, 1.0, 6);
  auto config = BoostConfig::defaults_for(Mode::forest);
  config.n_trees = 15;
  Trainer trainer(data, config);
  trainer.run();
  const auto& e = trainer.ensemble();
  for (std::size_t i = 0; i < data.n_samples(); i += 11) {
    double total = 0.0;
    for (const auto& tree : e.trees) total += tree.predict(data.row(i));
    EXPECT_NEAR(predict_row(e, data.row(i)), total / 15.0, 1e-12);
    EXPECT_NEAR(trainer.train_scores()[i], total / 15.0, 1e-9);
  }
}

TEST(TrainForest, LogisticProbabilitiesAreLeafFrequencies) {
  const auto data = synth::make_noisy_classification(200, 6, 0.1, 5);
  auto config = BoostConfig::defaults_for(Mode::forest);
  config.loss = LossKind::logistic;
  config.n_trees = 10;
  const auto ensemble = train_random_forest(data, config);
  for (double p : predict_proba(ensemble, data)) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(TrainDispatch, WrongModeForEntryPoint) {
  const auto data = synth::make_friedman1(30, 5, 1.0, 1);
  EXPECT_THROW(train_gradient_boosting(data, infinite_config(1.0, 1)), ConfigError);
  EXPECT_THROW(train_infiniteboost(data, gb_config(0.1, 1)), ConfigError);
}

TEST(Determinism, SameSeedSameModelDifferentSeedDifferentModel) {
  const auto data = synth::make_friedman1(150, 6, 1.0, 12);
  const auto a = predict(train(data, infinite_config(2.0, 20, 42)), data);
  const auto b = predict(train(data, infinite_config(2.0, 20, 42)), data);
  const auto c = predict(train(data, infinite_config(2.0, 20, 43)), data);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Determinism, NoiseIsSeededAndThreadsDoNotMatter) {
  const auto data = synth::make_friedman1(150, 6, 1.0, 12);
  auto config = gb_config(0.2, 15, 3);
  config.noise_sigma = 0.5;
  const auto a = train(data, config);
  const auto b = train(data, config);
  EXPECT_EQ(predict(a, data, 1), predict(b, data, 3));
  config.noise_sigma = 0.0;
  EXPECT_NE(predict(train(data, config), data), predict(a, data));
}

TEST(Predict, FeatureMismatchAndEmptyEnsemble) {
  const auto data = synth::make_friedman1(30, 5, 1.0, 1);
  const auto ensemble = train(data, gb_config(0.1, 2));
  const auto narrow = synth::make_random_regression(5, 3, 1);
  EXPECT_THROW(predict(ensemble, narrow), DataError);
  Ensemble empty;
  empty.n_features = 5;
  for (double v : predict(empty, data)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(predict_proba(ensemble, data), ConfigError);
}

TEST(StagedPredict, CheckpointsAndFinalStageMatchPredict) {
  const auto data = synth::make_friedman1(60, 5, 1.0, 3);
  for (auto mode : {Mode::gb, Mode::infinite, Mode::infinite_adaptive, Mode::forest}) {
    auto config = BoostConfig::defaults_for(mode);
    if (mode == Mode::gb) config.shrinkage = 0.2;
    if (mode == Mode::infinite) config.capacity = 5.0;
    config.n_trees = 23;
    const auto ensemble = train(data, config);
    const auto stages = staged_predict(ensemble, data, 10);
    ASSERT_EQ(stages.size(), 3u);
    EXPECT_EQ(stages[0].iteration, 10u);
    EXPECT_EQ(stages[2].iteration, 23u);
    EXPECT_EQ(stages[2].predictions, predict(ensemble, data)) << to_string(mode);
  }
}

TEST(StagedPredict, IntermediateStageEqualsTruncatedEnsemble) {
  const auto data = synth::make_friedman1(60, 5, 1.0, 3);
  auto config = infinite_config(4.0, 12, 1);
  const auto ensemble = train(data, config);
  Trainer trainer(data, config);
  for (int m = 0; m < 6; ++m) trainer.step();
  const auto stages = staged_predict(ensemble, data, 6);
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    EXPECT_NEAR(stages[0].predictions[i], trainer.train_scores()[i], 1e-9);
  }
  EXPECT_THROW(staged_predict(ensemble, data, 0), ConfigError);
}

TEST(Quality, InfiniteBoostLearnsClassification) {
  const auto train_data = synth::make_noisy_classification(600, 8, 0.05, 1);
  const auto test_data = synth::make_noisy_classification(600, 8, 0.05, 2);
  auto config = BoostConfig::defaults_for(Mode::infinite_adaptive);
  config.loss = LossKind::logistic;
  config.n_trees = 100;
  config.tree.max_depth = 4;
  const auto ensemble = train(train_data, config);
  EXPECT_GT(roc_auc(test_data.targets(), predict(ensemble, test_data)), 0.8);
}

TEST(SpecExamples, AdaptiveCapacityArithmetic) {
  EXPECT_DOUBLE_EQ(adapt_capacity(1.0, 4, -1), 0.8);
  for (std::size_t m = 1; m < 50; ++m) EXPECT_EQ(adapt_capacity(0.7, m, 0), 0.7);
}

TEST(SpecExamples, GbWithNoTreesPredictsZero) {
  const auto data = synth::make_friedman1(20, 5, 1.0, 1);
  const auto ensemble = train(data, gb_config(0.1, 0));
  EXPECT_EQ(ensemble.size(), 0u);
  for (double v : predict(ensemble, data)) EXPECT_EQ(v, 0.0);
}

TEST(SpecExamples, GbSingleMemorizingTreeReproducesTargets) {
  const auto data = synth::make_random_regression(40, 3, 6);
  auto config = gb_config(1.0, 1);
  config.tree.max_depth = std::nullopt;
  config.tree.subsample = 1.0;
  config.tree.max_features = 1.0;
  const auto ensemble = train(data, config);
  const auto predicted = predict(ensemble, data);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(predicted[i], data.targets()[i]);
}

TEST(SpecExamples, GbDepthZeroHandTrace) {
  const Dataset data({0, 1}, 2, 1, {0, 2});
  auto config = gb_config(0.5, 2);
  config.tree.max_depth = 0;
  config.tree.subsample = 1.0;
  Trainer trainer(data, config);
  trainer.step();
  EXPECT_NEAR(trainer.train_scores()[0], 0.5, 1e-12);
  EXPECT_NEAR(trainer.train_scores()[1], 0.5, 1e-12);
  trainer.step();
  EXPECT_NEAR(trainer.train_scores()[0], 0.75, 1e-12);
  EXPECT_NEAR(trainer.train_scores()[1], 0.75, 1e-12);
}

TEST(SpecExamples, InfiniteSingleTreeIsScaled) {
  const auto data = synth::make_friedman1(50, 5, 1.0, 2);
  const auto ensemble = train(data, infinite_config(0.5, 1));
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_DOUBLE_EQ(predict_row(ensemble, data.row(i)), 0.5 * ensemble.trees[0].predict(data.row(i)));
  }
}
