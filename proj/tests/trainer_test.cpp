// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tailtag/trainer.hpp"
#include "test_support.hpp"

namespace tailtag {
namespace {

namespace fs = std::filesystem;

struct Fixture {
  Corpus corpus;
  TermVocab terms;
  std::vector<SparseVec> features;
  LabelStats stats;
  InstanceWeights weights{0, {}};
};

Fixture make_fixture(std::size_t classes, std::size_t docs, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = classes;
  spec.docs = docs;
  spec.filler_vocab = 60;
  spec.seed = seed;
  Fixture f{generate_synthetic(spec), {}, {}, {}, {0, {}}};
  f.terms = build_vocab(f.corpus, {2, 500});
  f.features = featurize(f.corpus, f.terms);
  f.stats = make_label_stats(f.corpus);
  f.weights = build_instance_weights(f.stats, f.corpus, {});
  return f;
}

TrainConfig config_for(LossFamily family, const Fixture& f) {
  TrainConfig cfg;
  cfg.loss.family = family;
  cfg.optim.lr = default_learning_rate(family);
  cfg.optim.epochs = 5;
  cfg.optim.batch = 16;
  cfg.optim.seed = 3;
  if (family == LossFamily::kDb || family == LossFamily::kNegTolerantBce) {
    cfg.loss.nu = compute_class_bias(f.stats.counts, f.stats.num_records,
                                     cfg.loss.kappa);
  }
  return cfg;
}

TEST(ForwardTest, ZeroModelGivesZeroLogits) {
  const Model m = zero_model(4, 10);
  SparseVec x{{1, 7}, {0.6, 0.8}};
  for (double z : forward(m, x)) EXPECT_EQ(z, 0.0);
  SparseVec bad{{10}, {1.0}};
  EXPECT_THROW(forward(m, bad), DataError);
}

TEST(ForwardTest, LinearInInput) {
  const Model m = init_model(3, 8, 17, std::vector<double>{0.5, -1.0, 2.0});
  SparseVec x{{0, 3, 5}, {1.0, -2.0, 0.5}};
  SparseVec x2 = x;
  for (double& v : x2.values) v *= 2.0;
  const auto z = forward(m, x);
  const auto z2 = forward(m, x2);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(z2[c] - m.bias[c], 2.0 * (z[c] - m.bias[c]), 1e-14);
  }
}

TEST(InitModelTest, RangeAndDeterminism) {
  const Model a = init_model(5, 16, 9);
  const Model b = init_model(5, 16, 9);
  EXPECT_EQ(a.weights, b.weights);
  for (double w : a.weights) {
    EXPECT_GE(w, -0.25);
    EXPECT_LE(w, 0.25);
  }
  for (double v : a.bias) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(init_model(2, 3, 0, std::vector<double>{1.0}), DataError);
}

TEST(BatchGradientTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  const LossFamily families[] = {LossFamily::kBce, LossFamily::kFocal,
                                 LossFamily::kRebalancedBce,
                                 LossFamily::kNegTolerantBce, LossFamily::kDb};
  for (LossFamily family : families) {
    const std::size_t c = 4;
    const std::size_t feat = 6;
    Model model = init_model(c, feat, rng(),
                             std::vector<double>{0.3, -0.2, 0.1, -0.4});
    LossConfig loss;
    loss.family = family;
    loss.lambda = 2.0;
    loss.nu = {-0.1, 0.05, -0.2, 0.0};

    std::vector<SparseVec> xs{{{0, 2, 5}, {0.5, -0.7, 0.3}},
                              {{1, 3}, {0.9, 0.4}},
                              {{4}, {1.0}}};
    std::vector<std::vector<LabelId>> topics{{0, 2}, {1}, {}};
    std::vector<std::vector<double>> rhats{{0.3, 0.9, 0.3, 0.3},
                                           {0.7, 0.7, 0.7, 0.7},
                                           {0.6, 0.6, 0.6, 0.6}};
    std::vector<TrainExample> batch;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      batch.push_back({&xs[i], topics[i], rhats[i]});
    }
    const BatchGradient g = batch_gradient(model, batch, loss);

    auto loss_at = [&](const std::vector<double>& params) {
      Model m = model;
      std::copy(params.begin(), params.begin() + m.weights.size(), m.weights.begin());
      std::copy(params.begin() + m.weights.size(), params.end(), m.bias.begin());
      return batch_gradient(m, batch, loss).loss;
    };
    std::vector<double> params(model.weights);
    params.insert(params.end(), model.bias.begin(), model.bias.end());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double analytic =
          i < model.weights.size() ? g.weights[i] : g.bias[i - model.weights.size()];
      const double numeric = testing::central_difference(loss_at, params, i);
      EXPECT_TRUE(testing::gradient_matches(analytic, numeric, 1e-4))
          << to_string(family) << " param " << i << ": " << analytic << " vs "
          << numeric;
    }
  }
}

TEST(AdamWTest, SingleStepLowersBatchLoss) {
  Fixture f = make_fixture(5, 60, 1);
  Model model = init_model(5, f.terms.size(), 2);
  std::vector<TrainExample> batch;
  for (std::size_t r = 0; r < 16; ++r) {
    batch.push_back({&f.features[r], f.corpus.records[r].topics, {}});
  }
  LossConfig loss;
  loss.family = LossFamily::kBce;
  OptimConfig opt;
  opt.lr = 1e-3;
  const BatchGradient before = batch_gradient(model, batch, loss);
  AdamW adam(model, opt);
  adam.step(model, before);
  EXPECT_LT(batch_gradient(model, batch, loss).loss, before.loss);
}

TEST(AdamWTest, FirstStepLengthScalesWithLr) {
  // With zero decay the first Adam step is lr * g / (|g| + eps) per
  // coordinate, so its length is linear in lr.
  Model base = init_model(2, 4, 5);
  BatchGradient g{0.0, {0.1, -0.2, 0.3, 0.0, 1.0, -1.0, 2.0, 0.5}, {0.2, -0.3}};
  auto step_norm = [&](double lr) {
    OptimConfig opt;
    opt.lr = lr;
    opt.weight_decay = 0.0;
    Model m = base;
    AdamW adam(m, opt);
    adam.step(m, g);
    double s = 0.0;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      s += std::pow(m.weights[i] - base.weights[i], 2);
    }
    return std::sqrt(s);
  };
  const double n1 = step_norm(1e-3);
  EXPECT_NEAR(step_norm(2e-3) / n1, 2.0, 1e-9);
  EXPECT_NEAR(step_norm(5e-4) / n1, 0.5, 1e-9);
}

TEST(AdamWTest, DecayLeavesBiasAlone) {
  Model m = init_model(2, 3, 1, std::vector<double>{1.0, -1.0});
  OptimConfig opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.5;
  AdamW adam(m, opt);
  const Model before = m;
  adam.step(m, BatchGradient{0.0, std::vector<double>(6, 0.0), {0.0, 0.0}});
  EXPECT_EQ(m.bias, before.bias);
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    EXPECT_NEAR(m.weights[i], before.weights[i] * (1.0 - 0.05), 1e-15);
  }
}

TEST(TrainTest, ZeroLearningRateIsIdentity) {
  Fixture f = make_fixture(6, 80, 2);
  TrainConfig cfg = config_for(LossFamily::kDb, f);
  cfg.optim.lr = 0.0;
  const Model init = init_model(6, f.terms.size(), 4, cfg.loss.nu);
  const TrainResult r = train(init, f.corpus, f.features, f.stats, f.weights, cfg);
  EXPECT_EQ(r.model.weights, init.weights);
  EXPECT_EQ(r.model.bias, init.bias);
}

TEST(TrainTest, DeterministicForFixedSeed) {
  Fixture f = make_fixture(6, 80, 3);
  for (LossFamily family : {LossFamily::kBce, LossFamily::kDb}) {
    const TrainConfig cfg = config_for(family, f);
    const Model init = init_model(6, f.terms.size(), 4,
                                  family == LossFamily::kDb
                                      ? std::span<const double>(cfg.loss.nu)
                                      : std::span<const double>());
    const TrainResult a = train(init, f.corpus, f.features, f.stats, f.weights, cfg);
    const TrainResult b = train(init, f.corpus, f.features, f.stats, f.weights, cfg);
    EXPECT_EQ(a.model.weights, b.model.weights);
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  }
}

TEST(TrainTest, EpochLossDecreasesAfterWarmup) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Fixture f = make_fixture(8, 150, seed);
    TrainConfig cfg = config_for(LossFamily::kBce, f);
    cfg.optim.epochs = 8;
    cfg.optim.lr = 1e-2;
    cfg.optim.seed = seed;
    const TrainResult r = train(init_model(8, f.terms.size(), seed), f.corpus,
                                f.features, f.stats, f.weights, cfg);
    for (std::size_t e = 2; e < r.epoch_loss.size(); ++e) {
      EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1]) << "seed " << seed << " epoch " << e;
    }
  }
}

TEST(TrainTest, RejectsMissingClassBias) {
  Fixture f = make_fixture(4, 40, 1);
  TrainConfig cfg = config_for(LossFamily::kBce, f);
  cfg.loss.family = LossFamily::kNegTolerantBce;
  EXPECT_THROW(train(init_model(4, f.terms.size(), 0), f.corpus, f.features,
                     f.stats, f.weights, cfg),
               ConfigError);
}

TEST(TrainTest, SamplerModeResolution) {
  EXPECT_EQ(resolve_sampler_mode(SamplerMode::kAuto, LossFamily::kDb),
            SamplerMode::kClassAware);
  EXPECT_EQ(resolve_sampler_mode(SamplerMode::kAuto, LossFamily::kRebalancedBce),
            SamplerMode::kClassAware);
  EXPECT_EQ(resolve_sampler_mode(SamplerMode::kAuto, LossFamily::kBce),
            SamplerMode::kUniform);
  EXPECT_EQ(resolve_sampler_mode(SamplerMode::kUniform, LossFamily::kDb),
            SamplerMode::kUniform);
  EXPECT_THROW(parse_sampler_mode("random"), ConfigError);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  Model m = init_model(3, 5, 12, std::vector<double>{-0.5, 0.0, 1e-300});
  m.weights[0] = -0.0;
  m.meta = {1, 2, 3};
  const fs::path path = fs::temp_directory_path() / "tailtag_ckpt.bin";
  save_checkpoint(m, path);
  EXPECT_EQ(fs::file_size(path), 44u + 8u * (15u + 3u));
  const Model back = load_checkpoint(path, {1, 2});
  EXPECT_EQ(back.num_classes, 3u);
  EXPECT_EQ(back.num_features, 5u);
  EXPECT_EQ(back.meta, m.meta);
  ASSERT_EQ(back.weights.size(), m.weights.size());
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.weights[i]),
              std::bit_cast<std::uint64_t>(m.weights[i]));
  }
  EXPECT_EQ(back.bias, m.bias);
}

TEST(CheckpointTest, CorruptOrMismatchedFilesRejected) {
  const Model m = init_model(2, 3, 1);
  const fs::path path = fs::temp_directory_path() / "tailtag_ckpt_bad.bin";
  save_checkpoint(m, path);
  EXPECT_THROW(load_checkpoint(path, {std::uint64_t{99}, std::nullopt}), DataError);
  EXPECT_THROW(load_checkpoint(path, {std::nullopt, std::uint64_t{99}}), DataError);
  fs::resize_file(path, fs::file_size(path) - 1);
  EXPECT_THROW(load_checkpoint(path), DataError);
  std::ofstream(path, std::ios::binary) << "XXXX";
  EXPECT_THROW(load_checkpoint(path), DataError);
  EXPECT_THROW(load_checkpoint(fs::temp_directory_path() / "no_such_ckpt"), DataError);
}

TEST(FingerprintTest, SensitiveToSettings) {
  const LabelStats stats = make_label_stats({3, 1}, 4);
  TrainConfig cfg;
  const auto base = training_fingerprint(cfg, stats, {});
  EXPECT_EQ(training_fingerprint(cfg, stats, {}), base);
  TrainConfig other = cfg;
  other.optim.seed = 1;
  EXPECT_NE(training_fingerprint(other, stats, {}), base);
  SmoothingParams sp;
  sp.mu = 0.4;
  EXPECT_NE(training_fingerprint(cfg, stats, sp), base);
}

}  // namespace
}  // namespace tailtag
