// Copyright (c) 2026 The RIFF Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "riff/checkpoint.hpp"
#include "riff/error.hpp"
#include "riff/trainer.hpp"

namespace riff {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kV = 12;

struct Fixture {
  SyntheticVocab vocab{kV, 2};
  Dataset data = gen_synthetic_task(kV, 2, 40, 6, 21);
  Downstream downstream;
  PolicyParams policy;
  FewShotSplit split;

  Fixture() {
    ClassifierConfig c;
    c.vocab_size = kV;
    c.embed_dim = 4;
    c.num_labels = 2;
    c.mask_id = vocab.mask();
    downstream.classifier = ClassifierParams::random(c, TuningMode::AllTune, 5);
    downstream.verbalizer = Verbalizer({vocab.family_token(0, 0), vocab.family_token(1, 0)}, kV);
    downstream.tmpl = TaskTemplate::for_vocab(vocab);
    policy = PolicyParams::random({vocab.policy_vocab_size(), 4, 6, 10}, 2);
    split = fewshot_split(data.train, 2, 4, 0);
  }

  FinetuneConfig finetune(std::size_t steps, std::size_t interval) const {
    FinetuneConfig f;
    f.decode.M = 2;
    f.eval_decode.M = 2;
    f.steps = steps;
    f.batch_size = 4;
    f.checkpoint_interval = interval;
    return f;
  }
};

TEST(FewShotSplit, BalancedDisjointAndSeeded) {
  Fixture fx;
  const auto s = fewshot_split(fx.data.train, 2, 5, 9);
  ASSERT_EQ(s.train.size(), 10u);
  ASSERT_EQ(s.validation.size(), 10u);
  std::set<std::size_t> ids;
  for (const auto* part : {&s.train, &s.validation}) {
    std::size_t ones = 0;
    for (const auto& ex : *part) {
      ids.insert(ex.id);
      ones += ex.y;
    }
    EXPECT_EQ(ones, 5u);
  }
  EXPECT_EQ(ids.size(), 20u);
  const auto again = fewshot_split(fx.data.train, 2, 5, 9);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(again.train[i].id, s.train[i].id);
  const auto other = fewshot_split(fx.data.train, 2, 5, 10);
  bool differs = false;
  for (std::size_t i = 0; i < 10; ++i) differs |= other.train[i].id != s.train[i].id;
  EXPECT_TRUE(differs);
  EXPECT_THROW(fewshot_split(fx.data.train, 2, 11, 0), InvalidInput);
  EXPECT_THROW(fewshot_split(fx.data.train, 2, 0, 0), InvalidInput);
}

TEST(Ensemble, HandComputedLogProbAverage) {
  const std::vector<LogProb> x = {-0.2, -1.7};
  const std::vector<std::vector<LogProb>> z = {{-1.6, -0.2}, {-1.4, -0.3}};
  const auto incl = ensemble_from_logprobs(x, z);
  EXPECT_NEAR(incl[0], -1.7, 1e-15);
  EXPECT_NEAR(incl[1], -1.95, 1e-15);
  EXPECT_EQ(argmax_label(incl), 0u);
  const auto excl = ensemble_from_logprobs({}, z);
  EXPECT_NEAR(excl[0], -1.5, 1e-15);
  EXPECT_NEAR(excl[1], -0.25, 1e-15);
  EXPECT_EQ(argmax_label(excl), 1u);
  EXPECT_EQ(ensemble_from_logprobs(x, {}), std::vector<double>(x.begin(), x.end()));
  EXPECT_THROW(ensemble_from_logprobs({}, {}), InvalidInput);

  Fixture fx;
  const auto& ex = fx.data.train[0];
  EXPECT_THROW(ensemble_scores(fx.downstream, ex.x, {}, false), InvalidInput);
  const auto only = ensemble_scores(fx.downstream, ex.x, {}, true);
  EXPECT_EQ(only, fx.downstream.logprobs(ex.x));
}

TEST(AugmentedObjective, ZeroParaphrasesReducesToSupervisedLoss) {
  Fixture fx;
  const auto& clf = fx.downstream.classifier;
  const std::span<const Example> batch(fx.data.train.data(), 5);
  const auto obj = augmented_objective(clf, fx.downstream.verbalizer, fx.downstream.tmpl, batch, nullptr, 0,
                                       TuningMode::AllTune);
  double value = 0.0;
  auto grad = ParamVector::zeros_like(clf.values());
  for (const auto& ex : batch) {
    const auto in = format_input(fx.downstream.tmpl, ex.x);
    value += label_logprobs(clf, in, fx.downstream.verbalizer)[ex.y];
    grad.axpy(1.0, classifier_grad(clf, in, ex.y, fx.downstream.verbalizer, TuningMode::AllTune));
  }
  EXPECT_NEAR(obj.value, value, 1e-12);
  for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(obj.grad[i], grad[i], 1e-12);
  EXPECT_THROW(augmented_objective(clf, fx.downstream.verbalizer, fx.downstream.tmpl, batch, nullptr, 2,
                                   TuningMode::AllTune),
               InvalidInput);
}

TEST(AugmentedObjective, IdentityParaphrasesDoubleTheObjective) {
  Fixture fx;
  const auto& clf = fx.downstream.classifier;
  const std::span<const Example> batch(fx.data.train.data(), 3);
  ParaphraseCache cache;
  for (const auto& ex : batch) cache.put("h", ex.id, {ex.x, ex.x, ex.x});
  const auto base = augmented_objective(clf, fx.downstream.verbalizer, fx.downstream.tmpl, batch, nullptr, 0,
                                        TuningMode::LoRA);
  const auto aug = augmented_objective(clf, fx.downstream.verbalizer, fx.downstream.tmpl, batch, &cache, 3,
                                       TuningMode::LoRA);
  EXPECT_NEAR(aug.value, 2.0 * base.value, 1e-12);
  for (std::size_t i = 0; i < aug.grad.size(); ++i) EXPECT_NEAR(aug.grad[i], 2.0 * base.grad[i], 1e-12);
}

TEST(AugmentedObjective, TwoParaphrasesHandAssembled) {
  Fixture fx;
  const auto& clf = fx.downstream.classifier;
  const auto& verb = fx.downstream.verbalizer;
  const auto& ex = fx.data.train[1];
  const auto z1 = fx.data.train[2].x, z2 = fx.data.train[3].x;
  ParaphraseCache cache;
  cache.put("h", ex.id, {z1, z2});
  const auto obj = augmented_objective(clf, verb, fx.downstream.tmpl, std::span(&ex, 1), &cache, 2,
                                       TuningMode::ClsTune);
  auto lp = [&](const TokenSeq& s) { return label_logprobs(clf, format_input(fx.downstream.tmpl, s), verb)[ex.y]; };
  EXPECT_NEAR(obj.value, lp(ex.x) + 0.5 * (lp(z1) + lp(z2)), 1e-12);
  cache.put("h", ex.id, {z1});
  EXPECT_THROW(augmented_objective(clf, verb, fx.downstream.tmpl, std::span(&ex, 1), &cache, 2, TuningMode::ClsTune),
               InvalidInput);
}

TEST(ParaphraseCache, KeyedByPolicyHash) {
  Fixture fx;
  const std::span<const Example> few(fx.data.train.data(), 3);
  DecodeConfig dc;
  dc.M = 2;
  const auto cache = ParaphraseCache::build(fx.policy, few, dc);
  EXPECT_EQ(cache.policy_hash(), sha256_hex(checkpoint_bytes(fx.policy)));
  EXPECT_EQ(cache.size(), 3u);
  EXPECT_EQ(cache.get(cache.policy_hash(), few[0].id).size(), 2u);
  EXPECT_THROW(cache.get(cache.policy_hash(), 9999), InvalidInput);
  EXPECT_THROW(cache.get("other", few[0].id), InvalidInput);
}

TEST(SelectBest, EarliestStepWinsTies) {
  std::vector<Checkpoint> cps(4);
  const double acc[] = {0.5, 0.75, 0.75, 0.25};
  for (std::size_t i = 0; i < 4; ++i) {
    cps[i].step = 8 * (i + 1);
    cps[i].metrics["accuracy"] = acc[i];
  }
  EXPECT_EQ(select_best_checkpoint(cps).step, 16u);
  std::reverse(cps.begin(), cps.end());
  EXPECT_EQ(select_best_checkpoint(cps).step, 16u);
  for (std::size_t i = 0; i < 4; ++i) cps[i].metrics["accuracy"] = 0.1 * static_cast<double>(4 - i);
  EXPECT_EQ(select_best_checkpoint(cps).step, 32u);
  EXPECT_THROW(select_best_checkpoint({}), InvalidInput);
  EXPECT_THROW(select_best_checkpoint(cps, "ld"), InvalidInput);
}

TEST(MetricsCsv, RoundTripIsExact) {
  const std::vector<MetricRow> rows = {
      {0, "validation", "accuracy", 0.1 + 0.2}, {3, "train", "mean_reward", -1.0 / 3.0}, {8, "validation", "ld", 1e-300}};
  const auto path = fs::temp_directory_path() / "riff_metrics_roundtrip.csv";
  write_metrics_csv(path, rows);
  const auto back = read_metrics_csv(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].step, rows[i].step);
    EXPECT_EQ(back[i].split, rows[i].split);
    EXPECT_EQ(back[i].metric, rows[i].metric);
    EXPECT_EQ(back[i].value, rows[i].value);
  }
}

TEST(Finetune, ZeroLearningRateKeepsEveryCheckpointBitwise) {
  Fixture fx;
  auto cfg = fx.finetune(6, 2);
  cfg.optimizer.lr = 0.0;
  const auto res = finetune_paraphraser(fx.policy, fx.downstream, fx.split, cfg);
  ASSERT_EQ(res.checkpoints.size(), 3u);
  EXPECT_EQ(*res.baseline.policy, fx.policy);
  for (const auto& c : res.checkpoints) {
    EXPECT_EQ(*c.policy, fx.policy);
    EXPECT_EQ(c.metric("accuracy"), res.baseline.metric("accuracy"));
  }
}

TEST(Finetune, CheckpointScheduleAndFiles) {
  Fixture fx;
  auto cfg = fx.finetune(4, 4);
  cfg.checkpoint_dir = fs::temp_directory_path() / "riff_finetune_ckpts";
  fs::remove_all(cfg.checkpoint_dir);
  const auto res = finetune_paraphraser(fx.policy, fx.downstream, fx.split, cfg);
  ASSERT_EQ(res.checkpoints.size(), 1u);
  EXPECT_EQ(res.checkpoints[0].step, 4u);
  EXPECT_EQ(res.steps_per_epoch, 2u);
  EXPECT_DOUBLE_EQ(res.epochs, 2.0);
  EXPECT_EQ(load_policy_checkpoint(res.checkpoints[0].file), *res.checkpoints[0].policy);
  EXPECT_TRUE(fs::exists(cfg.checkpoint_dir / "step_000000.ckpt"));
  EXPECT_NE(*res.checkpoints[0].policy, fx.policy);

  std::size_t train_rows = 0, step0_val = 0;
  for (const auto& r : res.metrics) {
    train_rows += r.split == "train" && r.metric == "mean_reward";
    step0_val += r.split == "validation" && r.step == 0;
  }
  EXPECT_EQ(train_rows, 4u);
  EXPECT_EQ(step0_val, 3u);
}

TEST(Finetune, SameSeedSameMetrics) {
  Fixture fx;
  for (auto regime : {PolicyRegime::On, PolicyRegime::Off, PolicyRegime::KLOn}) {
    auto cfg = fx.finetune(4, 2);
    cfg.estimator.regime = regime;
    cfg.seed = 3;
    const auto a = finetune_paraphraser(fx.policy, fx.downstream, fx.split, cfg);
    const auto b = finetune_paraphraser(fx.policy, fx.downstream, fx.split, cfg);
    ASSERT_EQ(a.metrics.size(), b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) EXPECT_EQ(a.metrics[i].value, b.metrics[i].value);
    EXPECT_EQ(*a.checkpoints.back().policy, *b.checkpoints.back().policy);
  }
}

TEST(Finetune, ConfigErrorsNameTheField) {
  Fixture fx;
  auto field_of = [&](FinetuneConfig cfg) -> std::string {
    try {
      finetune_paraphraser(fx.policy, fx.downstream, fx.split, cfg);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  auto cfg = fx.finetune(4, 2);
  cfg.decode.M = 3;
  EXPECT_EQ(field_of(cfg), "M");
  cfg = fx.finetune(0, 2);
  EXPECT_EQ(field_of(cfg), "steps");
  cfg = fx.finetune(4, 0);
  EXPECT_EQ(field_of(cfg), "checkpoint_interval");
  cfg = fx.finetune(4, 2);
  cfg.estimator.beta = -1.0;
  EXPECT_EQ(field_of(cfg), "beta");
}

TEST(ClassifierTraining, ImprovesObjectiveAndRejectsGs) {
  Fixture fx;
  ClassifierTrainConfig cfg;
  cfg.mode = TuningMode::AllTune;
  cfg.M = 0;
  cfg.optimizer.lr = 1e-2;
  cfg.steps = 30;
  cfg.batch_size = 4;
  cfg.checkpoint_interval = 10;
  const auto res = train_classifier_augmented(fx.downstream.classifier, fx.downstream.verbalizer, fx.downstream.tmpl,
                                              nullptr, fx.split, cfg);
  ASSERT_EQ(res.checkpoints.size(), 3u);
  auto objective = [&](const ClassifierParams& p) {
    return augmented_objective(p, fx.downstream.verbalizer, fx.downstream.tmpl, fx.split.train, nullptr, 0,
                               TuningMode::AllTune)
        .value;
  };
  EXPECT_GT(objective(*res.checkpoints.back().classifier), objective(fx.downstream.classifier));

  cfg.mode = TuningMode::None;
  try {
    train_classifier_augmented(fx.downstream.classifier, fx.downstream.verbalizer, fx.downstream.tmpl, nullptr,
                               fx.split, cfg);
    ADD_FAILURE() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "tuning_mode");
  }
}

TEST(ClassifierTraining, FrozenSegmentsUntouched) {
  Fixture fx;
  ClassifierTrainConfig cfg;
  cfg.mode = TuningMode::ClsTune;
  cfg.M = 0;
  cfg.optimizer.lr = 1e-2;
  cfg.steps = 4;
  cfg.batch_size = 4;
  cfg.checkpoint_interval = 4;
  cfg.evaluate = false;
  const auto res = train_classifier_augmented(fx.downstream.classifier, fx.downstream.verbalizer, fx.downstream.tmpl,
                                              nullptr, fx.split, cfg);
  const auto& after = res.checkpoints.back().classifier->values();
  const auto& before = fx.downstream.classifier.values();
  const auto mask = fx.downstream.classifier.trainable_mask(TuningMode::ClsTune);
  const auto& segs = before.layout().segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const auto a = after.segment(segs[s].name), b = before.segment(segs[s].name);
    const bool same = std::equal(a.begin(), a.end(), b.begin());
    if (!mask[s]) {
      EXPECT_TRUE(same) << segs[s].name;
    }
  }
}

}  // namespace
}  // namespace riff
