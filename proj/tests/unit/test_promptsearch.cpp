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

#include "riff/data.hpp"
#include "riff/error.hpp"
#include "riff/promptsearch.hpp"

namespace riff {
namespace {

struct SearchFixture {
  SyntheticVocab vocab{20, 2};
  TaskTemplate tmpl = TaskTemplate::for_vocab(vocab);
  Verbalizer verb{{vocab.family_token(0, 0), vocab.family_token(1, 0)}, 20};
  ClassifierParams clf;
  Dataset data = gen_synthetic_task(20, 2, 16, 0, 4);

  SearchFixture() {
    ClassifierConfig c;
    c.vocab_size = 20;
    c.embed_dim = 6;
    c.num_labels = 2;
    c.mask_id = vocab.mask();
    clf = ClassifierParams::random(c, TuningMode::None, 8);
  }
};

TEST(GradientSearch, CandidatesFollowLinearizedScoreAndSkipBanned) {
  SearchFixture s;
  const Instruction instr = {5, 6, 7};
  const TokenId banned[] = {0, s.vocab.mask(), 3};
  const std::span<const Example> batch(s.data.train.data(), 4);
  const auto all = gs_candidates(s.clf, s.verb, s.tmpl, instr, 1, batch, 20, banned);
  EXPECT_EQ(all.size(), 17u);
  for (TokenId b : banned) EXPECT_EQ(std::count(all.begin(), all.end(), b), 0);
  const auto top4 = gs_candidates(s.clf, s.verb, s.tmpl, instr, 1, batch, 4, banned);
  EXPECT_TRUE(std::equal(top4.begin(), top4.end(), all.begin()));

  // Independent check of the ranking from the embedding-gradient definition.
  std::vector<double> grad(6, 0.0);
  for (const auto& ex : batch) {
    const auto g = input_embedding_grad(s.clf, format_input(s.tmpl, instr, ex.x), ex.y, s.verb);
    for (std::size_t a = 0; a < 6; ++a) grad[a] += g[2 * 6 + a];
  }
  const auto E = s.clf.values().segment("token_embedding");
  auto score = [&](TokenId v) {
    double acc = 0.0;
    for (std::size_t a = 0; a < 6; ++a) acc += E[v * 6 + a] * grad[a];
    return acc;
  };
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(score(all[i - 1]), score(all[i]));

  EXPECT_THROW(gs_candidates(s.clf, s.verb, s.tmpl, instr, 3, batch, 4), InvalidInput);
  EXPECT_THROW(gs_candidates(s.clf, s.verb, s.tmpl, instr, 0, batch, 0), InvalidInput);
}

TEST(GradientSearch, StepNeverLowersMinibatchObjective) {
  SearchFixture s;
  std::mt19937_64 rng(1);
  Instruction instr = {5, 6, 7, 8};
  const std::span<const Example> batch(s.data.train.data(), 2);
  for (int i = 0; i < 50; ++i) {
    const auto r = gs_step(s.clf, s.verb, s.tmpl, instr, batch, 4, rng);
    EXPECT_GE(r.best_loglik, r.incumbent_loglik);
    EXPECT_DOUBLE_EQ(r.best_loglik, instruction_loglik(s.clf, s.verb, s.tmpl, r.instruction, batch));
    instr = r.instruction;
  }
}

TEST(GradientSearch, FullBatchSearchIsMonotone) {
  SearchFixture s;
  const auto res = gs_search(s.clf, s.verb, s.tmpl, {5, 6, 7, 8}, s.data.train, 40, s.data.train.size(), 4, 2);
  ASSERT_EQ(res.steps.size(), 40u);
  for (std::size_t i = 1; i < res.steps.size(); ++i) {
    EXPECT_GE(res.steps[i].incumbent_loglik, res.steps[i - 1].best_loglik - 1e-9);
  }
  EXPECT_EQ(res.instruction, res.steps.back().instruction);
  EXPECT_GE(res.steps.back().best_loglik, res.steps.front().incumbent_loglik);
}

}  // namespace
}  // namespace riff
