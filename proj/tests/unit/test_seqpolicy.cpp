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

#include <cmath>
#include <random>

#include "riff/diffmath.hpp"
#include "riff/error.hpp"
#include "riff/oracle.hpp"
#include "riff/seqpolicy.hpp"
#include "test_util.hpp"

namespace riff {
namespace {

TEST(SeqPolicy, LayoutMatchesDocumentedShapes) {
  const PolicyConfig c{7, 3, 5, 4};
  const PolicyParams p(c);
  const auto& l = p.values().layout();
  EXPECT_EQ(l.segment("token_embedding").length, 7u * 3u);
  EXPECT_EQ(l.segment("recurrence_weight").length, 5u * 6u);
  EXPECT_EQ(l.segment("recurrence_bias").length, 5u);
  EXPECT_EQ(l.segment("output_head").length, 5u * 7u);
}

TEST(SeqPolicy, LogprobMatchesReferenceForward) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const PolicyConfig c{3 + rng() % 5, 2 + rng() % 4, 2 + rng() % 6, 6};
    const auto p = PolicyParams::random(c, rng());
    const auto x = testing::random_input(rng, c.vocab_size, 1, 5);
    const auto z = testing::random_input(rng, c.vocab_size, 0, 5);
    EXPECT_NEAR(seq_logprob(p, x, z), testing::reference_logprob(p, x, z), 1e-12);
  }
}

TEST(SeqPolicy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const PolicyConfig c{4, 3, 4, 5};
    const auto p = PolicyParams::random(c, rng());
    const auto x = testing::random_input(rng, 4, 1, 4);
    const auto z = testing::random_input(rng, 4, 0, 4);
    const auto g = seq_logprob_grad(p, x, z);
    const auto fd = finite_diff_grad(
        [&](const ParamVector& th) {
          PolicyParams q = p;
          q.values() = th;
          return seq_logprob(q, x, z);
        },
        p.values());
    EXPECT_LT(max_relative_error(g.values(), fd), 1e-6);
  }
}

TEST(SeqPolicy, LogprobAndGradAgreeBitwise) {
  std::mt19937_64 rng(8);
  const PolicyConfig c{6, 4, 8, 6};
  const auto p = PolicyParams::random(c, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_input(rng, 6, 1, 5);
    const auto z = testing::random_input(rng, 6, 0, 5);
    const auto [lp, g] = seq_logprob_and_grad(p, x, z);
    EXPECT_EQ(lp, seq_logprob(p, x, z));
    EXPECT_TRUE(g == seq_logprob_grad(p, x, z));
  }
}

TEST(SeqPolicy, DistributionNormalizesOverEnumeration) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const PolicyConfig c{3 + rng() % 2, 4, 4, 4};
    const auto p = PolicyParams::random(c, rng());
    const auto x = testing::random_input(rng, c.vocab_size, 1, 3);
    const auto e = enumerate_sequences(p, x, c.max_len);
    double mass = e.tail_mass;
    for (const auto& s : e.sequences) mass += std::exp(s.logprob);
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
}

TEST(SeqPolicy, RejectsOutOfRangeAndOverlong) {
  const PolicyConfig c{4, 2, 3, 3};
  const auto p = PolicyParams::random(c, 0);
  const auto x = TokenSeq::from_ids({1, 0});
  EXPECT_THROW(seq_logprob(p, x, TokenSeq::from_ids({4, 0})), InvalidInput);
  EXPECT_THROW(seq_logprob(p, x, TokenSeq::from_ids({1, 2, 3, 0})), InvalidInput);
  EXPECT_THROW(seq_logprob(p, TokenSeq::from_ids({9, 0}), TokenSeq::from_ids({0})), InvalidInput);
}

TEST(SeqPolicy, RandomIsSeedDeterministic) {
  const PolicyConfig c{5, 3, 4, 4};
  EXPECT_TRUE(PolicyParams::random(c, 9) == PolicyParams::random(c, 9));
  EXPECT_FALSE(PolicyParams::random(c, 9) == PolicyParams::random(c, 10));
}

TEST(SeqPolicy, SnapshotIsIndependentCopy) {
  const PolicyConfig c{5, 3, 4, 4};
  auto p = PolicyParams::random(c, 1);
  const auto snap = snapshot(p);
  p.values()[0] += 1.0;
  EXPECT_FALSE(snap.params() == p);
}

TEST(SeqPolicy, PretrainLowersTargetNll) {
  std::mt19937_64 rng(4);
  const PolicyConfig c{6, 4, 8, 6};
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  for (int i = 0; i < 24; ++i) {
    const auto x = testing::random_input(rng, 6, 2, 4);
    std::vector<TokenId> rev(x.content().rbegin(), x.content().rend());
    pairs.emplace_back(x, TokenSeq::from_content(rev));
  }
  PretrainOptions opt;
  opt.epochs = 30;
  opt.lr = 2e-2;
  std::vector<double> curve;
  const auto trained = pretrain_mle(PolicyParams::random(c, 0), pairs, opt, &curve);
  ASSERT_EQ(curve.size(), opt.epochs + 1);
  EXPECT_LT(curve.back(), 0.8 * curve.front());
  EXPECT_DOUBLE_EQ(curve.back(), mean_target_nll(trained, pairs));
  EXPECT_THROW(pretrain_mle(trained, std::span<const std::pair<TokenSeq, TokenSeq>>{}, opt), InvalidInput);
}

}  // namespace
}  // namespace riff
