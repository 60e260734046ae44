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
#include <map>
#include <random>
#include <set>

#include "riff/decoding.hpp"
#include "riff/error.hpp"
#include "riff/oracle.hpp"
#include "test_util.hpp"

namespace riff {
namespace {

DecodeConfig plain(std::size_t M) {
  DecodeConfig c;
  c.M = M;
  c.diversity_penalty = 0.0;
  c.repetition_penalty = 1.0;
  return c;
}

TEST(Nucleus, SizeAndPick) {
  const std::vector<double> probs = {0.2, 0.5, 0.3};
  EXPECT_EQ(nucleus_size(probs, 0.4), 1u);
  EXPECT_EQ(nucleus_size(probs, 0.75), 2u);
  EXPECT_EQ(nucleus_size(probs, 1.0), 3u);
  // Nucleus {1, 2} with mass 0.8.
  EXPECT_EQ(nucleus_pick(probs, 0.75, 0.0), 1u);
  EXPECT_EQ(nucleus_pick(probs, 0.75, 0.6), 1u);
  EXPECT_EQ(nucleus_pick(probs, 0.75, 0.7), 2u);
  EXPECT_EQ(nucleus_pick(probs, 0.75, 0.999999), 2u);
}

TEST(Nucleus, EqualProbabilitiesOrderByIndex) {
  const std::vector<double> probs = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(nucleus_size(probs, 0.5), 2u);
  EXPECT_EQ(nucleus_pick(probs, 0.5, 0.1), 0u);
  EXPECT_EQ(nucleus_pick(probs, 0.5, 0.9), 1u);
}

TEST(TopP, FullNucleusPassesChiSquare) {
  // V = 3 and max_len = 2: the sampled first token fully determines the
  // sequence, so its frequencies must follow the first-step distribution.
  const PolicyConfig pc{3, 4, 4, 2};
  const auto policy = PolicyParams::random(pc, 17);
  const auto x = TokenSeq::from_ids({1, 2, 0});
  const auto probs = softmax(step_logits(policy, encode_context(policy, x), kEos));
  DecodeConfig cfg;
  cfg.M = 10000;
  cfg.p = 1.0;
  cfg.seed = 99;
  std::vector<double> counts(3, 0.0);
  for (const auto& d : top_p_sample(policy, x, cfg)) counts[d.seq[0]] += 1.0;
  double chi2 = 0.0;
  for (std::size_t v = 0; v < 3; ++v) {
    const double e = probs[v] * 10000.0;
    chi2 += (counts[v] - e) * (counts[v] - e) / e;
  }
  // Survival function of chi-square with 2 degrees of freedom.
  EXPECT_GT(std::exp(-chi2 / 2.0), 0.01) << "chi2=" << chi2;
}

TEST(TopP, LogprobsAreUnderUnmodifiedPolicy) {
  const PolicyConfig pc{6, 4, 6, 8};
  const auto policy = PolicyParams::random(pc, 2);
  const auto x = TokenSeq::from_ids({1, 3, 5, 0});
  DecodeConfig cfg;
  cfg.M = 20;
  for (const auto& d : top_p_sample(policy, x, cfg)) {
    EXPECT_EQ(d.logprob, seq_logprob(policy, x, d.seq));
    EXPECT_LE(d.seq.size(), pc.max_len);
    EXPECT_EQ(d.seq.ids().back(), kEos);
  }
}

TEST(TopP, SmallNucleusRestrictsSupport) {
  const PolicyConfig pc{5, 4, 4, 2};
  const auto policy = PolicyParams::random(pc, 23, 3.0);
  const auto x = TokenSeq::from_ids({2, 0});
  const auto probs = softmax(step_logits(policy, encode_context(policy, x), kEos));
  const auto top = static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  DecodeConfig cfg;
  cfg.M = 200;
  cfg.p = 1e-9;
  for (const auto& d : top_p_sample(policy, x, cfg)) EXPECT_EQ(d.seq[0], top);
}

TEST(DiverseBeam, SingleGroupWithoutPenaltiesEqualsArgmaxPath) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const PolicyConfig pc{2 + rng() % 3, 4, 4, 2 + rng() % 3};
    const auto policy = PolicyParams::random(pc, rng(), 2.0);
    const auto x = testing::random_input(rng, pc.vocab_size, 1, 3);
    const auto beam = diverse_beam(policy, x, plain(1));
    const auto e = enumerate_sequences(policy, x, pc.max_len);
    EXPECT_EQ(beam.front().seq, argmax_path(e, pc.vocab_size, pc.max_len));
  }
}

TEST(DiverseBeam, DiversityPenaltySeparatesGroups) {
  const PolicyConfig pc{8, 4, 8, 5};
  const auto policy = PolicyParams::random(pc, 3);
  const auto x = TokenSeq::from_ids({1, 2, 3, 0});
  DecodeConfig cfg = plain(4);
  const auto same = diverse_beam(policy, x, cfg);
  for (const auto& d : same) EXPECT_EQ(d.seq, same.front().seq);
  cfg.diversity_penalty = 1e3;
  const auto diverse = diverse_beam(policy, x, cfg);
  std::set<TokenId> first;
  for (const auto& d : diverse) first.insert(d.seq[0]);
  EXPECT_EQ(first.size(), 4u);
}

TEST(DiverseBeam, SortedByScoreAndEndsInEos) {
  const PolicyConfig pc{8, 4, 8, 6};
  const auto policy = PolicyParams::random(pc, 5);
  const auto x = TokenSeq::from_ids({4, 6, 0});
  DecodeConfig cfg;
  cfg.M = 8;
  const auto out = diverse_beam(policy, x, cfg);
  ASSERT_EQ(out.size(), 8u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) {
      EXPECT_GE(out[i - 1].score, out[i].score);
    }
    EXPECT_EQ(out[i].seq.ids().back(), kEos);
    EXPECT_LE(out[i].seq.size(), pc.max_len);
    EXPECT_EQ(out[i].logprob, seq_logprob(policy, x, out[i].seq));
  }
}

DecodedSeq ds(std::vector<TokenId> ids, double lp) { return {TokenSeq::from_ids(std::move(ids)), lp, lp}; }

TEST(MergeMixed, TakesTopHalvesAndDeduplicates) {
  std::vector<DecodedSeq> beam = {ds({1, 0}, -1.0), ds({2, 0}, -0.5), ds({3, 0}, -3.0)};
  std::vector<DecodedSeq> nucleus = {ds({2, 0}, -0.5), ds({4, 0}, -2.0), ds({5, 0}, -1.5)};
  const auto out = merge_mixed(beam, nucleus, 4);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].seq, TokenSeq::from_ids({2, 0}));
  EXPECT_EQ(out[1].seq, TokenSeq::from_ids({1, 0}));
  // {2, 0} is already taken, so the nucleus half skips to its next best.
  EXPECT_EQ(out[2].seq, TokenSeq::from_ids({5, 0}));
  EXPECT_EQ(out[3].seq, TokenSeq::from_ids({4, 0}));
  EXPECT_THROW(merge_mixed(beam, nucleus, 3), InvalidInput);
}

TEST(MergeMixed, RepeatsOnlyWhenSourceExhausted) {
  std::vector<DecodedSeq> beam = {ds({1, 0}, -1.0), ds({1, 0}, -1.0)};
  std::vector<DecodedSeq> nucleus = {ds({1, 0}, -1.0), ds({3, 0}, -2.0)};
  const auto out = merge_mixed(beam, nucleus, 4);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].seq, TokenSeq::from_ids({1, 0}));
  EXPECT_EQ(out[1].seq, TokenSeq::from_ids({1, 0}));
  EXPECT_EQ(out[2].seq, TokenSeq::from_ids({3, 0}));
  EXPECT_EQ(out[3].seq, TokenSeq::from_ids({1, 0}));
}

TEST(Decode, DeterministicUnderSeed) {
  const PolicyConfig pc{8, 4, 8, 8};
  const auto policy = PolicyParams::random(pc, 6);
  const auto x = TokenSeq::from_ids({1, 5, 7, 0});
  DecodeConfig cfg;
  cfg.seed = 42;
  for (auto scheme : {DecodeScheme::Beam, DecodeScheme::TopP, DecodeScheme::Mixed}) {
    const auto a = decode(scheme, policy, x, cfg);
    const auto b = decode(scheme, policy, x, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].seq, b[i].seq);
      EXPECT_EQ(a[i].logprob, b[i].logprob);
      EXPECT_EQ(a[i].score, b[i].score);
    }
  }
  DecodeConfig other = cfg;
  other.seed = 43;
  other.M = 32;
  cfg.M = 32;
  bool differs = false;
  const auto a = top_p_sample(policy, x, cfg);
  const auto b = top_p_sample(policy, x, other);
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].seq != b[i].seq;
  EXPECT_TRUE(differs);
}

TEST(Decode, ConfigValidation) {
  DecodeConfig cfg;
  cfg.M = 3;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(cfg.validate(true), InvalidInput);
  cfg.M = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = DecodeConfig{};
  cfg.p = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = DecodeConfig{};
  cfg.temperature = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = DecodeConfig{};
  cfg.repetition_penalty = 0.5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  EXPECT_EQ(parse_decode_scheme("top_p"), DecodeScheme::TopP);
  EXPECT_THROW(parse_decode_scheme("greedy"), InvalidInput);
}

}  // namespace
}  // namespace riff
