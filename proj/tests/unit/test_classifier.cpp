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
#include <random>

#include "riff/classifier.hpp"
#include "riff/diffmath.hpp"
#include "riff/error.hpp"

namespace riff {
namespace {

constexpr TokenId kMask = 1;

ClassifierConfig small_config() {
  ClassifierConfig c;
  c.vocab_size = 10;
  c.embed_dim = 4;
  c.num_labels = 3;
  c.prompt_len = 2;
  c.lora_rank = 2;
  c.lora_alpha = 32.0;
  c.cls_hidden = 5;
  c.max_input_len = 16;
  c.mask_id = kMask;
  return c;
}

Verbalizer small_verbalizer() { return Verbalizer({5, 7, 3}, 10); }

TokenSeq random_input(std::mt19937_64& rng) {
  std::vector<TokenId> ids(2 + rng() % 5);
  for (auto& t : ids) t = static_cast<TokenId>(2 + rng() % 8);
  ids.insert(ids.begin() + static_cast<std::ptrdiff_t>(rng() % (ids.size() + 1)), kMask);
  return TokenSeq::from_content(ids);
}

/// Randomizes every segment, LoRA B included, so each path carries signal.
ClassifierParams dense_params(TuningMode mode, std::uint64_t seed) {
  auto p = ClassifierParams::random(small_config(), mode, seed);
  std::mt19937_64 rng(seed ^ 0xabc);
  std::normal_distribution<double> n(0.0, 0.1);
  for (double& v : p.values().segment("lora_b_q")) v = n(rng);
  for (double& v : p.values().segment("lora_b_v")) v = n(rng);
  for (double& v : p.values().segment("cls_b1")) v = n(rng);
  return p;
}

/// Mask-head forward written from the model description.
std::vector<double> reference_mask_logprobs(const ClassifierParams& p, const TokenSeq& input, const Verbalizer& verb,
                                            bool use_prompt, bool use_lora) {
  const auto& c = p.config();
  const std::size_t d = c.embed_dim, V = c.vocab_size, r = c.lora_rank;
  const auto& pv = p.values();
  auto mat = [&](const char* name) {
    const auto s = pv.segment(name);
    return std::vector<long double>(s.begin(), s.end());
  };
  auto E = mat("token_embedding"), P = mat("prompt_table"), Wq = mat("attn_q"), Wk = mat("attn_k"),
       Wv = mat("attn_v"), Wo = mat("attn_o"), head = mat("lm_head");
  if (use_lora) {
    const auto Aq = mat("lora_a_q"), Bq = mat("lora_b_q"), Av = mat("lora_a_v"), Bv = mat("lora_b_v");
    const long double s = c.lora_alpha / static_cast<long double>(r);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < r; ++k) {
          Wq[i * d + j] += s * Bq[i * r + k] * Aq[k * d + j];
          Wv[i * d + j] += s * Bv[i * r + k] * Av[k * d + j];
        }
      }
    }
  }
  std::vector<std::vector<long double>> X;
  if (use_prompt) {
    for (std::size_t i = 0; i < c.prompt_len; ++i) X.emplace_back(P.begin() + i * d, P.begin() + (i + 1) * d);
  }
  std::size_t mask_row = 0;
  for (TokenId t : input.ids()) {
    if (t == c.mask_id) mask_row = X.size();
    X.emplace_back(E.begin() + t * d, E.begin() + (t + 1) * d);
  }
  auto mv = [d](const std::vector<long double>& M, const std::vector<long double>& x) {
    std::vector<long double> y(d, 0.0L);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) y[a] += M[a * d + b] * x[b];
    }
    return y;
  };
  const auto q = mv(Wq, X[mask_row]);
  std::vector<long double> scores;
  for (const auto& x : X) {
    const auto k = mv(Wk, x);
    long double s = 0.0L;
    for (std::size_t a = 0; a < d; ++a) s += q[a] * k[a];
    scores.push_back(s / std::sqrt(static_cast<long double>(d)));
  }
  const long double mx = *std::max_element(scores.begin(), scores.end());
  long double z = 0.0L;
  for (auto& s : scores) z += std::exp(s - mx);
  std::vector<long double> o(d, 0.0L);
  for (std::size_t j = 0; j < X.size(); ++j) {
    const auto v = mv(Wv, X[j]);
    for (std::size_t a = 0; a < d; ++a) o[a] += std::exp(scores[j] - mx) / z * v[a];
  }
  const auto wo = mv(Wo, o);
  std::vector<long double> h(d);
  for (std::size_t a = 0; a < d; ++a) h[a] = X[mask_row][a] + wo[a];
  std::vector<long double> logits;
  for (TokenId t : verb.tokens()) {
    long double l = 0.0L;
    for (std::size_t a = 0; a < d; ++a) l += head[a * V + t] * h[a];
    logits.push_back(l);
  }
  long double lmx = *std::max_element(logits.begin(), logits.end());
  long double lz = 0.0L;
  for (auto l : logits) lz += std::exp(l - lmx);
  std::vector<double> out;
  for (auto l : logits) out.push_back(static_cast<double>(l - lmx - std::log(lz)));
  return out;
}

TEST(Classifier, MaskHeadMatchesReferenceForward) {
  std::mt19937_64 rng(1);
  const auto verb = small_verbalizer();
  for (TuningMode mode : {TuningMode::AllTune, TuningMode::SpTune, TuningMode::LoRA}) {
    for (int t = 0; t < 10; ++t) {
      const auto p = dense_params(mode, rng());
      const auto input = random_input(rng);
      const auto got = label_logprobs(p, input, verb);
      const auto ref = reference_mask_logprobs(p, input, verb, mode == TuningMode::SpTune, mode == TuningMode::LoRA);
      for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(got[y], ref[y], 1e-12) << to_string(mode);
    }
  }
}

TEST(Classifier, ClsHeadMatchesManualComputation) {
  std::mt19937_64 rng(2);
  auto p = dense_params(TuningMode::ClsTune, 4);
  const auto input = random_input(rng);
  const auto pooled = pooled_hidden(p, input);
  const auto& c = p.config();
  const auto W1 = p.values().segment("cls_w1"), b1 = p.values().segment("cls_b1");
  const auto W2 = p.values().segment("cls_w2"), b2 = p.values().segment("cls_b2");
  std::vector<double> act(c.cls_hidden), logits(c.num_labels);
  for (std::size_t k = 0; k < c.cls_hidden; ++k) {
    double s = b1[k];
    for (std::size_t a = 0; a < c.embed_dim; ++a) s += W1[k * c.embed_dim + a] * pooled[a];
    act[k] = 0.5 * s * (1.0 + std::erf(s / std::sqrt(2.0)));
  }
  for (std::size_t y = 0; y < c.num_labels; ++y) {
    logits[y] = b2[y];
    for (std::size_t k = 0; k < c.cls_hidden; ++k) logits[y] += W2[y * c.cls_hidden + k] * act[k];
  }
  const auto expect = log_softmax(logits);
  const auto got = label_logprobs(p, input, small_verbalizer());
  for (std::size_t y = 0; y < c.num_labels; ++y) EXPECT_NEAR(got[y], expect[y], 1e-12);
  EXPECT_EQ(cls_forward(p, input), got);
}

TEST(Classifier, GradientsMatchFiniteDifferencesPerMode) {
  std::mt19937_64 rng(3);
  const auto verb = small_verbalizer();
  for (TuningMode mode : parameterized_modes()) {
    for (int t = 0; t < 3; ++t) {
      const auto p = dense_params(mode, rng());
      const auto input = random_input(rng);
      const std::size_t y = rng() % 3;
      const auto g = classifier_grad(p, input, y, verb, mode);
      const auto fd = finite_diff_grad(
          [&](const ParamVector& th) {
            ClassifierParams q = p;
            q.values() = th;
            return label_logprobs(q, input, verb)[y];
          },
          p.values());
      // Compare on the mode's own segments only; the rest is zero by contract.
      std::vector<double> a, b;
      for (const auto& name : trainable_segments(mode)) {
        const auto& s = p.values().layout().segment(name);
        for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
          a.push_back(g[i]);
          b.push_back(fd[i]);
        }
      }
      EXPECT_LT(max_relative_error(a, b, 1e-7), 1e-5) << to_string(mode);
    }
  }
}

TEST(Classifier, GradientIsZeroOutsideMask) {
  std::mt19937_64 rng(4);
  const auto verb = small_verbalizer();
  for (TuningMode mode : parameterized_modes()) {
    const auto p = dense_params(mode, rng());
    const auto g = classifier_grad(p, random_input(rng), rng() % 3, verb, mode);
    const auto names = trainable_segments(mode);
    for (const auto& s : g.layout().segments()) {
      const bool owned = std::find(names.begin(), names.end(), s.name) != names.end();
      if (owned) continue;
      for (double v : g.segment(s.name)) EXPECT_EQ(v, 0.0) << to_string(mode) << " " << s.name;
    }
  }
  const auto p = dense_params(TuningMode::None, 1);
  const auto g = classifier_grad(p, random_input(rng), 0, verb, TuningMode::None);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Classifier, TrainableMaskMatchesSegments) {
  const auto p = ClassifierParams::random(small_config(), TuningMode::LoRA, 0);
  const auto mask = p.trainable_mask();
  const auto& segs = p.values().layout().segments();
  ASSERT_EQ(mask.size(), segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) EXPECT_EQ(mask[i], segs[i].name.rfind("lora_", 0) == 0);
  EXPECT_TRUE(trainable_segments(TuningMode::None).empty());
}

TEST(Classifier, LoraWithZeroBReproducesBaseBitwise) {
  std::mt19937_64 rng(5);
  const auto verb = small_verbalizer();
  for (int t = 0; t < 20; ++t) {
    auto base = ClassifierParams::random(small_config(), TuningMode::AllTune, rng());
    auto lora = base;
    lora.set_mode(TuningMode::LoRA);
    const auto input = random_input(rng);
    EXPECT_EQ(label_logprobs(base, input, verb), label_logprobs(lora, input, verb));
  }
}

TEST(Classifier, LoraApplyMatchesDenseUpdate) {
  const std::size_t d = 3, r = 2;
  const std::vector<double> W = {1, 2, 0, -1, 0.5, 3, 0, 0, 1};
  const std::vector<double> A = {0.1, 0.2, 0.3, -0.1, 0.0, 0.4};
  const std::vector<double> B = {1, 0, 0, 1, 1, 1};
  const std::vector<double> v = {1.0, -2.0, 0.5};
  const double alpha = 4.0;
  // A v = (0.1 - 0.4 + 0.15, -0.1 + 0.2) = (-0.15, 0.1); B A v = (-0.15, 0.1, -0.05)
  // W v = (1 - 4, -1 - 1 + 1.5, 0.5) = (-3, -0.5, 0.5); scale alpha / r = 2.
  const auto out = lora_apply(W, A, B, alpha, r, v);
  EXPECT_NEAR(out[0], -3.3, 1e-15);
  EXPECT_NEAR(out[1], -0.3, 1e-15);
  EXPECT_NEAR(out[2], 0.4, 1e-15);
  EXPECT_THROW(lora_apply(W, A, B, alpha, 3, v), InvalidInput);
  const std::vector<double> zeroB(d * r, 0.0);
  const auto same = lora_apply(W, A, zeroB, alpha, r, v);
  EXPECT_EQ(same[0], -3.0);
}

TEST(Classifier, PromptRowsOnlyAffectSpTune) {
  std::mt19937_64 rng(6);
  const auto verb = small_verbalizer();
  const auto input = random_input(rng);
  auto all = ClassifierParams::random(small_config(), TuningMode::AllTune, 3);
  auto sp = all;
  sp.set_mode(TuningMode::SpTune);
  const auto before_all = label_logprobs(all, input, verb);
  const auto before_sp = label_logprobs(sp, input, verb);
  for (double& v : all.values().segment("prompt_table")) v += 1.0;
  for (double& v : sp.values().segment("prompt_table")) v += 1.0;
  EXPECT_EQ(label_logprobs(all, input, verb), before_all);
  EXPECT_NE(label_logprobs(sp, input, verb), before_sp);
}

TEST(Classifier, NoPositionalEncoding) {
  const auto verb = small_verbalizer();
  const auto p = ClassifierParams::random(small_config(), TuningMode::AllTune, 8);
  const auto a = label_logprobs(p, TokenSeq::from_ids({4, 1, 6, 9, 0}), verb);
  const auto b = label_logprobs(p, TokenSeq::from_ids({9, 6, 4, 1, 0}), verb);
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(a[y], b[y], 1e-13);
}

TEST(Classifier, RejectsMalformedInput) {
  const auto verb = small_verbalizer();
  const auto p = ClassifierParams::random(small_config(), TuningMode::AllTune, 0);
  EXPECT_THROW(label_logprobs(p, TokenSeq::from_ids({4, 6, 0}), verb), InvalidInput);
  EXPECT_THROW(label_logprobs(p, TokenSeq::from_ids({1, 1, 0}), verb), InvalidInput);
  EXPECT_THROW(label_logprobs(p, TokenSeq::from_ids({1, 12, 0}), verb), InvalidInput);
  EXPECT_THROW(reward(p, TokenSeq::from_ids({1, 4, 0}), 3, verb), InvalidInput);
  EXPECT_THROW(Verbalizer({2, 2}, 10), InvalidInput);
  EXPECT_THROW(Verbalizer({2, 10}, 10), InvalidInput);
  EXPECT_THROW(label_logprobs(p, TokenSeq::from_ids({1, 4, 0}), Verbalizer({2, 3}, 10)), InvalidInput);
}

TEST(Classifier, InputEmbeddingGradMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const auto verb = small_verbalizer();
  auto p = dense_params(TuningMode::AllTune, 2);
  const auto input = TokenSeq::from_ids({3, 1, 4, 0});
  const auto g = input_embedding_grad(p, input, 1, verb);
  ASSERT_EQ(g.size(), 4u * 4u);
  // Token 4 appears once, so its embedding-row gradient equals the positional one.
  const auto fd = finite_diff_grad(
      [&](const ParamVector& th) {
        ClassifierParams q = p;
        q.values() = th;
        return label_logprobs(q, input, verb)[1];
      },
      p.values());
  const auto& emb = p.values().layout().segment("token_embedding");
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(g[2 * 4 + k], fd[emb.offset + 4 * 4 + k], 1e-8);
}

TEST(Classifier, ArgmaxTiesGoLow) {
  const std::vector<double> s = {-1.0, -0.5, -0.5};
  EXPECT_EQ(argmax_label(s), 1u);
  EXPECT_THROW(argmax_label(std::vector<double>{}), InvalidInput);
}

TEST(Classifier, ModeNamesRoundTrip) {
  for (TuningMode m : parameterized_modes()) EXPECT_EQ(parse_tuning_mode(to_string(m)), m);
  EXPECT_EQ(parse_tuning_mode("GS"), TuningMode::None);
  EXPECT_THROW(parse_tuning_mode("Prefix"), InvalidInput);
}

}  // namespace
}  // namespace riff
