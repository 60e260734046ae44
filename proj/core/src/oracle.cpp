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

#include "riff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riff/error.hpp"
#include "riff/estimators.hpp"

namespace riff {
namespace {

void enumerate_from(const PolicyParams& policy, std::span<const double> ctx, std::vector<TokenId>& prefix,
                    LogProb prefix_lp, std::size_t max_len, Enumeration& out) {
  const std::size_t V = policy.config().vocab_size;
  const TokenId prev = prefix.empty() ? kEos : prefix.back();
  const auto ls = log_softmax(step_logits(policy, ctx, prev));
  for (std::size_t v = 0; v < V; ++v) {
    const LogProb lp = prefix_lp + ls[v];
    prefix.push_back(static_cast<TokenId>(v));
    if (v == kEos) {
      out.sequences.push_back(ScoredSeq{TokenSeq::from_ids(prefix), lp});
    } else if (prefix.size() == max_len) {
      out.tail.push_back(UnterminatedPrefix{prefix, lp});
    } else {
      enumerate_from(policy, ctx, prefix, lp, max_len, out);
    }
    prefix.pop_back();
  }
}

struct ScoredSupport {
  Enumeration enumeration;
  SampleBatch batch;
  std::vector<GradientAccumulator> grads;
};

ScoredSupport score_support(const PolicyParams& policy, const PolicyParams* fixed, const TokenSeq& x,
                            const RewardFn& reward, std::size_t max_len) {
  ScoredSupport s;
  s.enumeration = enumerate_sequences(policy, x, max_len);
  for (const auto& item : s.enumeration.sequences) {
    SampleRecord rec{item.seq, item.logprob, fixed ? seq_logprob(*fixed, x, item.seq) : item.logprob,
                     reward(item.seq)};
    s.batch.samples.push_back(std::move(rec));
    s.grads.push_back(seq_logprob_grad(policy, x, item.seq));
  }
  return s;
}

}  // namespace

Enumeration enumerate_sequences(const PolicyParams& policy, const TokenSeq& x, std::size_t max_len) {
  const auto& c = policy.config();
  if (max_len == 0) throw InvalidInput("enumerate_sequences: max_len must be positive");
  if (max_len > c.max_len) throw InvalidInput("enumerate_sequences: max_len exceeds the policy limit");
  if (std::pow(static_cast<double>(c.vocab_size), static_cast<double>(max_len)) > kEnumerationGuard) {
    throw InvalidInput("enumerate_sequences: V^max_len = " + std::to_string(c.vocab_size) + "^" +
                       std::to_string(max_len) + " exceeds the enumeration guard");
  }
  const auto ctx = encode_context(policy, x);
  Enumeration out;
  std::vector<TokenId> prefix;
  enumerate_from(policy, ctx, prefix, 0.0, max_len, out);
  for (const auto& t : out.tail) out.tail_mass += std::exp(t.logprob);
  out.tail_warning = out.tail_mass > kTailWarning;
  return out;
}

double exact_objective(const PolicyParams& policy, const TokenSeq& x, const RewardFn& reward, std::size_t max_len) {
  const auto e = enumerate_sequences(policy, x, max_len);
  std::vector<double> terms;
  terms.reserve(e.sequences.size());
  for (const auto& item : e.sequences) terms.push_back(item.logprob + reward(item.seq));
  return logsumexp(terms);
}

GradientAccumulator exact_gradient(const PolicyParams& policy, const TokenSeq& x, const RewardFn& reward,
                                   std::size_t max_len) {
  const auto s = score_support(policy, nullptr, x, reward, max_len);
  return assemble_gradient(mml_coefficients(s.batch), s.grads);
}

double exact_klon_objective(const PolicyParams& policy, const PolicyParams& fixed, const TokenSeq& x,
                            const RewardFn& reward, std::size_t max_len, double beta) {
  const auto e = enumerate_sequences(policy, x, max_len);
  std::vector<double> terms;
  double kl = 0.0;
  for (const auto& item : e.sequences) {
    terms.push_back(item.logprob + reward(item.seq));
    kl += std::exp(item.logprob) * (item.logprob - seq_logprob(fixed, x, item.seq));
  }
  return logsumexp(terms) - beta * kl;
}

GradientAccumulator exact_klon_gradient(const PolicyParams& policy, const PolicyParams& fixed, const TokenSeq& x,
                                        const RewardFn& reward, std::size_t max_len, double beta) {
  const auto s = score_support(policy, &fixed, x, reward, max_len);
  const auto base = assemble_gradient(mml_coefficients(s.batch), s.grads);
  std::vector<double> weights;
  weights.reserve(s.batch.size());
  for (const auto& rec : s.batch.samples) weights.push_back(std::exp(rec.cur_logprob));
  return klon_gradient_weighted(s.batch, s.grads, base, KlonConfig{beta}, weights);
}

TokenSeq argmax_path(const Enumeration& enumeration, std::size_t vocab_size, std::size_t max_len) {
  std::vector<TokenId> path;
  auto starts_with = [](std::span<const TokenId> ids, const std::vector<TokenId>& prefix) {
    return ids.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), ids.begin());
  };
  while (true) {
    if (path.size() + 1 == max_len) {
      path.push_back(kEos);
      break;
    }
    std::vector<double> mass(vocab_size, 0.0);
    for (const auto& item : enumeration.sequences) {
      if (item.seq.size() > path.size() && starts_with(item.seq.ids(), path)) {
        mass[item.seq[path.size()]] += std::exp(item.logprob);
      }
    }
    for (const auto& t : enumeration.tail) {
      if (starts_with(t.ids, path)) mass[t.ids[path.size()]] += std::exp(t.logprob);
    }
    const auto best = static_cast<TokenId>(std::max_element(mass.begin(), mass.end()) - mass.begin());
    path.push_back(best);
    if (best == kEos) break;
  }
  return TokenSeq::from_ids(std::move(path));
}

}  // namespace riff
