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

#pragma once

#include <functional>
#include <vector>

#include "riff/diffmath.hpp"
#include "riff/seqpolicy.hpp"
#include "riff/tokens.hpp"

namespace riff {

/// Enumeration is refused when V^max_len exceeds this bound.
inline constexpr double kEnumerationGuard = 1e6;
/// Tail mass above this sets Enumeration::tail_warning.
inline constexpr double kTailWarning = 1e-6;

struct ScoredSeq {
  TokenSeq seq;
  LogProb logprob = 0.0;
};

struct UnterminatedPrefix {
  std::vector<TokenId> ids;  // max_len tokens, none of them EOS
  LogProb logprob = 0.0;
};

struct Enumeration {
  std::vector<ScoredSeq> sequences;  // every EOS-terminated z with |z| <= max_len
  std::vector<UnterminatedPrefix> tail;
  double tail_mass = 0.0;
  bool tail_warning = false;
};

/// Exhaustive depth-first listing of the truncated sequence space. Log-probs
/// accumulate step by step in the same order as seq_logprob, so they agree
/// bitwise. Throws InvalidInput if the guard is exceeded or max_len exceeds
/// the policy's own limit.
Enumeration enumerate_sequences(const PolicyParams& policy, const TokenSeq& x, std::size_t max_len);

using RewardFn = std::function<double(const TokenSeq&)>;

/// log sum_z P(z|x) e^{R(z)} over the enumerated support (tail excluded).
double exact_objective(const PolicyParams& policy, const TokenSeq& x, const RewardFn& reward, std::size_t max_len);

/// sum_z phi_MML(z) grad log P(z|x) over the enumerated support.
GradientAccumulator exact_gradient(const PolicyParams& policy, const TokenSeq& x, const RewardFn& reward,
                                   std::size_t max_len);

/// log E[e^R] - beta * sum_z P(z|x) log(P(z|x) / P_fixed(z|x)).
double exact_klon_objective(const PolicyParams& policy, const PolicyParams& fixed, const TokenSeq& x,
                            const RewardFn& reward, std::size_t max_len, double beta);

/// Exact gradient of exact_klon_objective: exact_gradient minus
/// beta * sum_z P(z|x) (log s(z) + 1) grad log P(z|x). At beta = 0 this is
/// exact_gradient, bitwise.
GradientAccumulator exact_klon_gradient(const PolicyParams& policy, const PolicyParams& fixed, const TokenSeq& x,
                                        const RewardFn& reward, std::size_t max_len, double beta);

/// Step-wise argmax path recovered from enumerated prefix masses: at every
/// step, the child prefix carrying the most total probability (EOS forced in
/// the last slot). Ties go to the lower id.
TokenSeq argmax_path(const Enumeration& enumeration, std::size_t vocab_size, std::size_t max_len);

}  // namespace riff
