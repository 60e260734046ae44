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

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "riff/diffmath.hpp"
#include "riff/param_vector.hpp"
#include "riff/tokens.hpp"

namespace riff {

struct PolicyConfig {
  std::size_t vocab_size = 8;
  std::size_t embed_dim = 8;
  std::size_t hidden_dim = 16;
  std::size_t max_len = 6;

  bool operator==(const PolicyConfig&) const = default;
};

/// Conditional autoregressive paraphraser.
///
///   context   = mean of token_embedding rows over the input sequence
///   state_t   = tanh(recurrence_weight * [context ; emb(z_{t-1})] + recurrence_bias)
///   logits_t  = output_head^T * state_t
///
/// with z_{-1} = EOS acting as the start token. Parameter segments, all
/// row-major: token_embedding (V x d), recurrence_weight (h x 2d),
/// recurrence_bias (h), output_head (h x V).
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(const PolicyConfig& config);

  /// Fan-in scaled Gaussian initialization; `scale` multiplies every stddev.
  static PolicyParams random(const PolicyConfig& config, std::uint64_t seed, double scale = 1.0);

  const PolicyConfig& config() const { return config_; }
  ParamVector& values() { return values_; }
  const ParamVector& values() const { return values_; }

  bool operator==(const PolicyParams&) const = default;

 private:
  PolicyConfig config_;
  ParamVector values_;
};

/// Immutable, cheaply shareable copy of a policy.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(const PolicyParams& params)
      : params_(std::make_shared<const PolicyParams>(params)) {}
  const PolicyParams& params() const { return *params_; }
  operator const PolicyParams&() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

PolicySnapshot snapshot(const PolicyParams& params);

/// Mean input embedding; the decoder's conditioning vector.
std::vector<double> encode_context(const PolicyParams& params, const TokenSeq& x);

/// Next-token logits given the context and the previous token.
std::vector<double> step_logits(const PolicyParams& params, std::span<const double> context, TokenId prev);

/// log P(z | x), summed over every step of z. Throws InvalidInput on ids
/// outside the vocabulary or z longer than max_len.
LogProb seq_logprob(const PolicyParams& params, const TokenSeq& x, const TokenSeq& z);

/// Gradient of seq_logprob with respect to every parameter segment.
GradientAccumulator seq_logprob_grad(const PolicyParams& params, const TokenSeq& x, const TokenSeq& z);

/// Both at once; the log-prob is bitwise equal to seq_logprob.
std::pair<LogProb, GradientAccumulator> seq_logprob_and_grad(const PolicyParams& params, const TokenSeq& x,
                                                             const TokenSeq& z);

struct PretrainOptions {
  std::size_t epochs = 10;
  double lr = 1e-2;
  double weight_decay = 1e-4;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
};

/// Maximum-likelihood training on (input, target) pairs with AdamW.
/// `epoch_nll`, when given, receives the mean target NLL before training and
/// after every epoch (epochs + 1 entries).
PolicyParams pretrain_mle(const PolicyParams& params, std::span<const std::pair<TokenSeq, TokenSeq>> pairs,
                          const PretrainOptions& options, std::vector<double>* epoch_nll = nullptr);

/// Mean negative log-likelihood of the targets.
double mean_target_nll(const PolicyParams& params, std::span<const std::pair<TokenSeq, TokenSeq>> pairs);

}  // namespace riff
