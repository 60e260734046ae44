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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riff/diffmath.hpp"
#include "riff/param_vector.hpp"
#include "riff/tokens.hpp"

namespace riff {

/// Which parameter subset trains. `None` is the gradient-free setting used
/// by discrete instruction search.
enum class TuningMode : std::uint32_t {
  None = 0,
  AllTune = 1,
  HTune = 2,
  InTune = 3,
  ClsTune = 4,
  SpTune = 5,
  LoRA = 6,
};

std::string_view to_string(TuningMode mode);
TuningMode parse_tuning_mode(std::string_view name);
/// The six modes that own trainable parameters.
std::span<const TuningMode> parameterized_modes();

struct ClassifierConfig {
  std::size_t vocab_size = 16;
  std::size_t embed_dim = 8;
  std::size_t num_labels = 2;
  std::size_t prompt_len = 5;     // SpTune prompt vectors
  std::size_t lora_rank = 2;
  double lora_alpha = 32.0;
  std::size_t cls_hidden = 16;    // ClsTune hidden width
  std::size_t max_input_len = 48;
  TokenId mask_id = 1;

  bool operator==(const ClassifierConfig&) const = default;
};

/// Label -> vocabulary token, injective.
class Verbalizer {
 public:
  Verbalizer() = default;
  Verbalizer(std::vector<TokenId> tokens, std::size_t vocab_size);

  std::size_t num_labels() const { return tokens_.size(); }
  TokenId token(std::size_t label) const { return tokens_.at(label); }
  std::span<const TokenId> tokens() const { return tokens_; }

 private:
  std::vector<TokenId> tokens_;
};

/// Mask-prediction classifier: one single-head self-attention layer with a
/// residual connection and no positional encodings.
///
///   x_i      = token_embedding[id_i]           (prompt_table rows first under SpTune)
///   q,k,v_i  = W_{q,k,v} x_i                    (W_q, W_v carry B*A*alpha/r under LoRA)
///   h_i      = x_i + W_o * sum_j softmax_j(q_i.k_j / sqrt(d)) v_j
///   P(y|x)   = softmax over verbalizer ids of lm_head^T h_mask
///
/// ClsTune replaces the mask head with mean(h) -> W1,b1 -> gelu -> W2,b2.
/// Matrices are row-major; lm_head is d x V.
class ClassifierParams {
 public:
  ClassifierParams() = default;
  ClassifierParams(const ClassifierConfig& config, TuningMode mode);

  static ClassifierParams random(const ClassifierConfig& config, TuningMode mode, std::uint64_t seed);

  const ClassifierConfig& config() const { return config_; }
  TuningMode mode() const { return mode_; }
  void set_mode(TuningMode mode) { mode_ = mode; }
  ParamVector& values() { return values_; }
  const ParamVector& values() const { return values_; }

  /// Per-segment flags matching values().layout().segments().
  std::vector<bool> trainable_mask() const { return trainable_mask(mode_); }
  std::vector<bool> trainable_mask(TuningMode mode) const;

  bool operator==(const ClassifierParams&) const = default;

 private:
  ClassifierConfig config_;
  TuningMode mode_ = TuningMode::None;
  ParamVector values_;
};

/// Segment names owned by `mode`.
std::vector<std::string> trainable_segments(TuningMode mode);

/// Per-label log P(y | input) under params.mode(). The input must contain
/// exactly one MASK token.
std::vector<LogProb> label_logprobs(const ClassifierParams& params, const TokenSeq& input,
                                    const Verbalizer& verbalizer);

/// R(z) = log P(y | z).
double reward(const ClassifierParams& params, const TokenSeq& z, std::size_t y, const Verbalizer& verbalizer);

/// Gradient of log P(y | input), evaluated with the forward pass of `mode`,
/// restricted to that mode's segments. Every other segment is exactly zero.
GradientAccumulator classifier_grad(const ClassifierParams& params, const TokenSeq& input, std::size_t y,
                                    const Verbalizer& verbalizer, TuningMode mode);

/// Gradient of log P(y | input) with respect to the embedded input vector at
/// every token position of `input` (prompt rows excluded), row-major n x d.
std::vector<double> input_embedding_grad(const ClassifierParams& params, const TokenSeq& input, std::size_t y,
                                         const Verbalizer& verbalizer);

/// (W + (alpha / r) * B * A) v with W: d x d, A: r x d, B: d x r.
std::vector<double> lora_apply(std::span<const double> W, std::span<const double> A, std::span<const double> B,
                               double alpha, std::size_t r, std::span<const double> v);

/// ClsTune head output: per-label log-probabilities from mean-pooled hiddens.
std::vector<LogProb> cls_forward(const ClassifierParams& params, const TokenSeq& input);

/// Mean of the final hidden vectors (length d).
std::vector<double> pooled_hidden(const ClassifierParams& params, const TokenSeq& input);

/// Index of the highest-scoring label; ties go to the lower index.
std::size_t argmax_label(std::span<const double> scores);

}  // namespace riff
