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

#include "riff/classifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "riff/error.hpp"

namespace riff {
namespace {

constexpr const char* kEmbedding = "token_embedding";
constexpr const char* kPrompt = "prompt_table";
constexpr const char* kWq = "attn_q";
constexpr const char* kWk = "attn_k";
constexpr const char* kWv = "attn_v";
constexpr const char* kWo = "attn_o";
constexpr const char* kLmHead = "lm_head";
constexpr const char* kLoraAq = "lora_a_q";
constexpr const char* kLoraBq = "lora_b_q";
constexpr const char* kLoraAv = "lora_a_v";
constexpr const char* kLoraBv = "lora_b_v";
constexpr const char* kClsW1 = "cls_w1";
constexpr const char* kClsB1 = "cls_b1";
constexpr const char* kClsW2 = "cls_w2";
constexpr const char* kClsB2 = "cls_b2";

Layout classifier_layout(const ClassifierConfig& c) {
  const std::size_t d = c.embed_dim, r = c.lora_rank;
  Layout layout;
  layout.add(kEmbedding, c.vocab_size * d)
      .add(kPrompt, c.prompt_len * d)
      .add(kWq, d * d)
      .add(kWk, d * d)
      .add(kWv, d * d)
      .add(kWo, d * d)
      .add(kLmHead, d * c.vocab_size)
      .add(kLoraAq, r * d)
      .add(kLoraBq, d * r)
      .add(kLoraAv, r * d)
      .add(kLoraBv, d * r)
      .add(kClsW1, c.cls_hidden * d)
      .add(kClsB1, c.cls_hidden)
      .add(kClsW2, c.num_labels * c.cls_hidden)
      .add(kClsB2, c.num_labels);
  return layout;
}

// y = M x for row-major M (rows x cols).
void matvec(std::span<const double> M, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t a = 0; a < rows; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < cols; ++b) acc += M[a * cols + b] * x[b];
    y[a] = acc;
  }
}

// y += M^T x for row-major M (rows x cols).
void matvec_t_add(std::span<const double> M, std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<double> y) {
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) y[b] += M[a * cols + b] * x[a];
  }
}

// G += u v^T.
void outer_add(std::span<double> G, std::span<const double> u, std::span<const double> v) {
  for (std::size_t a = 0; a < u.size(); ++a) {
    for (std::size_t b = 0; b < v.size(); ++b) G[a * v.size() + b] += u[a] * v[b];
  }
}

// W + (alpha / r) B A.
std::vector<double> effective_weight(std::span<const double> W, std::span<const double> A,
                                     std::span<const double> B, double alpha, std::size_t d, std::size_t r) {
  std::vector<double> out(W.begin(), W.end());
  const double s = alpha / static_cast<double>(r);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < r; ++k) acc += B[i * r + k] * A[k * d + j];
      out[i * d + j] += s * acc;
    }
  }
  return out;
}

struct Forward {
  std::size_t n = 0;         // rows, prompts included
  std::size_t n_prompt = 0;  // prompt rows at the front
  std::size_t mask_row = 0;
  std::vector<double> X, Q, K, V, A, O, H;
  std::vector<double> Wq, Wv;  // effective (LoRA-adjusted) projections
};

std::size_t find_mask(const ClassifierConfig& c, const TokenSeq& input) {
  std::size_t count = 0, pos = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input[i] == c.mask_id) {
      ++count;
      pos = i;
    }
  }
  if (count != 1) {
    throw InvalidInput("classifier input must contain exactly one MASK token (found " + std::to_string(count) + ")");
  }
  return pos;
}

Forward forward(const ClassifierParams& p, const TokenSeq& input, TuningMode mode) {
  const auto& c = p.config();
  const auto& pv = p.values();
  const std::size_t d = c.embed_dim;
  if (input.empty()) throw InvalidInput("classifier input is empty");
  for (TokenId id : input) {
    if (id >= c.vocab_size) throw InvalidInput("classifier input token " + std::to_string(id) + " out of range");
  }

  Forward f;
  f.n_prompt = mode == TuningMode::SpTune ? c.prompt_len : 0;
  f.n = f.n_prompt + input.size();
  f.X.assign(f.n * d, 0.0);
  const auto prompt = pv.segment(kPrompt);
  const auto emb = pv.segment(kEmbedding);
  std::copy_n(prompt.begin(), f.n_prompt * d, f.X.begin());
  for (std::size_t i = 0; i < input.size(); ++i) {
    std::copy_n(emb.begin() + input[i] * d, d, f.X.begin() + (f.n_prompt + i) * d);
  }

  if (mode == TuningMode::LoRA) {
    f.Wq = effective_weight(pv.segment(kWq), pv.segment(kLoraAq), pv.segment(kLoraBq), c.lora_alpha, d, c.lora_rank);
    f.Wv = effective_weight(pv.segment(kWv), pv.segment(kLoraAv), pv.segment(kLoraBv), c.lora_alpha, d, c.lora_rank);
  } else {
    f.Wq.assign(pv.segment(kWq).begin(), pv.segment(kWq).end());
    f.Wv.assign(pv.segment(kWv).begin(), pv.segment(kWv).end());
  }
  const auto Wk = pv.segment(kWk);
  const auto Wo = pv.segment(kWo);

  f.Q.assign(f.n * d, 0.0);
  f.K.assign(f.n * d, 0.0);
  f.V.assign(f.n * d, 0.0);
  auto row = [d](std::vector<double>& m, std::size_t i) { return std::span<double>(m).subspan(i * d, d); };
  for (std::size_t i = 0; i < f.n; ++i) {
    const auto x = std::span<const double>(f.X).subspan(i * d, d);
    matvec(f.Wq, d, d, x, row(f.Q, i));
    matvec(Wk, d, d, x, row(f.K, i));
    matvec(f.Wv, d, d, x, row(f.V, i));
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  f.A.assign(f.n * f.n, 0.0);
  f.O.assign(f.n * d, 0.0);
  f.H.assign(f.n * d, 0.0);
  std::vector<double> scores(f.n), tmp(d);
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.n; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += f.Q[i * d + a] * f.K[j * d + a];
      scores[j] = s * scale;
    }
    const auto probs = softmax(scores);
    for (std::size_t j = 0; j < f.n; ++j) {
      f.A[i * f.n + j] = probs[j];
      for (std::size_t a = 0; a < d; ++a) f.O[i * d + a] += probs[j] * f.V[j * d + a];
    }
    matvec(Wo, d, d, std::span<const double>(f.O).subspan(i * d, d), tmp);
    for (std::size_t a = 0; a < d; ++a) f.H[i * d + a] = f.X[i * d + a] + tmp[a];
  }
  return f;
}

std::vector<double> mlm_logits(const ClassifierParams& p, const Forward& f, const Verbalizer& verbalizer) {
  const auto& c = p.config();
  const std::size_t d = c.embed_dim, V = c.vocab_size;
  const auto head = p.values().segment(kLmHead);
  const auto h = std::span<const double>(f.H).subspan(f.mask_row * d, d);
  std::vector<double> logits(verbalizer.num_labels(), 0.0);
  for (std::size_t y = 0; y < verbalizer.num_labels(); ++y) {
    const TokenId tok = verbalizer.token(y);
    for (std::size_t k = 0; k < d; ++k) logits[y] += head[k * V + tok] * h[k];
  }
  return logits;
}

struct ClsActivations {
  std::vector<double> pooled, pre1, act1, logits;
};

ClsActivations cls_activations(const ClassifierParams& p, const Forward& f) {
  const auto& c = p.config();
  const auto& pv = p.values();
  const std::size_t d = c.embed_dim, D = c.cls_hidden, C = c.num_labels;
  ClsActivations a;
  a.pooled.assign(d, 0.0);
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t k = 0; k < d; ++k) a.pooled[k] += f.H[i * d + k];
  }
  for (double& v : a.pooled) v /= static_cast<double>(f.n);
  a.pre1.resize(D);
  matvec(pv.segment(kClsW1), D, d, a.pooled, a.pre1);
  const auto b1 = pv.segment(kClsB1);
  a.act1.resize(D);
  for (std::size_t k = 0; k < D; ++k) {
    a.pre1[k] += b1[k];
    a.act1[k] = gelu(a.pre1[k]);
  }
  a.logits.resize(C);
  matvec(pv.segment(kClsW2), C, D, a.act1, a.logits);
  const auto b2 = pv.segment(kClsB2);
  for (std::size_t y = 0; y < C; ++y) a.logits[y] += b2[y];
  return a;
}

void check_label(std::size_t y, std::size_t num_labels) {
  if (y >= num_labels) throw InvalidInput("label " + std::to_string(y) + " out of range");
}

void check_verbalizer(const ClassifierParams& p, const Verbalizer& verbalizer) {
  if (verbalizer.num_labels() != p.config().num_labels) {
    throw InvalidInput("verbalizer label count does not match classifier");
  }
  for (TokenId t : verbalizer.tokens()) {
    if (t >= p.config().vocab_size) throw InvalidInput("verbalizer token out of range");
  }
}

// Backpropagates dH through the residual attention block. Accumulates
// weight gradients into `grad` and returns dX (n x d).
std::vector<double> attention_backward(const ClassifierParams& p, const Forward& f, std::span<const double> dH,
                                       TuningMode mode, GradientAccumulator& grad) {
  const auto& c = p.config();
  const auto& pv = p.values();
  const std::size_t d = c.embed_dim, n = f.n;
  const auto Wk = pv.segment(kWk);
  const auto Wo = pv.segment(kWo);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<double> dX(dH.begin(), dH.end());
  std::vector<double> dO(n * d, 0.0), dQ(n * d, 0.0), dK(n * d, 0.0), dV(n * d, 0.0);
  std::vector<double> dWq(d * d, 0.0), dWv(d * d, 0.0);
  auto gWo = grad.segment(kWo);
  auto gWk = grad.segment(kWk);
  auto crow = [d](const std::vector<double>& m, std::size_t i) {
    return std::span<const double>(m).subspan(i * d, d);
  };
  auto mrow = [d](std::vector<double>& m, std::size_t i) { return std::span<double>(m).subspan(i * d, d); };

  std::vector<double> dA(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dh = dH.subspan(i * d, d);
    if (std::all_of(dh.begin(), dh.end(), [](double v) { return v == 0.0; })) continue;
    outer_add(gWo, dh, crow(f.O, i));
    matvec_t_add(Wo, d, d, dh, mrow(dO, i));

    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += dO[i * d + a] * f.V[j * d + a];
      dA[j] = s;
      weighted += f.A[i * n + j] * s;
      for (std::size_t a = 0; a < d; ++a) dV[j * d + a] += f.A[i * n + j] * dO[i * d + a];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double ds = f.A[i * n + j] * (dA[j] - weighted) * scale;
      for (std::size_t a = 0; a < d; ++a) {
        dQ[i * d + a] += ds * f.K[j * d + a];
        dK[j * d + a] += ds * f.Q[i * d + a];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = crow(f.X, i);
    outer_add(dWq, crow(dQ, i), x);
    outer_add(gWk, crow(dK, i), x);
    outer_add(dWv, crow(dV, i), x);
    matvec_t_add(f.Wq, d, d, crow(dQ, i), mrow(dX, i));
    matvec_t_add(Wk, d, d, crow(dK, i), mrow(dX, i));
    matvec_t_add(f.Wv, d, d, crow(dV, i), mrow(dX, i));
  }

  auto gWq = grad.segment(kWq);
  auto gWv = grad.segment(kWv);
  for (std::size_t i = 0; i < d * d; ++i) {
    gWq[i] += dWq[i];
    gWv[i] += dWv[i];
  }
  if (mode == TuningMode::LoRA) {
    const std::size_t r = c.lora_rank;
    const double s = c.lora_alpha / static_cast<double>(r);
    auto lora_grads = [&](const std::vector<double>& dW, const char* a_name, const char* b_name) {
      const auto A = pv.segment(a_name);
      const auto B = pv.segment(b_name);
      auto gA = grad.segment(a_name);
      auto gB = grad.segment(b_name);
      // dA = s B^T dW ; dB = s dW A^T
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < d; ++i) acc += B[i * r + k] * dW[i * d + j];
          gA[k * d + j] += s * acc;
        }
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += dW[i * d + j] * A[k * d + j];
          gB[i * r + k] += s * acc;
        }
      }
    };
    lora_grads(dWq, kLoraAq, kLoraBq);
    lora_grads(dWv, kLoraAv, kLoraBv);
  }
  return dX;
}

// Gradient of log P(y|input) with respect to the final hidden states (n x d);
// also writes head-parameter gradients into `grad`.
std::vector<double> head_backward(const ClassifierParams& p, const Forward& f, std::size_t y,
                                  const Verbalizer& verbalizer, TuningMode mode, GradientAccumulator& grad) {
  const auto& c = p.config();
  const auto& pv = p.values();
  const std::size_t d = c.embed_dim;
  std::vector<double> dH(f.n * d, 0.0);

  if (mode == TuningMode::ClsTune) {
    const std::size_t D = c.cls_hidden, C = c.num_labels;
    const auto act = cls_activations(p, f);
    const auto probs = softmax(act.logits);
    std::vector<double> g2(C), dact(D, 0.0), dpre(D), dpooled(d, 0.0);
    for (std::size_t k = 0; k < C; ++k) g2[k] = (k == y ? 1.0 : 0.0) - probs[k];
    outer_add(grad.segment(kClsW2), g2, act.act1);
    auto gb2 = grad.segment(kClsB2);
    for (std::size_t k = 0; k < C; ++k) gb2[k] += g2[k];
    matvec_t_add(pv.segment(kClsW2), C, D, g2, dact);
    for (std::size_t k = 0; k < D; ++k) dpre[k] = dact[k] * gelu_derivative(act.pre1[k]);
    outer_add(grad.segment(kClsW1), dpre, act.pooled);
    auto gb1 = grad.segment(kClsB1);
    for (std::size_t k = 0; k < D; ++k) gb1[k] += dpre[k];
    matvec_t_add(pv.segment(kClsW1), D, d, dpre, dpooled);
    for (std::size_t i = 0; i < f.n; ++i) {
      for (std::size_t k = 0; k < d; ++k) dH[i * d + k] = dpooled[k] / static_cast<double>(f.n);
    }
    return dH;
  }

  const std::size_t V = c.vocab_size;
  const auto logits = mlm_logits(p, f, verbalizer);
  const auto probs = softmax(logits);
  const auto head = pv.segment(kLmHead);
  auto g_head = grad.segment(kLmHead);
  const auto h = std::span<const double>(f.H).subspan(f.mask_row * d, d);
  for (std::size_t label = 0; label < verbalizer.num_labels(); ++label) {
    const double g = (label == y ? 1.0 : 0.0) - probs[label];
    const TokenId tok = verbalizer.token(label);
    for (std::size_t k = 0; k < d; ++k) {
      g_head[k * V + tok] += h[k] * g;
      dH[f.mask_row * d + k] += head[k * V + tok] * g;
    }
  }
  return dH;
}

// Scatter dX rows back into the embedding and prompt tables.
void embedding_backward(const ClassifierParams& p, const Forward& f, const TokenSeq& input,
                        std::span<const double> dX, GradientAccumulator& grad) {
  const std::size_t d = p.config().embed_dim;
  auto g_prompt = grad.segment(kPrompt);
  auto g_emb = grad.segment(kEmbedding);
  for (std::size_t i = 0; i < f.n_prompt; ++i) {
    for (std::size_t k = 0; k < d; ++k) g_prompt[i * d + k] += dX[i * d + k];
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t row = f.n_prompt + i;
    for (std::size_t k = 0; k < d; ++k) g_emb[input[i] * d + k] += dX[row * d + k];
  }
}

}  // namespace

std::string_view to_string(TuningMode mode) {
  switch (mode) {
    case TuningMode::None: return "GS";
    case TuningMode::AllTune: return "AllTune";
    case TuningMode::HTune: return "HTune";
    case TuningMode::InTune: return "InTune";
    case TuningMode::ClsTune: return "ClsTune";
    case TuningMode::SpTune: return "SpTune";
    case TuningMode::LoRA: return "LoRA";
  }
  return "unknown";
}

TuningMode parse_tuning_mode(std::string_view name) {
  static constexpr std::array<TuningMode, 7> all = {TuningMode::None,    TuningMode::AllTune, TuningMode::HTune,
                                                    TuningMode::InTune,  TuningMode::ClsTune, TuningMode::SpTune,
                                                    TuningMode::LoRA};
  for (TuningMode m : all) {
    if (to_string(m) == name) return m;
  }
  if (name == "None") return TuningMode::None;
  throw InvalidInput("unknown tuning mode '" + std::string(name) + "'");
}

std::span<const TuningMode> parameterized_modes() {
  static constexpr std::array<TuningMode, 6> modes = {TuningMode::AllTune, TuningMode::HTune,  TuningMode::InTune,
                                                      TuningMode::ClsTune, TuningMode::SpTune, TuningMode::LoRA};
  return modes;
}

std::vector<std::string> trainable_segments(TuningMode mode) {
  switch (mode) {
    case TuningMode::None: return {};
    case TuningMode::AllTune: return {kEmbedding, kWq, kWk, kWv, kWo, kLmHead};
    case TuningMode::HTune: return {kLmHead};
    case TuningMode::InTune: return {kEmbedding};
    case TuningMode::ClsTune: return {kClsW1, kClsB1, kClsW2, kClsB2};
    case TuningMode::SpTune: return {kPrompt};
    case TuningMode::LoRA: return {kLoraAq, kLoraBq, kLoraAv, kLoraBv};
  }
  return {};
}

Verbalizer::Verbalizer(std::vector<TokenId> tokens, std::size_t vocab_size) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InvalidInput("verbalizer needs at least one label");
  std::set<TokenId> seen;
  for (TokenId t : tokens_) {
    if (t >= vocab_size) throw InvalidInput("verbalizer token " + std::to_string(t) + " out of range");
    if (!seen.insert(t).second) throw InvalidInput("verbalizer tokens must be distinct");
  }
}

ClassifierParams::ClassifierParams(const ClassifierConfig& config, TuningMode mode)
    : config_(config), mode_(mode), values_(classifier_layout(config)) {
  if (config.embed_dim == 0) throw InvalidInput("classifier embed_dim must be positive");
  if (config.lora_rank == 0 || config.lora_rank > config.embed_dim) {
    throw InvalidInput("LoRA rank must be in [1, embed_dim]");
  }
  if (config.num_labels < 2) throw InvalidInput("classifier needs at least two labels");
  if (config.mask_id >= config.vocab_size) throw InvalidInput("mask id out of range");
}

ClassifierParams ClassifierParams::random(const ClassifierConfig& config, TuningMode mode, std::uint64_t seed) {
  ClassifierParams p(config, mode);
  std::mt19937_64 rng(seed);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
  auto fill = [&](std::string_view name, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : p.values_.segment(name)) v = dist(rng);
  };
  fill(kEmbedding, 1.0);
  fill(kPrompt, 1.0);
  fill(kWq, inv_sqrt_d);
  fill(kWk, inv_sqrt_d);
  fill(kWv, inv_sqrt_d);
  fill(kWo, inv_sqrt_d);
  fill(kLmHead, inv_sqrt_d);
  fill(kLoraAq, 0.02);
  fill(kLoraAv, 0.02);
  // B stays zero: LoRA starts as the identity update.
  fill(kClsW1, inv_sqrt_d);
  fill(kClsW2, 1.0 / std::sqrt(static_cast<double>(config.cls_hidden)));
  return p;
}

std::vector<bool> ClassifierParams::trainable_mask(TuningMode mode) const {
  const auto names = trainable_segments(mode);
  std::vector<bool> mask;
  for (const auto& seg : values_.layout().segments()) {
    mask.push_back(std::find(names.begin(), names.end(), seg.name) != names.end());
  }
  return mask;
}

std::vector<LogProb> label_logprobs(const ClassifierParams& params, const TokenSeq& input,
                                    const Verbalizer& verbalizer) {
  check_verbalizer(params, verbalizer);
  const std::size_t mask_pos = find_mask(params.config(), input);
  auto f = forward(params, input, params.mode());
  if (params.mode() == TuningMode::ClsTune) return log_softmax(cls_activations(params, f).logits);
  f.mask_row = f.n_prompt + mask_pos;
  return log_softmax(mlm_logits(params, f, verbalizer));
}

double reward(const ClassifierParams& params, const TokenSeq& z, std::size_t y, const Verbalizer& verbalizer) {
  check_label(y, verbalizer.num_labels());
  return label_logprobs(params, z, verbalizer)[y];
}

GradientAccumulator classifier_grad(const ClassifierParams& params, const TokenSeq& input, std::size_t y,
                                    const Verbalizer& verbalizer, TuningMode mode) {
  check_verbalizer(params, verbalizer);
  check_label(y, verbalizer.num_labels());
  const std::size_t mask_pos = find_mask(params.config(), input);
  GradientAccumulator full = ParamVector::zeros_like(params.values());
  if (mode == TuningMode::None) return full;

  auto f = forward(params, input, mode);
  f.mask_row = f.n_prompt + mask_pos;
  const auto dH = head_backward(params, f, y, verbalizer, mode, full);
  if (mode != TuningMode::HTune && mode != TuningMode::ClsTune) {
    const auto dX = attention_backward(params, f, dH, mode, full);
    embedding_backward(params, f, input, dX, full);
  }

  GradientAccumulator out = ParamVector::zeros_like(params.values());
  for (const auto& name : trainable_segments(mode)) {
    auto src = full.segment(name);
    std::copy(src.begin(), src.end(), out.segment(name).begin());
  }
  return out;
}

std::vector<double> input_embedding_grad(const ClassifierParams& params, const TokenSeq& input, std::size_t y,
                                         const Verbalizer& verbalizer) {
  check_verbalizer(params, verbalizer);
  check_label(y, verbalizer.num_labels());
  const std::size_t mask_pos = find_mask(params.config(), input);
  const TuningMode mode = params.mode();
  auto f = forward(params, input, mode);
  f.mask_row = f.n_prompt + mask_pos;
  GradientAccumulator scratch = ParamVector::zeros_like(params.values());
  const auto dH = head_backward(params, f, y, verbalizer, mode, scratch);
  const auto dX = attention_backward(params, f, dH, mode, scratch);
  const std::size_t d = params.config().embed_dim;
  return std::vector<double>(dX.begin() + static_cast<std::ptrdiff_t>(f.n_prompt * d), dX.end());
}

std::vector<double> lora_apply(std::span<const double> W, std::span<const double> A, std::span<const double> B,
                               double alpha, std::size_t r, std::span<const double> v) {
  const std::size_t d = v.size();
  if (r == 0) throw InvalidInput("lora_apply: rank must be positive");
  if (W.size() != d * d) throw InvalidInput("lora_apply: W must be d x d");
  if (A.size() != r * d || B.size() != d * r) throw InvalidInput("lora_apply: rank mismatch between A, B and r");
  std::vector<double> out(d), av(r), bav(d);
  matvec(W, d, d, v, out);
  matvec(A, r, d, v, av);
  matvec(B, d, r, av, bav);
  const double s = alpha / static_cast<double>(r);
  for (std::size_t i = 0; i < d; ++i) out[i] += s * bav[i];
  return out;
}

std::vector<double> pooled_hidden(const ClassifierParams& params, const TokenSeq& input) {
  const auto f = forward(params, input, params.mode());
  return cls_activations(params, f).pooled;
}

std::vector<LogProb> cls_forward(const ClassifierParams& params, const TokenSeq& input) {
  const auto f = forward(params, input, params.mode());
  return log_softmax(cls_activations(params, f).logits);
}

std::size_t argmax_label(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("argmax_label: no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace riff
