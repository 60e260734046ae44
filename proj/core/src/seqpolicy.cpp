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

#include "riff/seqpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "riff/error.hpp"
#include "riff/optimizer.hpp"

namespace riff {
namespace {

constexpr const char* kEmbedding = "token_embedding";
constexpr const char* kRecurWeight = "recurrence_weight";
constexpr const char* kRecurBias = "recurrence_bias";
constexpr const char* kHead = "output_head";

Layout policy_layout(const PolicyConfig& c) {
  Layout layout;
  layout.add(kEmbedding, c.vocab_size * c.embed_dim)
      .add(kRecurWeight, c.hidden_dim * 2 * c.embed_dim)
      .add(kRecurBias, c.hidden_dim)
      .add(kHead, c.hidden_dim * c.vocab_size);
  return layout;
}

void check_ids(const PolicyConfig& c, const TokenSeq& seq, const char* what) {
  if (seq.empty()) throw InvalidInput(std::string(what) + ": empty sequence");
  for (TokenId id : seq) {
    if (id >= c.vocab_size) {
      throw InvalidInput(std::string(what) + ": token id " + std::to_string(id) + " >= vocab size " +
                         std::to_string(c.vocab_size));
    }
  }
}

void check_target(const PolicyConfig& c, const TokenSeq& z) {
  check_ids(c, z, "paraphrase");
  if (z.size() > c.max_len) {
    throw InvalidInput("paraphrase longer than max_len (" + std::to_string(z.size()) + " > " +
                       std::to_string(c.max_len) + ")");
  }
}

// Decoder state for one step; kept so the backward pass can reuse it.
struct StepCache {
  std::vector<double> input;  // [context ; emb(prev)]
  std::vector<double> state;  // tanh activations
  std::vector<double> logits;
};

void forward_step(const PolicyParams& params, std::span<const double> context, TokenId prev, StepCache& cache) {
  const auto& c = params.config();
  const std::size_t d = c.embed_dim, h = c.hidden_dim, V = c.vocab_size;
  const auto emb = params.values().segment(kEmbedding);
  const auto w = params.values().segment(kRecurWeight);
  const auto b = params.values().segment(kRecurBias);
  const auto head = params.values().segment(kHead);

  cache.input.resize(2 * d);
  std::copy(context.begin(), context.end(), cache.input.begin());
  std::copy_n(emb.begin() + prev * d, d, cache.input.begin() + d);

  cache.state.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    double a = b[k];
    for (std::size_t j = 0; j < 2 * d; ++j) a += w[k * 2 * d + j] * cache.input[j];
    cache.state[k] = std::tanh(a);
  }
  cache.logits.assign(V, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double s = cache.state[k];
    for (std::size_t v = 0; v < V; ++v) cache.logits[v] += head[k * V + v] * s;
  }
}

}  // namespace

PolicyParams::PolicyParams(const PolicyConfig& config) : config_(config), values_(policy_layout(config)) {
  if (config.vocab_size < 2) throw InvalidInput("policy vocab_size must be >= 2");
  if (config.embed_dim == 0 || config.hidden_dim == 0) throw InvalidInput("policy dimensions must be positive");
  if (config.max_len == 0) throw InvalidInput("policy max_len must be positive");
}

PolicyParams PolicyParams::random(const PolicyConfig& config, std::uint64_t seed, double scale) {
  PolicyParams p(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::string_view name, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev * scale);
    for (double& v : p.values_.segment(name)) v = dist(rng);
  };
  fill(kEmbedding, 1.0);
  fill(kRecurWeight, 1.0 / std::sqrt(2.0 * static_cast<double>(config.embed_dim)));
  fill(kRecurBias, 0.1);
  fill(kHead, 1.0 / std::sqrt(static_cast<double>(config.hidden_dim)));
  return p;
}

PolicySnapshot snapshot(const PolicyParams& params) { return PolicySnapshot(params); }

std::vector<double> encode_context(const PolicyParams& params, const TokenSeq& x) {
  const auto& c = params.config();
  check_ids(c, x, "input");
  const auto emb = params.values().segment(kEmbedding);
  std::vector<double> ctx(c.embed_dim, 0.0);
  for (TokenId id : x) {
    for (std::size_t j = 0; j < c.embed_dim; ++j) ctx[j] += emb[id * c.embed_dim + j];
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  for (double& v : ctx) v *= inv;
  return ctx;
}

std::vector<double> step_logits(const PolicyParams& params, std::span<const double> context, TokenId prev) {
  if (prev >= params.config().vocab_size) throw InvalidInput("step_logits: previous token out of range");
  StepCache cache;
  forward_step(params, context, prev, cache);
  return std::move(cache.logits);
}

LogProb seq_logprob(const PolicyParams& params, const TokenSeq& x, const TokenSeq& z) {
  check_target(params.config(), z);
  const auto ctx = encode_context(params, x);
  StepCache cache;
  LogProb total = 0.0;
  TokenId prev = kEos;
  for (TokenId tok : z) {
    forward_step(params, ctx, prev, cache);
    total += log_softmax(cache.logits)[tok];
    prev = tok;
  }
  return total;
}

std::pair<LogProb, GradientAccumulator> seq_logprob_and_grad(const PolicyParams& params, const TokenSeq& x,
                                                             const TokenSeq& z) {
  const auto& c = params.config();
  check_target(c, z);
  const std::size_t d = c.embed_dim, h = c.hidden_dim, V = c.vocab_size;
  const auto ctx = encode_context(params, x);
  const auto w = params.values().segment(kRecurWeight);
  const auto head = params.values().segment(kHead);

  GradientAccumulator grad = ParamVector::zeros_like(params.values());
  auto g_emb = grad.segment(kEmbedding);
  auto g_w = grad.segment(kRecurWeight);
  auto g_b = grad.segment(kRecurBias);
  auto g_head = grad.segment(kHead);

  std::vector<double> g_ctx(d, 0.0), g_logits(V), g_state(h), g_pre(h);
  StepCache cache;
  LogProb total = 0.0;
  TokenId prev = kEos;
  for (TokenId tok : z) {
    forward_step(params, ctx, prev, cache);
    const auto ls = log_softmax(cache.logits);
    total += ls[tok];

    for (std::size_t v = 0; v < V; ++v) g_logits[v] = (v == tok ? 1.0 : 0.0) - std::exp(ls[v]);
    for (std::size_t k = 0; k < h; ++k) {
      double acc = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        g_head[k * V + v] += cache.state[k] * g_logits[v];
        acc += head[k * V + v] * g_logits[v];
      }
      g_state[k] = acc;
      g_pre[k] = acc * (1.0 - cache.state[k] * cache.state[k]);
    }
    for (std::size_t k = 0; k < h; ++k) {
      g_b[k] += g_pre[k];
      for (std::size_t j = 0; j < 2 * d; ++j) g_w[k * 2 * d + j] += g_pre[k] * cache.input[j];
    }
    for (std::size_t j = 0; j < 2 * d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < h; ++k) acc += w[k * 2 * d + j] * g_pre[k];
      if (j < d) {
        g_ctx[j] += acc;
      } else {
        g_emb[prev * d + (j - d)] += acc;
      }
    }
    prev = tok;
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  for (TokenId id : x) {
    for (std::size_t j = 0; j < d; ++j) g_emb[id * d + j] += g_ctx[j] * inv;
  }
  return {total, std::move(grad)};
}

GradientAccumulator seq_logprob_grad(const PolicyParams& params, const TokenSeq& x, const TokenSeq& z) {
  return seq_logprob_and_grad(params, x, z).second;
}

double mean_target_nll(const PolicyParams& params, std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  if (pairs.empty()) throw InvalidInput("mean_target_nll: no pairs");
  double sum = 0.0;
  for (const auto& [x, z] : pairs) sum -= seq_logprob(params, x, z);
  return sum / static_cast<double>(pairs.size());
}

PolicyParams pretrain_mle(const PolicyParams& params, std::span<const std::pair<TokenSeq, TokenSeq>> pairs,
                          const PretrainOptions& options, std::vector<double>* epoch_nll) {
  if (pairs.empty()) throw InvalidInput("pretrain_mle: no training pairs");
  if (options.batch_size == 0) throw InvalidInput("pretrain_mle: batch_size must be positive");
  PolicyParams out = params;
  AdamW opt(AdamWConfig{.lr = options.lr, .weight_decay = options.weight_decay});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  if (epoch_nll) epoch_nll->push_back(mean_target_nll(out, pairs));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      GradientAccumulator loss_grad = ParamVector::zeros_like(out.values());
      const double w = -1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& [x, z] = pairs[order[i]];
        loss_grad.axpy(w, seq_logprob_grad(out, x, z));
      }
      opt.step(out.values(), loss_grad);
    }
    if (epoch_nll) epoch_nll->push_back(mean_target_nll(out, pairs));
  }
  return out;
}

}  // namespace riff
