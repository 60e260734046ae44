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

#include "riff/promptsearch.hpp"

#include <algorithm>
#include <numeric>

#include "riff/error.hpp"

namespace riff {

double instruction_loglik(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                          std::span<const TokenId> instruction, std::span<const Example> minibatch) {
  double total = 0.0;
  for (const auto& ex : minibatch) {
    total += label_logprobs(classifier, format_input(tmpl, instruction, ex.x), verbalizer)[ex.y];
  }
  return total;
}

std::vector<TokenId> gs_candidates(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                   const TaskTemplate& tmpl, std::span<const TokenId> instruction,
                                   std::size_t position, std::span<const Example> minibatch, std::size_t k,
                                   std::span<const TokenId> banned) {
  if (minibatch.empty()) throw InvalidInput("gs_candidates: empty minibatch");
  if (position >= instruction.size()) throw InvalidInput("gs_candidates: position outside the instruction");
  if (k == 0) throw InvalidInput("gs_candidates: k must be >= 1");
  const std::size_t d = classifier.config().embed_dim;
  const std::size_t V = classifier.config().vocab_size;
  // The instruction starts right after BOS in both template variants.
  const std::size_t row = 1 + position;

  std::vector<double> grad(d, 0.0);
  for (const auto& ex : minibatch) {
    const auto input = format_input(tmpl, instruction, ex.x);
    const auto g = input_embedding_grad(classifier, input, ex.y, verbalizer);
    for (std::size_t a = 0; a < d; ++a) grad[a] += g[row * d + a];
  }

  const auto emb = classifier.values().segment("token_embedding");
  std::vector<double> score(V, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t a = 0; a < d; ++a) score[v] += emb[v * d + a] * grad[a];
  }
  std::vector<TokenId> order;
  for (std::size_t v = 0; v < V; ++v) {
    if (std::find(banned.begin(), banned.end(), static_cast<TokenId>(v)) == banned.end()) {
      order.push_back(static_cast<TokenId>(v));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return score[a] > score[b]; });
  if (order.size() > k) order.resize(k);
  return order;
}

GsStepResult gs_step(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                     std::span<const TokenId> instruction, std::span<const Example> minibatch, std::size_t k,
                     std::mt19937_64& rng) {
  if (instruction.empty()) throw InvalidInput("gs_step: empty instruction");
  GsStepResult result;
  result.instruction.assign(instruction.begin(), instruction.end());
  result.position = std::uniform_int_distribution<std::size_t>(0, instruction.size() - 1)(rng);
  result.incumbent_loglik = instruction_loglik(classifier, verbalizer, tmpl, instruction, minibatch);
  result.best_loglik = result.incumbent_loglik;

  const TokenId banned[] = {kEos, tmpl.mask};
  const auto candidates =
      gs_candidates(classifier, verbalizer, tmpl, instruction, result.position, minibatch, k, banned);
  Instruction trial(instruction.begin(), instruction.end());
  for (TokenId cand : candidates) {
    if (cand == instruction[result.position]) continue;
    trial[result.position] = cand;
    const double ll = instruction_loglik(classifier, verbalizer, tmpl, trial, minibatch);
    if (ll > result.best_loglik) {
      result.best_loglik = ll;
      result.instruction = trial;
    }
  }
  return result;
}

GsSearchResult gs_search(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                         const Instruction& initial, std::span<const Example> train, std::size_t steps,
                         std::size_t batch_size, std::size_t k, std::uint64_t seed) {
  if (train.empty()) throw InvalidInput("gs_search: no training examples");
  if (batch_size == 0) throw InvalidInput("gs_search: batch_size must be positive");
  std::mt19937_64 rng(seed);
  GsSearchResult out;
  out.instruction = initial;
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Example> batch;
  for (std::size_t s = 0; s < steps; ++s) {
    std::shuffle(idx.begin(), idx.end(), rng);
    batch.clear();
    for (std::size_t i = 0; i < std::min(batch_size, idx.size()); ++i) batch.push_back(train[idx[i]]);
    auto step = gs_step(classifier, verbalizer, tmpl, out.instruction, batch, k, rng);
    out.instruction = step.instruction;
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace riff
