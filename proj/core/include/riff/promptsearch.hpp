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
#include <random>
#include <span>
#include <vector>

#include "riff/classifier.hpp"
#include "riff/data.hpp"

namespace riff {

using Instruction = std::vector<TokenId>;

/// Summed log P(y | template(instruction, x)) over the minibatch.
double instruction_loglik(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                          std::span<const TokenId> instruction, std::span<const Example> minibatch);

/// Top-k replacement tokens for instruction slot `position`, ranked by
/// w_v . grad_{e_position} sum log P(y | p, x). Ties go to the lower id;
/// `banned` ids are never returned.
std::vector<TokenId> gs_candidates(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                   const TaskTemplate& tmpl, std::span<const TokenId> instruction,
                                   std::size_t position, std::span<const Example> minibatch, std::size_t k,
                                   std::span<const TokenId> banned = {});

struct GsStepResult {
  Instruction instruction;
  std::size_t position = 0;
  double incumbent_loglik = 0.0;
  double best_loglik = 0.0;
};

/// One search iteration: random slot, k candidates, exact re-scoring on the
/// same minibatch. The incumbent is kept unless a candidate strictly beats it.
GsStepResult gs_step(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                     std::span<const TokenId> instruction, std::span<const Example> minibatch, std::size_t k,
                     std::mt19937_64& rng);

struct GsSearchResult {
  Instruction instruction;
  std::vector<GsStepResult> steps;
};

/// Repeated gs_step over random minibatches of `batch_size` train examples.
GsSearchResult gs_search(const ClassifierParams& classifier, const Verbalizer& verbalizer, const TaskTemplate& tmpl,
                         const Instruction& initial, std::span<const Example> train, std::size_t steps,
                         std::size_t batch_size, std::size_t k, std::uint64_t seed);

}  // namespace riff
