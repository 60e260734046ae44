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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riff/tokens.hpp"

namespace riff {

/// Clipped n-gram overlap F1 (n = 1 or 2), no stemming. Zero when either
/// side has no n-grams.
double rouge_n(std::span<const TokenId> a, std::span<const TokenId> b, int n);

/// 1 - (rouge_1 + rouge_2) / 2. Throws InvalidInput on empty input.
double lexical_diversity(std::span<const TokenId> original, std::span<const TokenId> paraphrase);

/// Mean lexical_diversity over all unordered pairs; needs >= 2 entries.
double pairwise_ld(std::span<const std::vector<TokenId>> paraphrases);

/// Lowercase whitespace tokenization for free text, mapped to stable ids.
std::vector<std::vector<TokenId>> tokenize_texts(std::span<const std::string> texts);

struct ScorePair {
  std::string id;
  std::string text_a;
  std::string text_b;
};

struct ScoreResult {
  std::string id;
  double score = 0.0;
};

/// Runs `adapter_cmd` with JSONL requests {"id","text_a","text_b"} on stdin
/// and reads JSONL responses {"id","score"} from stdout. Results come back
/// in request order, matched by id. Throws std::runtime_error on a non-zero
/// exit, a malformed line, or an id mismatch. An empty request list never
/// invokes the adapter.
std::vector<ScoreResult> external_score(const std::string& adapter_cmd, std::span<const ScorePair> pairs);

}  // namespace riff
