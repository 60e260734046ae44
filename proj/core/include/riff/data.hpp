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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riff/tokens.hpp"

namespace riff {

/// Id layout of the synthetic task vocabulary of size V with C labels:
///
///   0                 EOS
///   1 .. 2C           label families, two synonyms each (family c: 1+2c, 2+2c)
///   2C+1 .. V-4       label-neutral distractors
///   V-3, V-2, V-1     BOS, SEP, MASK
///
/// Ids below V-3 form the paraphraser vocabulary.
class SyntheticVocab {
 public:
  SyntheticVocab(std::size_t vocab_size, std::size_t num_labels);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_labels() const { return num_labels_; }
  std::size_t policy_vocab_size() const { return vocab_size_ - 3; }
  std::size_t num_distractors() const { return vocab_size_ - 4 - 2 * num_labels_; }

  TokenId family_token(std::size_t label, std::size_t synonym) const {
    return static_cast<TokenId>(1 + 2 * label + synonym);
  }
  TokenId distractor(std::size_t k) const { return static_cast<TokenId>(1 + 2 * num_labels_ + k); }
  TokenId bos() const { return static_cast<TokenId>(vocab_size_ - 3); }
  TokenId sep() const { return static_cast<TokenId>(vocab_size_ - 2); }
  TokenId mask() const { return static_cast<TokenId>(vocab_size_ - 1); }

  /// Label family of `id`, if it belongs to one.
  std::optional<std::size_t> family_of(TokenId id) const;
  TokenId synonym_of(TokenId id) const;
  std::string token_text(TokenId id) const;
  std::string text(const TokenSeq& seq) const;

 private:
  std::size_t vocab_size_;
  std::size_t num_labels_;
};

struct Example {
  std::size_t id = 0;
  TokenSeq x;  // content + EOS, before templating
  std::size_t y = 0;
  std::string text;
};

struct Dataset {
  std::size_t vocab_size = 0;
  std::size_t num_labels = 0;
  std::vector<Example> train;
  std::vector<Example> test;
};

struct TaskTemplate {
  std::vector<TokenId> instruction;
  bool mask_first = false;
  TokenId bos = 0;
  TokenId sep = 0;
  TokenId mask = 0;
  std::size_t max_len = 48;

  static TaskTemplate for_vocab(const SyntheticVocab& vocab);
};

/// BOS instruction text SEP MASK EOS, or BOS instruction MASK SEP text EOS
/// when mask_first. Throws InvalidInput if the result exceeds max_len.
TokenSeq format_input(const TaskTemplate& tmpl, std::span<const TokenId> instruction, const TokenSeq& x);
inline TokenSeq format_input(const TaskTemplate& tmpl, const TokenSeq& x) {
  return format_input(tmpl, tmpl.instruction, x);
}

/// Balanced synthetic sentiment-style task: each example carries 8..16
/// content tokens and its label is the family with the most occurrences.
Dataset gen_synthetic_task(std::size_t vocab_size, std::size_t num_labels, std::size_t n_train, std::size_t n_test,
                           std::uint64_t seed);

/// Majority-vote over family counts; the generating rule itself.
std::size_t rule_label(const TokenSeq& x, const SyntheticVocab& vocab);

/// Rule-based paraphrase targets: family tokens swap to their synonym with
/// probability 1/2 and stay in place; the remaining positions are shuffled
/// within consecutive windows of three.
std::vector<std::pair<TokenSeq, TokenSeq>> gen_rewriter_corpus(std::span<const Example> examples,
                                                               const SyntheticVocab& vocab, std::uint64_t seed);

/// JSONL with one {"text": "<space separated ids>" | [ids], "label": y} per line.
std::vector<Example> load_examples_jsonl(const std::filesystem::path& path);
void save_examples_jsonl(const std::filesystem::path& path, std::span<const Example> examples);

/// {"instruction": [ids], "mask_first": bool}; special ids come from `base`.
TaskTemplate load_template_json(const std::filesystem::path& path, const TaskTemplate& base);

}  // namespace riff
