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

#include "riff/data.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "riff/error.hpp"

namespace riff {

using nlohmann::json;

SyntheticVocab::SyntheticVocab(std::size_t vocab_size, std::size_t num_labels)
    : vocab_size_(vocab_size), num_labels_(num_labels) {
  if (num_labels < 2) throw InvalidInput("synthetic task needs at least two labels");
  if (vocab_size < 2 * num_labels + 4) {
    throw InvalidInput("synthetic task needs V >= 2C + 4 (V=" + std::to_string(vocab_size) +
                       ", C=" + std::to_string(num_labels) + ")");
  }
}

std::optional<std::size_t> SyntheticVocab::family_of(TokenId id) const {
  if (id >= 1 && id <= 2 * num_labels_) return (id - 1) / 2;
  return std::nullopt;
}

TokenId SyntheticVocab::synonym_of(TokenId id) const {
  if (!family_of(id)) return id;
  return ((id - 1) % 2 == 0) ? id + 1 : id - 1;
}

std::string SyntheticVocab::token_text(TokenId id) const {
  if (id == kEos) return "</s>";
  if (id == bos()) return "<s>";
  if (id == sep()) return ".";
  if (id == mask()) return "<mask>";
  if (auto fam = family_of(id)) return "f" + std::to_string(*fam) + ((id - 1) % 2 == 0 ? "a" : "b");
  return "d" + std::to_string(id - 1 - 2 * num_labels_);
}

std::string SyntheticVocab::text(const TokenSeq& seq) const {
  std::string out;
  for (TokenId id : seq.content()) {
    if (!out.empty()) out += ' ';
    out += token_text(id);
  }
  return out;
}

TaskTemplate TaskTemplate::for_vocab(const SyntheticVocab& vocab) {
  TaskTemplate t;
  t.bos = vocab.bos();
  t.sep = vocab.sep();
  t.mask = vocab.mask();
  return t;
}

TokenSeq format_input(const TaskTemplate& tmpl, std::span<const TokenId> instruction, const TokenSeq& x) {
  std::vector<TokenId> ids;
  ids.reserve(instruction.size() + x.size() + 4);
  ids.push_back(tmpl.bos);
  ids.insert(ids.end(), instruction.begin(), instruction.end());
  const auto text = x.content();
  if (tmpl.mask_first) {
    ids.push_back(tmpl.mask);
    ids.push_back(tmpl.sep);
    ids.insert(ids.end(), text.begin(), text.end());
  } else {
    ids.insert(ids.end(), text.begin(), text.end());
    ids.push_back(tmpl.sep);
    ids.push_back(tmpl.mask);
  }
  ids.push_back(kEos);
  if (ids.size() > tmpl.max_len) {
    throw InvalidInput("formatted input has " + std::to_string(ids.size()) + " tokens, limit is " +
                       std::to_string(tmpl.max_len));
  }
  return TokenSeq::from_ids(std::move(ids));
}

Dataset gen_synthetic_task(std::size_t vocab_size, std::size_t num_labels, std::size_t n_train, std::size_t n_test,
                           std::uint64_t seed) {
  const SyntheticVocab vocab(vocab_size, num_labels);
  std::mt19937_64 rng(seed);
  const std::size_t total = n_train + n_test;

  std::vector<std::size_t> labels(total);
  for (std::size_t i = 0; i < total; ++i) labels[i] = i % num_labels;
  std::shuffle(labels.begin(), labels.end(), rng);

  auto uniform = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  Dataset ds;
  ds.vocab_size = vocab_size;
  ds.num_labels = num_labels;
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t y = labels[i];
    const std::size_t len = uniform(8, 16);
    const std::size_t major = uniform(3, 5);
    std::vector<TokenId> content;
    std::size_t used = major;
    for (std::size_t c = 0; c < num_labels; ++c) {
      if (c == y) continue;
      std::size_t k = uniform(0, major - 1);
      k = std::min(k, len - used);
      for (std::size_t j = 0; j < k; ++j) content.push_back(vocab.family_token(c, uniform(0, 1)));
      used += k;
    }
    std::size_t own = major;
    if (vocab.num_distractors() == 0) own += len - used;
    for (std::size_t j = 0; j < own; ++j) content.push_back(vocab.family_token(y, uniform(0, 1)));
    while (content.size() < len) content.push_back(vocab.distractor(uniform(0, vocab.num_distractors() - 1)));
    std::shuffle(content.begin(), content.end(), rng);

    Example ex;
    ex.id = i;
    ex.x = TokenSeq::from_content(content);
    ex.y = y;
    ex.text = vocab.text(ex.x);
    (i < n_train ? ds.train : ds.test).push_back(std::move(ex));
  }
  return ds;
}

std::size_t rule_label(const TokenSeq& x, const SyntheticVocab& vocab) {
  std::vector<std::size_t> counts(vocab.num_labels(), 0);
  for (TokenId id : x.content()) {
    if (auto fam = vocab.family_of(id)) ++counts[*fam];
  }
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<std::pair<TokenSeq, TokenSeq>> gen_rewriter_corpus(std::span<const Example> examples,
                                                               const SyntheticVocab& vocab, std::uint64_t seed) {
  constexpr std::size_t kShuffleWindow = 3;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution swap(0.5);
  std::vector<std::pair<TokenSeq, TokenSeq>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto src = ex.x.content();
    std::vector<TokenId> target(src.begin(), src.end());
    std::vector<std::size_t> free_positions;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (vocab.family_of(target[i])) {
        if (swap(rng)) target[i] = vocab.synonym_of(target[i]);
      } else {
        free_positions.push_back(i);
      }
    }
    for (std::size_t start = 0; start < free_positions.size(); start += kShuffleWindow) {
      const std::size_t stop = std::min(free_positions.size(), start + kShuffleWindow);
      std::vector<TokenId> window;
      for (std::size_t k = start; k < stop; ++k) window.push_back(target[free_positions[k]]);
      std::shuffle(window.begin(), window.end(), rng);
      for (std::size_t k = start; k < stop; ++k) target[free_positions[k]] = window[k - start];
    }
    out.emplace_back(ex.x, TokenSeq::from_content(target));
  }
  return out;
}

std::vector<Example> load_examples_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset " + path.string());
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      std::vector<TokenId> ids;
      const auto& text = j.at("text");
      if (text.is_array()) {
        ids = text.get<std::vector<TokenId>>();
      } else {
        std::istringstream ss(text.get<std::string>());
        for (long long v; ss >> v;) {
          if (v <= 0) throw InvalidInput("token ids must be positive (0 is EOS)");
          ids.push_back(static_cast<TokenId>(v));
        }
        if (!ss.eof()) throw InvalidInput("text must hold whitespace-separated integer ids");
      }
      Example ex;
      ex.id = out.size();
      ex.x = TokenSeq::from_content(ids);
      ex.y = j.at("label").get<std::size_t>();
      ex.text = text.is_string() ? text.get<std::string>() : ex.x.to_string();
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_examples_jsonl(const std::filesystem::path& path, std::span<const Example> examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  for (const auto& ex : examples) {
    const auto content = ex.x.content();
    out << json{{"text", std::vector<TokenId>(content.begin(), content.end())}, {"label", ex.y}}.dump() << '\n';
  }
}

TaskTemplate load_template_json(const std::filesystem::path& path, const TaskTemplate& base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open template " + path.string());
  TaskTemplate t = base;
  try {
    const auto j = json::parse(in);
    t.instruction = j.value("instruction", std::vector<TokenId>{});
    t.mask_first = j.value("mask_first", false);
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
  return t;
}

}  // namespace riff
