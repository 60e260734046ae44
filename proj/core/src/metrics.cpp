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

#include "riff/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "riff/error.hpp"

namespace riff {
namespace {

using Gram = std::vector<TokenId>;

std::map<Gram, std::size_t> ngram_counts(std::span<const TokenId> seq, int n) {
  std::map<Gram, std::size_t> counts;
  const auto len = static_cast<std::size_t>(n);
  if (seq.size() < len) return counts;
  for (std::size_t i = 0; i + len <= seq.size(); ++i) ++counts[Gram(seq.begin() + i, seq.begin() + i + len)];
  return counts;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

double rouge_n(std::span<const TokenId> a, std::span<const TokenId> b, int n) {
  if (n != 1 && n != 2) throw InvalidInput("rouge_n: n must be 1 or 2");
  const auto ca = ngram_counts(a, n);
  const auto cb = ngram_counts(b, n);
  if (ca.empty() || cb.empty()) return 0.0;
  std::size_t total_a = 0, total_b = 0, overlap = 0;
  for (const auto& [g, c] : ca) total_a += c;
  for (const auto& [g, c] : cb) {
    total_b += c;
    if (auto it = ca.find(g); it != ca.end()) overlap += std::min(c, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(total_b);
  const double recall = static_cast<double>(overlap) / static_cast<double>(total_a);
  return 2.0 * precision * recall / (precision + recall);
}

double lexical_diversity(std::span<const TokenId> original, std::span<const TokenId> paraphrase) {
  if (original.empty() || paraphrase.empty()) throw InvalidInput("lexical_diversity: empty input");
  return 1.0 - (rouge_n(original, paraphrase, 1) + rouge_n(original, paraphrase, 2)) / 2.0;
}

double pairwise_ld(std::span<const std::vector<TokenId>> paraphrases) {
  if (paraphrases.size() < 2) throw InvalidInput("pairwise_ld: need at least two paraphrases");
  std::vector<double> lds;
  for (std::size_t i = 0; i < paraphrases.size(); ++i) {
    for (std::size_t j = i + 1; j < paraphrases.size(); ++j) {
      lds.push_back(lexical_diversity(paraphrases[i], paraphrases[j]));
    }
  }
  // Summing in sorted order makes the result independent of input order.
  std::sort(lds.begin(), lds.end());
  double sum = 0.0;
  for (double v : lds) sum += v;
  return sum / static_cast<double>(lds.size());
}

std::vector<std::vector<TokenId>> tokenize_texts(std::span<const std::string> texts) {
  std::unordered_map<std::string, TokenId> ids;
  std::vector<std::vector<TokenId>> out;
  for (const auto& text : texts) {
    std::istringstream ss(text);
    std::vector<TokenId> toks;
    for (std::string word; ss >> word;) {
      std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
      auto [it, inserted] = ids.try_emplace(word, static_cast<TokenId>(ids.size() + 1));
      toks.push_back(it->second);
    }
    out.push_back(std::move(toks));
  }
  return out;
}

std::vector<ScoreResult> external_score(const std::string& adapter_cmd, std::span<const ScorePair> pairs) {
  using nlohmann::json;
  if (pairs.empty()) return {};

  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("riff-adapter-" + std::to_string(rd()) + std::to_string(rd()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  const fs::path request = dir / "request.jsonl";
  const fs::path response = dir / "response.jsonl";
  {
    std::ofstream out(request);
    for (const auto& p : pairs) out << json{{"id", p.id}, {"text_a", p.text_a}, {"text_b", p.text_b}}.dump() << '\n';
  }
  const std::string cmd =
      adapter_cmd + " < " + shell_quote(request.string()) + " > " + shell_quote(response.string());
  const int status = std::system(cmd.c_str());
  if (status != 0) throw std::runtime_error("external scorer failed with status " + std::to_string(status));

  std::unordered_map<std::string, double> scores;
  std::ifstream in(response);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      scores[j.at("id").get<std::string>()] = j.at("score").get<double>();
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed scorer response line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<ScoreResult> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = scores.find(p.id);
    if (it == scores.end()) throw std::runtime_error("scorer response is missing id '" + p.id + "'");
    out.push_back(ScoreResult{p.id, it->second});
  }
  if (scores.size() != pairs.size()) throw std::runtime_error("scorer response holds unknown ids");
  return out;
}

}  // namespace riff
