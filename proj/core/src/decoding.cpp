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

#include "riff/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "riff/error.hpp"

namespace riff {
namespace {

std::vector<std::size_t> sorted_by_prob(std::span<const double> probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

TokenSeq finish(std::vector<TokenId> ids) { return TokenSeq::from_ids(std::move(ids)); }

}  // namespace

void DecodeConfig::validate(bool mixed) const {
  if (M == 0) throw InvalidInput("decode: M must be >= 1");
  if (mixed && M % 2 != 0) throw InvalidInput("decode: mixed decoding needs an even M");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("decode: p must lie in (0, 1]");
  if (!(temperature > 0.0)) throw InvalidInput("decode: temperature must be positive");
  if (!(diversity_penalty >= 0.0)) throw InvalidInput("decode: diversity_penalty must be >= 0");
  if (!(repetition_penalty >= 1.0)) throw InvalidInput("decode: repetition_penalty must be >= 1");
}

std::string_view to_string(DecodeScheme scheme) {
  switch (scheme) {
    case DecodeScheme::Beam: return "beam";
    case DecodeScheme::TopP: return "top_p";
    case DecodeScheme::Mixed: return "mixed";
  }
  return "unknown";
}

DecodeScheme parse_decode_scheme(std::string_view name) {
  if (name == "beam") return DecodeScheme::Beam;
  if (name == "top_p") return DecodeScheme::TopP;
  if (name == "mixed") return DecodeScheme::Mixed;
  throw InvalidInput("unknown decode scheme '" + std::string(name) + "'");
}

std::size_t nucleus_size(std::span<const double> probs, double p) {
  const auto order = sorted_by_prob(probs);
  double mass = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    mass += probs[order[k]];
    if (mass >= p) return k + 1;
  }
  return order.size();
}

TokenId nucleus_pick(std::span<const double> probs, double p, double u) {
  const auto order = sorted_by_prob(probs);
  const std::size_t keep = nucleus_size(probs, p);
  double mass = 0.0;
  for (std::size_t k = 0; k < keep; ++k) mass += probs[order[k]];
  double target = u * mass;
  for (std::size_t k = 0; k < keep; ++k) {
    target -= probs[order[k]];
    if (target < 0.0) return static_cast<TokenId>(order[k]);
  }
  return static_cast<TokenId>(order[keep - 1]);
}

std::vector<DecodedSeq> top_p_sample(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg) {
  cfg.validate();
  const auto& pc = policy.config();
  const auto ctx = encode_context(policy, x);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<DecodedSeq> out;
  out.reserve(cfg.M);
  for (std::size_t m = 0; m < cfg.M; ++m) {
    std::vector<TokenId> ids;
    TokenId prev = kEos;
    while (true) {
      if (ids.size() + 1 == pc.max_len) {
        ids.push_back(kEos);
        break;
      }
      const auto probs = softmax(step_logits(policy, ctx, prev));
      const TokenId tok = nucleus_pick(probs, cfg.p, unif(rng));
      ids.push_back(tok);
      if (tok == kEos) break;
      prev = tok;
    }
    DecodedSeq d{finish(std::move(ids)), 0.0, 0.0};
    d.logprob = seq_logprob(policy, x, d.seq);
    d.score = d.logprob;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DecodedSeq> diverse_beam(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg) {
  cfg.validate();
  const auto& pc = policy.config();
  const std::size_t V = pc.vocab_size;
  const auto ctx = encode_context(policy, x);

  struct Group {
    std::vector<TokenId> ids;
    double score = 0.0;
    bool done = false;
  };
  std::vector<Group> groups(cfg.M);
  std::vector<double> chosen_count(V);

  for (std::size_t t = 0; t < pc.max_len; ++t) {
    std::fill(chosen_count.begin(), chosen_count.end(), 0.0);
    const bool last_slot = t + 1 == pc.max_len;
    for (auto& g : groups) {
      if (g.done) continue;
      const TokenId prev = g.ids.empty() ? kEos : g.ids.back();
      auto logits = step_logits(policy, ctx, prev);
      if (cfg.repetition_penalty != 1.0) {
        std::vector<bool> seen(V, false);
        for (TokenId tok : g.ids) {
          if (seen[tok]) continue;
          seen[tok] = true;
          double& l = logits[tok];
          l = l > 0.0 ? l / cfg.repetition_penalty : l * cfg.repetition_penalty;
        }
      }
      const auto logp = log_softmax(logits, cfg.temperature);
      TokenId pick = kEos;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < V; ++v) {
        if (last_slot && v != kEos) continue;
        const double s = logp[v] - cfg.diversity_penalty * chosen_count[v];
        if (s > best) {
          best = s;
          pick = static_cast<TokenId>(v);
        }
      }
      g.ids.push_back(pick);
      g.score += best;
      chosen_count[pick] += 1.0;
      if (pick == kEos) g.done = true;
    }
  }

  std::vector<DecodedSeq> out;
  out.reserve(cfg.M);
  for (auto& g : groups) {
    DecodedSeq d{finish(std::move(g.ids)), 0.0, g.score};
    d.logprob = seq_logprob(policy, x, d.seq);
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const DecodedSeq& a, const DecodedSeq& b) { return a.score > b.score; });
  return out;
}

std::vector<DecodedSeq> merge_mixed(std::vector<DecodedSeq> beam, std::vector<DecodedSeq> nucleus, std::size_t M) {
  if (M % 2 != 0) throw InvalidInput("mixed decoding needs an even M");
  auto by_logprob = [](const DecodedSeq& a, const DecodedSeq& b) { return a.logprob > b.logprob; };
  std::stable_sort(beam.begin(), beam.end(), by_logprob);
  std::stable_sort(nucleus.begin(), nucleus.end(), by_logprob);

  std::vector<DecodedSeq> out;
  out.reserve(M);
  auto contains = [&out](const TokenSeq& s) {
    return std::any_of(out.begin(), out.end(), [&](const DecodedSeq& d) { return d.seq == s; });
  };
  // Takes up to M/2 unseen sequences from `source` in rank order; once the
  // source runs out of new sequences its best entries are repeated.
  auto take_half = [&](const std::vector<DecodedSeq>& source) {
    std::size_t taken = 0;
    for (const auto& d : source) {
      if (taken == M / 2) break;
      if (contains(d.seq)) continue;
      out.push_back(d);
      ++taken;
    }
    for (std::size_t k = 0; taken < M / 2 && !source.empty(); ++k, ++taken) {
      out.push_back(source[k % source.size()]);
    }
  };
  take_half(beam);
  take_half(nucleus);
  return out;
}

std::vector<DecodedSeq> mixed_decode(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg) {
  cfg.validate(/*mixed=*/true);
  return merge_mixed(diverse_beam(policy, x, cfg), top_p_sample(policy, x, cfg), cfg.M);
}

std::vector<DecodedSeq> decode(DecodeScheme scheme, const PolicyParams& policy, const TokenSeq& x,
                               const DecodeConfig& cfg) {
  switch (scheme) {
    case DecodeScheme::Beam: return diverse_beam(policy, x, cfg);
    case DecodeScheme::TopP: return top_p_sample(policy, x, cfg);
    case DecodeScheme::Mixed: return mixed_decode(policy, x, cfg);
  }
  throw InvalidInput("unknown decode scheme");
}

}  // namespace riff
