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
#include <span>
#include <string_view>
#include <vector>

#include "riff/seqpolicy.hpp"
#include "riff/tokens.hpp"

namespace riff {

struct DecodeConfig {
  std::size_t M = 8;
  double p = 0.99;
  double temperature = 0.7;         // diverse beam only; nucleus sampling runs at T = 1
  double diversity_penalty = 3.0;
  double repetition_penalty = 10.0;
  std::uint64_t seed = 0;

  /// Throws InvalidInput describing the first violated constraint.
  void validate(bool mixed = false) const;
};

enum class DecodeScheme { Beam, TopP, Mixed };

std::string_view to_string(DecodeScheme scheme);
DecodeScheme parse_decode_scheme(std::string_view name);

struct DecodedSeq {
  TokenSeq seq;
  LogProb logprob = 0.0;  // under the unmodified policy
  double score = 0.0;     // ranking score: penalized beam score, or logprob
};

/// Index chosen from `probs` by inverse-CDF sampling with uniform `u`
/// restricted to the nucleus: the shortest probability-sorted prefix whose
/// mass reaches `p` (ties in probability ordered by ascending id).
TokenId nucleus_pick(std::span<const double> probs, double p, double u);

/// Size of that nucleus.
std::size_t nucleus_size(std::span<const double> probs, double p);

/// M independent nucleus samples. Every sequence ends in EOS; if max_len is
/// reached first, EOS is forced into the last slot.
std::vector<DecodedSeq> top_p_sample(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg);

/// Diverse beam search with M groups of width one, ranked by cumulative
/// penalized score (best first).
std::vector<DecodedSeq> diverse_beam(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg);

/// Top M/2 of each decoder by policy log-probability, deduplicated across the
/// halves. Throws InvalidInput on odd M.
std::vector<DecodedSeq> mixed_decode(const PolicyParams& policy, const TokenSeq& x, const DecodeConfig& cfg);

/// Merge step of mixed_decode, exposed for testing.
std::vector<DecodedSeq> merge_mixed(std::vector<DecodedSeq> beam, std::vector<DecodedSeq> nucleus, std::size_t M);

std::vector<DecodedSeq> decode(DecodeScheme scheme, const PolicyParams& policy, const TokenSeq& x,
                               const DecodeConfig& cfg);

}  // namespace riff
