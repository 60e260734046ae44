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

#include "riff/tokens.hpp"

#include <algorithm>

#include "riff/error.hpp"

namespace riff {

TokenSeq TokenSeq::from_ids(std::vector<TokenId> ids) {
  if (ids.empty()) throw InvalidInput("TokenSeq: empty sequence");
  if (ids.back() != kEos) throw InvalidInput("TokenSeq: sequence must end with EOS");
  if (std::count(ids.begin(), ids.end(), kEos) != 1) {
    throw InvalidInput("TokenSeq: EOS may only appear at the end");
  }
  TokenSeq seq;
  seq.ids_ = std::move(ids);
  return seq;
}

TokenSeq TokenSeq::from_content(std::span<const TokenId> content) {
  std::vector<TokenId> ids(content.begin(), content.end());
  ids.push_back(kEos);
  return from_ids(std::move(ids));
}

std::string TokenSeq::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(ids_[i]);
  }
  return out;
}

}  // namespace riff
