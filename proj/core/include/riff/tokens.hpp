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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace riff {

using TokenId = std::uint32_t;

/// End-of-sequence id shared by every vocabulary in the project.
inline constexpr TokenId kEos = 0;

/// Non-empty id sequence whose only EOS is its last element.
class TokenSeq {
 public:
  TokenSeq() = default;

  /// Validates the EOS invariants; throws InvalidInput otherwise.
  static TokenSeq from_ids(std::vector<TokenId> ids);
  static TokenSeq from_ids(std::initializer_list<TokenId> ids) {
    return from_ids(std::vector<TokenId>(ids));
  }
  /// Appends EOS to a content-only id list.
  static TokenSeq from_content(std::span<const TokenId> content);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  TokenId operator[](std::size_t i) const { return ids_[i]; }
  std::span<const TokenId> ids() const { return ids_; }
  /// Ids without the trailing EOS.
  std::span<const TokenId> content() const {
    return ids_.empty() ? std::span<const TokenId>() : std::span<const TokenId>(ids_).first(ids_.size() - 1);
  }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  std::string to_string() const;

  bool operator==(const TokenSeq&) const = default;
  auto operator<=>(const TokenSeq&) const = default;

 private:
  std::vector<TokenId> ids_;
};

}  // namespace riff
