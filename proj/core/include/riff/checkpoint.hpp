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
#include <string>

#include "riff/classifier.hpp"
#include "riff/seqpolicy.hpp"

namespace riff {

/// Binary checkpoint layout (all integers and reals little-endian):
///
///   char[8]  magic "RIFFCKPT"
///   u32      format version (1)
///   u32      model kind (0 = policy, 1 = classifier)
///   u32      V, d, h, max_len       classifier: h = cls hidden, max_len = max input length
///   u32      tuning mode            policy: 0
///   u32      C, L, r, mask id       policy: all 0
///   f64      lora alpha             policy: 0
///   u32      segment count
///   per segment: u32 name length, name bytes, u64 value count
///   f64[]    segment values, in declared segment order
inline constexpr char kCheckpointMagic[8] = {'R', 'I', 'F', 'F', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { Policy = 0, Classifier = 1 };

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
void save_checkpoint(const std::filesystem::path& path, const ClassifierParams& params);

PolicyParams load_policy_checkpoint(const std::filesystem::path& path);
ClassifierParams load_classifier_checkpoint(const std::filesystem::path& path);

/// Serialized bytes, as written to disk.
std::string checkpoint_bytes(const PolicyParams& params);
std::string checkpoint_bytes(const ClassifierParams& params);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace riff
