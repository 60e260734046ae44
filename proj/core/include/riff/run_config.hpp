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
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "riff/classifier.hpp"
#include "riff/decoding.hpp"
#include "riff/estimators.hpp"

namespace riff {

/// Flat experiment configuration. Every field has a default; JSON input may
/// override any subset. Unknown keys are rejected.
struct RunConfig {
  std::string name = "riff";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  // synthetic task
  std::size_t vocab_size = 20;
  std::size_t num_labels = 2;
  std::size_t n_shot = 16;
  std::size_t pool_size = 600;  // generated train-side pool the few-shot splits draw from
  std::size_t test_size = 200;
  std::uint64_t data_seed = 1234;
  std::string dataset_path;  // optional JSONL overriding the synthetic pool
  std::string template_path;
  std::vector<TokenId> instruction;

  // paraphraser
  std::size_t policy_embed_dim = 8;
  std::size_t policy_hidden_dim = 16;
  std::size_t policy_max_len = 24;
  std::size_t pretrain_epochs = 15;
  double pretrain_lr = 1e-2;
  std::string policy_checkpoint;

  // downstream classifier
  std::size_t classifier_embed_dim = 8;
  std::size_t prompt_len = 5;
  std::size_t lora_rank = 2;
  double lora_alpha = 32.0;
  std::size_t cls_hidden = 16;
  std::size_t classifier_max_len = 48;
  std::size_t classifier_pretrain_examples = 48;
  std::size_t classifier_pretrain_steps = 60;
  double classifier_pretrain_lr = 1e-2;
  std::string classifier_checkpoint;

  // paraphraser fine-tuning
  EstimatorKind estimator = EstimatorKind::MML;
  PolicyRegime regime = PolicyRegime::KLOn;
  DecodeScheme decoder = DecodeScheme::Mixed;
  bool normalize = true;
  std::optional<double> beta;  // defaults: 0.1 for MML, 0.6 for PG
  std::size_t M = 8;
  double top_p = 0.99;
  double temperature = 0.7;
  double diversity_penalty = 3.0;
  double repetition_penalty = 10.0;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t steps = 64;
  std::size_t batch_size = 8;
  std::size_t checkpoint_interval = 8;
  bool evaluate_checkpoints = true;

  // classifier training with paraphrases
  TuningMode tuning_mode = TuningMode::LoRA;
  std::optional<double> classifier_lr;  // defaults to the per-mode table
  std::size_t classifier_steps = 64;
  std::size_t classifier_M = 8;

  // instruction search
  std::size_t gs_k = 4;
  std::size_t gs_batch_size = 2;
  std::size_t gs_steps = 100;

  std::size_t workers = 1;

  bool operator==(const RunConfig&) const = default;

  double effective_beta() const;
  double effective_classifier_lr() const;
  DecodeConfig decode_config(std::uint64_t seed) const;
  EstimatorSpec estimator_spec() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Per-mode learning rates (GS has none).
double default_learning_rate(TuningMode mode);

nlohmann::json to_json(const RunConfig& cfg);
/// Throws ConfigError for unknown keys, wrong types and invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace riff
