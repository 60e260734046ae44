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

#include "riff/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "riff/error.hpp"

namespace riff {
namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& j, const std::string& field) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(field, "expected a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        throw ConfigError(field, "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(field, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError(field, "expected a string");
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

template <typename T>
std::vector<T> get_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array");
  std::vector<T> out;
  for (const auto& v : j) out.push_back(get_as<T>(v, field));
  return out;
}

template <typename Fn>
auto parse_enum(const json& j, const std::string& field, Fn parse) {
  const auto name = get_as<std::string>(j, field);
  try {
    return parse(name);
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
}

using Setter = std::function<void(RunConfig&, const json&)>;

#define RIFF_FIELD(name) \
  { #name, [](RunConfig& c, const json& j) { c.name = get_as<decltype(c.name)>(j, #name); } }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      RIFF_FIELD(name),
      {"seeds", [](RunConfig& c, const json& j) { c.seeds = get_list<std::uint64_t>(j, "seeds"); }},
      RIFF_FIELD(vocab_size),
      RIFF_FIELD(num_labels),
      RIFF_FIELD(n_shot),
      RIFF_FIELD(pool_size),
      RIFF_FIELD(test_size),
      RIFF_FIELD(data_seed),
      RIFF_FIELD(dataset_path),
      RIFF_FIELD(template_path),
      {"instruction", [](RunConfig& c, const json& j) { c.instruction = get_list<TokenId>(j, "instruction"); }},
      RIFF_FIELD(policy_embed_dim),
      RIFF_FIELD(policy_hidden_dim),
      RIFF_FIELD(policy_max_len),
      RIFF_FIELD(pretrain_epochs),
      RIFF_FIELD(pretrain_lr),
      RIFF_FIELD(policy_checkpoint),
      RIFF_FIELD(classifier_embed_dim),
      RIFF_FIELD(prompt_len),
      RIFF_FIELD(lora_rank),
      RIFF_FIELD(lora_alpha),
      RIFF_FIELD(cls_hidden),
      RIFF_FIELD(classifier_max_len),
      RIFF_FIELD(classifier_pretrain_examples),
      RIFF_FIELD(classifier_pretrain_steps),
      RIFF_FIELD(classifier_pretrain_lr),
      RIFF_FIELD(classifier_checkpoint),
      {"estimator", [](RunConfig& c, const json& j) { c.estimator = parse_enum(j, "estimator", parse_estimator); }},
      {"regime", [](RunConfig& c, const json& j) { c.regime = parse_enum(j, "regime", parse_regime); }},
      {"decoder", [](RunConfig& c, const json& j) { c.decoder = parse_enum(j, "decoder", parse_decode_scheme); }},
      RIFF_FIELD(normalize),
      {"beta",
       [](RunConfig& c, const json& j) {
         if (j.is_null()) {
           c.beta.reset();
         } else {
           c.beta = get_as<double>(j, "beta");
         }
       }},
      RIFF_FIELD(M),
      RIFF_FIELD(top_p),
      RIFF_FIELD(temperature),
      RIFF_FIELD(diversity_penalty),
      RIFF_FIELD(repetition_penalty),
      RIFF_FIELD(lr),
      RIFF_FIELD(weight_decay),
      RIFF_FIELD(steps),
      RIFF_FIELD(batch_size),
      RIFF_FIELD(checkpoint_interval),
      RIFF_FIELD(evaluate_checkpoints),
      {"tuning_mode",
       [](RunConfig& c, const json& j) { c.tuning_mode = parse_enum(j, "tuning_mode", parse_tuning_mode); }},
      {"classifier_lr",
       [](RunConfig& c, const json& j) {
         if (j.is_null()) {
           c.classifier_lr.reset();
         } else {
           c.classifier_lr = get_as<double>(j, "classifier_lr");
         }
       }},
      RIFF_FIELD(classifier_steps),
      RIFF_FIELD(classifier_M),
      RIFF_FIELD(gs_k),
      RIFF_FIELD(gs_batch_size),
      RIFF_FIELD(gs_steps),
      RIFF_FIELD(workers),
  };
  return table;
}

#undef RIFF_FIELD

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

double default_learning_rate(TuningMode mode) {
  switch (mode) {
    case TuningMode::AllTune: return 1e-5;
    case TuningMode::InTune:
    case TuningMode::HTune:
    case TuningMode::ClsTune:
    case TuningMode::SpTune: return 1e-3;
    case TuningMode::LoRA: return 1e-4;
    case TuningMode::None: return 0.0;
  }
  return 0.0;
}

double RunConfig::effective_beta() const {
  if (beta) return *beta;
  return estimator == EstimatorKind::MML ? 0.1 : 0.6;
}

double RunConfig::effective_classifier_lr() const {
  return classifier_lr ? *classifier_lr : default_learning_rate(tuning_mode);
}

DecodeConfig RunConfig::decode_config(std::uint64_t seed) const {
  DecodeConfig d;
  d.M = M;
  d.p = top_p;
  d.temperature = temperature;
  d.diversity_penalty = diversity_penalty;
  d.repetition_penalty = repetition_penalty;
  d.seed = seed;
  return d;
}

EstimatorSpec RunConfig::estimator_spec() const {
  return EstimatorSpec{estimator, regime, normalize, effective_beta()};
}

void RunConfig::validate() const {
  require(!name.empty() && name.find('/') == std::string::npos, "name", "must be a non-empty directory name");
  require(!seeds.empty(), "seeds", "needs at least one seed");
  require(num_labels >= 2, "num_labels", "must be >= 2");
  require(vocab_size >= 2 * num_labels + 4, "vocab_size", "must be >= 2 * num_labels + 4");
  require(n_shot >= 1, "n_shot", "must be >= 1");
  require(pool_size >= 2 * n_shot * num_labels, "pool_size", "must hold 2 * n_shot examples per label");
  require(policy_embed_dim >= 1, "policy_embed_dim", "must be >= 1");
  require(policy_hidden_dim >= 1, "policy_hidden_dim", "must be >= 1");
  require(policy_max_len >= 2, "policy_max_len", "must be >= 2");
  require(finite_nonneg(pretrain_lr), "pretrain_lr", "must be finite and >= 0");
  require(classifier_embed_dim >= 1, "classifier_embed_dim", "must be >= 1");
  require(lora_rank >= 1 && lora_rank <= classifier_embed_dim, "lora_rank", "must be in [1, classifier_embed_dim]");
  require(std::isfinite(lora_alpha) && lora_alpha > 0.0, "lora_alpha", "must be positive");
  require(cls_hidden >= 1, "cls_hidden", "must be >= 1");
  require(classifier_max_len >= policy_max_len + instruction.size() + 4, "classifier_max_len",
          "must fit the template around a policy_max_len paraphrase");
  require(finite_nonneg(classifier_pretrain_lr), "classifier_pretrain_lr", "must be finite and >= 0");
  for (TokenId t : instruction) {
    require(t != kEos && t < vocab_size - 3, "instruction", "ids must be content tokens below vocab_size - 3");
  }
  require(!beta || finite_nonneg(*beta), "beta", "must be finite and >= 0");
  require(M >= 1, "M", "must be >= 1");
  require(decoder != DecodeScheme::Mixed || M % 2 == 0, "M", "must be even for mixed decoding");
  require(top_p > 0.0 && top_p <= 1.0, "top_p", "must lie in (0, 1]");
  require(std::isfinite(temperature) && temperature > 0.0, "temperature", "must be positive");
  require(finite_nonneg(diversity_penalty), "diversity_penalty", "must be >= 0");
  require(std::isfinite(repetition_penalty) && repetition_penalty >= 1.0, "repetition_penalty", "must be >= 1");
  require(finite_nonneg(lr), "lr", "must be finite and >= 0");
  require(finite_nonneg(weight_decay), "weight_decay", "must be finite and >= 0");
  require(steps >= 1, "steps", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(checkpoint_interval >= 1, "checkpoint_interval", "must be >= 1");
  require(!classifier_lr || finite_nonneg(*classifier_lr), "classifier_lr", "must be finite and >= 0");
  require(classifier_steps >= 1, "classifier_steps", "must be >= 1");
  require(gs_k >= 1, "gs_k", "must be >= 1");
  require(gs_batch_size >= 1, "gs_batch_size", "must be >= 1");
  require(workers >= 1, "workers", "must be >= 1");
}

nlohmann::json to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["seeds"] = c.seeds;
  j["vocab_size"] = c.vocab_size;
  j["num_labels"] = c.num_labels;
  j["n_shot"] = c.n_shot;
  j["pool_size"] = c.pool_size;
  j["test_size"] = c.test_size;
  j["data_seed"] = c.data_seed;
  j["dataset_path"] = c.dataset_path;
  j["template_path"] = c.template_path;
  j["instruction"] = c.instruction;
  j["policy_embed_dim"] = c.policy_embed_dim;
  j["policy_hidden_dim"] = c.policy_hidden_dim;
  j["policy_max_len"] = c.policy_max_len;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["pretrain_lr"] = c.pretrain_lr;
  j["policy_checkpoint"] = c.policy_checkpoint;
  j["classifier_embed_dim"] = c.classifier_embed_dim;
  j["prompt_len"] = c.prompt_len;
  j["lora_rank"] = c.lora_rank;
  j["lora_alpha"] = c.lora_alpha;
  j["cls_hidden"] = c.cls_hidden;
  j["classifier_max_len"] = c.classifier_max_len;
  j["classifier_pretrain_examples"] = c.classifier_pretrain_examples;
  j["classifier_pretrain_steps"] = c.classifier_pretrain_steps;
  j["classifier_pretrain_lr"] = c.classifier_pretrain_lr;
  j["classifier_checkpoint"] = c.classifier_checkpoint;
  j["estimator"] = std::string(to_string(c.estimator));
  j["regime"] = std::string(to_string(c.regime));
  j["decoder"] = std::string(to_string(c.decoder));
  j["normalize"] = c.normalize;
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  j["M"] = c.M;
  j["top_p"] = c.top_p;
  j["temperature"] = c.temperature;
  j["diversity_penalty"] = c.diversity_penalty;
  j["repetition_penalty"] = c.repetition_penalty;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["evaluate_checkpoints"] = c.evaluate_checkpoints;
  j["tuning_mode"] = std::string(to_string(c.tuning_mode));
  j["classifier_lr"] = c.classifier_lr ? json(*c.classifier_lr) : json(nullptr);
  j["classifier_steps"] = c.classifier_steps;
  j["classifier_M"] = c.classifier_M;
  j["gs_k"] = c.gs_k;
  j["gs_batch_size"] = c.gs_batch_size;
  j["gs_steps"] = c.gs_steps;
  j["workers"] = c.workers;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown field");
    it->second(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace riff
