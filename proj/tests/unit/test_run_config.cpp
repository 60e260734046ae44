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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "riff/error.hpp"
#include "riff/run_config.hpp"

namespace riff {
namespace {

std::string error_field(const nlohmann::json& j) {
  try {
    run_config_from_json(j).validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(RunConfig, DefaultsValidate) {
  const RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.effective_beta(), 0.1);
  RunConfig pg = cfg;
  pg.estimator = EstimatorKind::PG;
  EXPECT_EQ(pg.effective_beta(), 0.6);
  pg.beta = 0.25;
  EXPECT_EQ(pg.effective_beta(), 0.25);
  EXPECT_EQ(cfg.effective_classifier_lr(), default_learning_rate(TuningMode::LoRA));
  EXPECT_EQ(default_learning_rate(TuningMode::AllTune), 1e-5);
  EXPECT_EQ(default_learning_rate(TuningMode::SpTune), 1e-3);
  EXPECT_EQ(default_learning_rate(TuningMode::LoRA), 1e-4);
  const auto dc = cfg.decode_config(7);
  EXPECT_EQ(dc.M, 8u);
  EXPECT_EQ(dc.seed, 7u);
  EXPECT_EQ(dc.p, 0.99);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig cfg;
  cfg.name = "x";
  cfg.seeds = {3, 9};
  cfg.estimator = EstimatorKind::PG;
  cfg.regime = PolicyRegime::Off;
  cfg.decoder = DecodeScheme::TopP;
  cfg.normalize = false;
  cfg.beta = 0.3;
  cfg.classifier_lr = 2e-3;
  cfg.tuning_mode = TuningMode::SpTune;
  cfg.instruction = {4, 5};
  cfg.lr = 0.1 + 0.2;
  EXPECT_EQ(run_config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(run_config_from_json(nlohmann::json::parse(to_json(cfg).dump())), cfg);
  EXPECT_EQ(run_config_from_json(nlohmann::json::object()), RunConfig{});
}

TEST(RunConfig, ErrorsNameTheField) {
  EXPECT_EQ(error_field({{"bogus", 1}}), "bogus");
  EXPECT_EQ(error_field({{"M", 7}}), "M");
  EXPECT_EQ(error_field({{"M", "eight"}}), "M");
  EXPECT_EQ(error_field({{"top_p", 1.5}}), "top_p");
  EXPECT_EQ(error_field({{"estimator", "reinforce"}}), "estimator");
  EXPECT_EQ(error_field({{"repetition_penalty", 0.5}}), "repetition_penalty");
  EXPECT_EQ(error_field({{"beta", -0.1}}), "beta");
  EXPECT_EQ(error_field({{"steps", 0}}), "steps");
  EXPECT_EQ(error_field({{"seeds", nlohmann::json::array()}}), "seeds");
  EXPECT_EQ(error_field({{"M", 8}}), "");
  EXPECT_THROW(run_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(RunConfig, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "riff_cfg.json";
  std::ofstream(path) << R"({"name": "file", "steps": 16})";
  const auto cfg = load_run_config(path);
  EXPECT_EQ(cfg.name, "file");
  EXPECT_EQ(cfg.steps, 16u);
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_run_config(path), ConfigError);
  EXPECT_THROW(load_run_config(path.string() + ".missing"), ConfigError);
}

}  // namespace
}  // namespace riff
