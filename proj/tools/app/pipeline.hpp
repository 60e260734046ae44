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
#include "riff/data.hpp"
#include "riff/run_config.hpp"
#include "riff/seqpolicy.hpp"
#include "riff/trainer.hpp"

namespace riff::app {

/// Everything a stage needs that is shared across seeds.
struct Task {
  SyntheticVocab vocab{20, 2};
  Dataset dataset;
  TaskTemplate tmpl;
  Verbalizer verbalizer;
};

Task prepare_task(const RunConfig& cfg);

/// Output root: $RIFF_OUT, else ./riff_out.
std::filesystem::path output_root();
std::filesystem::path run_dir(const std::filesystem::path& root, const RunConfig& cfg, std::uint64_t seed);
std::filesystem::path pretrain_dir(const std::filesystem::path& root, const RunConfig& cfg);

struct Pretrained {
  PolicyParams policy;
  ClassifierParams classifier;
  std::string policy_file;
  std::string classifier_file;
};

/// MLE training of the paraphraser on rule-based rewrites of the task pool,
/// and brief supervised training of the classifier on a disjoint synthetic
/// pool. Both are deterministic in cfg.data_seed.
Pretrained pretrain(const RunConfig& cfg, const Task& task);

/// Loads configured checkpoints, then any saved under pretrain_dir, and
/// otherwise pretrains and saves there.
Pretrained ensure_pretrained(const RunConfig& cfg, const Task& task, const std::filesystem::path& root);

struct FinetuneSummary {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  double baseline_accuracy = 0.0;
  double best_accuracy = 0.0;
  std::size_t best_step = 0;
  std::size_t num_checkpoints = 0;
  double epochs = 0.0;
};

/// Paraphraser fine-tuning for one seed. Writes metrics.csv, checkpoints/
/// and manifest.json into run_dir(root, cfg, seed).
FinetuneSummary run_finetune(const RunConfig& cfg, const Task& task, const Pretrained& pre,
                             const std::filesystem::path& root, std::uint64_t seed);

struct ClassifierSummary {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  double best_validation_accuracy = 0.0;
  std::size_t best_step = 0;
  double test_accuracy = 0.0;
  double test_accuracy_plain = 0.0;
};

/// Classifier training with cached paraphrases from `paraphraser`. Writes
/// into run_dir(root, cfg, seed)/classifier_<mode>.
ClassifierSummary run_train_classifier(const RunConfig& cfg, const Task& task, const Pretrained& pre,
                                       const PolicyParams& paraphraser, const std::filesystem::path& root,
                                       std::uint64_t seed);

/// Best fine-tuned paraphraser recorded in a finished run directory.
PolicyParams load_best_paraphraser(const std::filesystem::path& dir);

struct OracleReport {
  double max_rel_error_mml = 0.0;
  double max_rel_error_klon = 0.0;
  double max_abs_beta0_diff = 0.0;
  std::size_t instances = 0;
};

/// Exact-enumeration gradients against central finite differences on random
/// tiny instances (V <= 4, max_len <= 4, d = 4).
OracleReport oracle_suite(std::uint64_t seed, std::size_t instances = 20);

struct GridCell {
  EstimatorKind estimator;
  PolicyRegime regime;
  DecodeScheme decoder;
  bool normalize;
};

std::string cell_name(const std::string& base, const GridCell& cell);
std::vector<GridCell> grid_cells(const std::vector<EstimatorKind>& estimators, const std::vector<PolicyRegime>& regimes,
                                 const std::vector<DecodeScheme>& decoders, const std::vector<bool>& normalize);

struct ReportRow {
  std::string name;
  std::size_t seeds = 0;
  double best_mean = 0.0;
  double best_std = 0.0;
  double checkpoint_mean = 0.0;
  bool complete = true;
  std::string note;
};

/// Aggregates <dir>/<seed>/metrics.csv for every run directory: mean and
/// population std over seeds of the best validation accuracy, and the mean
/// over all (seed, checkpoint) accuracies. Step 0 is excluded.
std::vector<ReportRow> build_report(const std::vector<std::filesystem::path>& run_dirs);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_text(const std::vector<ReportRow>& rows);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace riff::app
