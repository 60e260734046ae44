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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riff/classifier.hpp"
#include "riff/data.hpp"
#include "riff/decoding.hpp"
#include "riff/estimators.hpp"
#include "riff/optimizer.hpp"
#include "riff/seqpolicy.hpp"

namespace riff {

struct FewShotSplit {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::uint64_t seed = 0;
};

/// n examples per label for train and n more per label for validation,
/// sampled without replacement. Throws InvalidInput naming the first label
/// with fewer than 2n examples.
FewShotSplit fewshot_split(std::span<const Example> examples, std::size_t num_labels, std::size_t n,
                           std::uint64_t seed);

/// The frozen classifier side of paraphraser training: the classifier, its
/// verbalizer and the template every paraphrase is placed into.
struct Downstream {
  ClassifierParams classifier;
  Verbalizer verbalizer;
  TaskTemplate tmpl;

  std::vector<LogProb> logprobs(const TokenSeq& x) const;
  /// R(z) = log P(y | template(z)).
  double reward(const TokenSeq& z, std::size_t y) const { return logprobs(z).at(y); }
};

/// Ensemble score per label: [log P(y|x)] + (1/M) sum_j log P(y|z_j).
/// Pass an empty `original` for exclusion mode. Throws InvalidInput when
/// there is nothing to score or the label counts disagree.
std::vector<double> ensemble_from_logprobs(std::span<const LogProb> original,
                                           std::span<const std::vector<LogProb>> paraphrases);

std::vector<double> ensemble_scores(const Downstream& model, const TokenSeq& x, std::span<const TokenSeq> paraphrases,
                                    bool include_original);

/// argmax of ensemble_scores; ties go to the lower label.
std::size_t ensemble_predict(const Downstream& model, const TokenSeq& x, std::span<const TokenSeq> paraphrases,
                             bool include_original);

struct Checkpoint {
  std::size_t step = 0;
  std::string file;  // empty when the checkpoint was not written to disk
  std::map<std::string, double> metrics;
  std::shared_ptr<const PolicyParams> policy;
  std::shared_ptr<const ClassifierParams> classifier;

  double metric(const std::string& name) const;
};

/// Highest `metric`; ties go to the earliest step. Throws InvalidInput on
/// an empty list.
const Checkpoint& select_best_checkpoint(std::span<const Checkpoint> checkpoints,
                                         const std::string& metric = "accuracy");

struct MetricRow {
  std::size_t step = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
};

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

struct FinetuneConfig {
  EstimatorSpec estimator;
  DecodeScheme scheme = DecodeScheme::Mixed;
  DecodeConfig decode;          // training-time sampling
  DecodeConfig eval_decode;     // validation paraphrases (diverse beam)
  AdamWConfig optimizer;
  std::size_t steps = 64;
  std::size_t batch_size = 8;
  std::size_t checkpoint_interval = 8;
  std::uint64_t seed = 0;
  bool evaluate = true;          // exclusion-mode validation accuracy per checkpoint
  std::filesystem::path checkpoint_dir;  // empty: keep checkpoints in memory only

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

std::size_t steps_per_epoch(std::size_t n_train, std::size_t batch_size);

struct TrainResult {
  Checkpoint baseline;                 // step 0, before any update
  std::vector<Checkpoint> checkpoints;  // steps interval, 2*interval, ...
  std::vector<MetricRow> metrics;
  std::size_t steps_per_epoch = 0;
  double epochs = 0.0;
  std::size_t clamp_events = 0;
};

/// Paraphraser fine-tuning. Each step takes the next minibatch of an
/// epoch-wise shuffled order, decodes M fresh paraphrases per example (from
/// the pre-trained snapshot when off-policy), scores them with the frozen
/// classifier and applies the estimator's gradient.
TrainResult finetune_paraphraser(const PolicyParams& policy, const Downstream& downstream, const FewShotSplit& split,
                                 const FinetuneConfig& cfg);

/// Exclusion-mode ensemble accuracy of `policy` over `examples`, together
/// with LD and PLD of the decoded paraphrases.
struct ParaphraseEval {
  double accuracy = 0.0;
  double ld = 0.0;
  double pld = 0.0;
};
ParaphraseEval evaluate_paraphraser(const PolicyParams& policy, const Downstream& downstream,
                                    std::span<const Example> examples, const DecodeConfig& decode);

/// Paraphrases generated once per (policy hash, example id) and reused for
/// every classifier epoch. A lookup that was never filled throws.
class ParaphraseCache {
 public:
  static ParaphraseCache build(const PolicyParams& policy, std::span<const Example> examples,
                               const DecodeConfig& decode);

  const std::string& policy_hash() const { return policy_hash_; }
  const std::vector<TokenSeq>& get(const std::string& policy_hash, std::size_t example_id) const;
  void put(const std::string& policy_hash, std::size_t example_id, std::vector<TokenSeq> paraphrases);
  std::size_t size() const { return entries_.size(); }

 private:
  std::string policy_hash_;
  std::map<std::pair<std::string, std::size_t>, std::vector<TokenSeq>> entries_;
};

/// Augmented objective over a minibatch:
///   J = sum_i [log P(y_i|x_i) + (1/M) sum_j log P(y_i|z_ij)]
/// with the first M cached paraphrases of each example, and its gradient
/// restricted to `mode`. M = 0 drops the paraphrase term.
struct ObjectiveValue {
  double value = 0.0;
  GradientAccumulator grad;
};
ObjectiveValue augmented_objective(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                   const TaskTemplate& tmpl, std::span<const Example> batch,
                                   const ParaphraseCache* cache, std::size_t M, TuningMode mode);

struct ClassifierTrainConfig {
  TuningMode mode = TuningMode::LoRA;
  std::size_t M = 8;
  AdamWConfig optimizer;
  std::size_t steps = 64;
  std::size_t batch_size = 8;
  std::size_t checkpoint_interval = 8;
  std::uint64_t seed = 0;
  bool evaluate = true;  // inclusion-mode validation accuracy per checkpoint
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

/// Classifier training on the augmented objective. The classifier's mode is
/// switched to cfg.mode; the cache must hold paraphrases for every train and
/// validation example when M > 0.
TrainResult train_classifier_augmented(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                       const TaskTemplate& tmpl, const ParaphraseCache* cache,
                                       const FewShotSplit& split, const ClassifierTrainConfig& cfg);

/// Inclusion-mode ensemble accuracy (plain accuracy when M = 0).
double classifier_accuracy(const Downstream& model, std::span<const Example> examples, const ParaphraseCache* cache,
                           std::size_t M);

}  // namespace riff
