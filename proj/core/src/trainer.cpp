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

#include "riff/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "riff/checkpoint.hpp"
#include "riff/error.hpp"
#include "riff/metrics.hpp"

namespace riff {
namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer over a simple combination.
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL ^ (b + 0xBF58476D1CE4E5B9ULL) * 0x94D049BB133111EBULL ^ (c << 17);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double ld_or_one(std::span<const TokenId> a, std::span<const TokenId> b) {
  return 1.0 - 0.5 * (rouge_n(a, b, 1) + rouge_n(a, b, 2));
}

std::string step_file(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06zu.ckpt", step);
  return buf;
}

/// Epoch-wise shuffled minibatches; the last batch of an epoch may be short.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
      : order_(n), batch_size_(batch_size), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    cursor_ = n;
  }

  std::vector<std::size_t> next() {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
    std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    return batch;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

void check_common(std::size_t steps, std::size_t batch_size, std::size_t interval, const AdamWConfig& opt) {
  if (steps == 0) throw ConfigError("steps", "must be positive");
  if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (interval == 0) throw ConfigError("checkpoint_interval", "must be positive");
  if (!(opt.lr >= 0.0) || !std::isfinite(opt.lr)) throw ConfigError("lr", "must be finite and >= 0");
  if (!(opt.weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
}

}  // namespace

FewShotSplit fewshot_split(std::span<const Example> examples, std::size_t num_labels, std::size_t n,
                           std::uint64_t seed) {
  if (n == 0) throw InvalidInput("fewshot_split: n must be positive");
  std::vector<std::vector<std::size_t>> by_label(num_labels);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].y >= num_labels) {
      throw InvalidInput("fewshot_split: example " + std::to_string(examples[i].id) + " has label " +
                         std::to_string(examples[i].y) + " outside [0, " + std::to_string(num_labels) + ")");
    }
    by_label[examples[i].y].push_back(i);
  }
  FewShotSplit split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t y = 0; y < num_labels; ++y) {
    auto& idx = by_label[y];
    if (idx.size() < 2 * n) {
      throw InvalidInput("fewshot_split: label " + std::to_string(y) + " has " + std::to_string(idx.size()) +
                         " examples, needs " + std::to_string(2 * n));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < n; ++k) split.train.push_back(examples[idx[k]]);
    for (std::size_t k = n; k < 2 * n; ++k) split.validation.push_back(examples[idx[k]]);
  }
  return split;
}

std::vector<LogProb> Downstream::logprobs(const TokenSeq& x) const {
  return label_logprobs(classifier, format_input(tmpl, x), verbalizer);
}

std::vector<double> ensemble_from_logprobs(std::span<const LogProb> original,
                                           std::span<const std::vector<LogProb>> paraphrases) {
  if (original.empty() && paraphrases.empty()) {
    throw InvalidInput("ensemble: exclusion mode needs at least one paraphrase");
  }
  const std::size_t C = original.empty() ? paraphrases.front().size() : original.size();
  std::vector<double> scores(C, 0.0);
  if (!original.empty()) std::copy(original.begin(), original.end(), scores.begin());
  if (paraphrases.empty()) return scores;
  std::vector<double> mean(C, 0.0);
  for (const auto& lp : paraphrases) {
    if (lp.size() != C) throw InvalidInput("ensemble: label count mismatch");
    for (std::size_t y = 0; y < C; ++y) mean[y] += lp[y];
  }
  const double inv = 1.0 / static_cast<double>(paraphrases.size());
  for (std::size_t y = 0; y < C; ++y) scores[y] += mean[y] * inv;
  return scores;
}

std::vector<double> ensemble_scores(const Downstream& model, const TokenSeq& x, std::span<const TokenSeq> paraphrases,
                                    bool include_original) {
  if (!include_original && paraphrases.empty()) {
    throw InvalidInput("ensemble: exclusion mode needs at least one paraphrase");
  }
  std::vector<LogProb> original;
  if (include_original) original = model.logprobs(x);
  std::vector<std::vector<LogProb>> para;
  para.reserve(paraphrases.size());
  for (const auto& z : paraphrases) para.push_back(model.logprobs(z));
  return ensemble_from_logprobs(original, para);
}

std::size_t ensemble_predict(const Downstream& model, const TokenSeq& x, std::span<const TokenSeq> paraphrases,
                             bool include_original) {
  return argmax_label(ensemble_scores(model, x, paraphrases, include_original));
}

double Checkpoint::metric(const std::string& name) const {
  const auto it = metrics.find(name);
  if (it == metrics.end()) throw InvalidInput("checkpoint at step " + std::to_string(step) + " has no metric " + name);
  return it->second;
}

const Checkpoint& select_best_checkpoint(std::span<const Checkpoint> checkpoints, const std::string& metric) {
  if (checkpoints.empty()) throw InvalidInput("select_best_checkpoint: no checkpoints");
  const Checkpoint* best = &checkpoints.front();
  for (const auto& c : checkpoints) {
    const double v = c.metric(metric);
    const double b = best->metric(metric);
    if (v > b || (v == b && c.step < best->step)) best = &c;
  }
  return *best;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,split,metric,value\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.step << ',' << r.split << ',' << r.metric << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "step,split,metric,value") {
    throw std::runtime_error(path.string() + ": missing metrics header");
  }
  std::vector<MetricRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string step, split, metric, value;
    if (!std::getline(ss, step, ',') || !std::getline(ss, split, ',') || !std::getline(ss, metric, ',') ||
        !std::getline(ss, value)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    try {
      rows.push_back({std::stoull(step), split, metric, std::stod(value)});
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

void FinetuneConfig::validate() const {
  check_common(steps, batch_size, checkpoint_interval, optimizer);
  if (!(estimator.beta >= 0.0) || !std::isfinite(estimator.beta)) throw ConfigError("beta", "must be finite and >= 0");
  if (decode.M == 0) throw ConfigError("M", "must be >= 1");
  if (scheme == DecodeScheme::Mixed && decode.M % 2 != 0) throw ConfigError("M", "must be even for mixed decoding");
  try {
    decode.validate(scheme == DecodeScheme::Mixed);
    eval_decode.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("decode", e.what());
  }
}

std::size_t steps_per_epoch(std::size_t n_train, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  return (n_train + batch_size - 1) / batch_size;
}

ParaphraseEval evaluate_paraphraser(const PolicyParams& policy, const Downstream& downstream,
                                    std::span<const Example> examples, const DecodeConfig& decode) {
  if (examples.empty()) throw InvalidInput("evaluate_paraphraser: no examples");
  ParaphraseEval out;
  std::size_t correct = 0;
  double ld_sum = 0.0;
  std::size_t ld_count = 0;
  double pld_sum = 0.0;
  for (const auto& ex : examples) {
    const auto decoded = diverse_beam(policy, ex.x, decode);
    std::vector<TokenSeq> paraphrases;
    for (const auto& d : decoded) paraphrases.push_back(d.seq);
    if (ensemble_predict(downstream, ex.x, paraphrases, /*include_original=*/false) == ex.y) ++correct;

    const auto orig = ex.x.content();
    std::vector<std::span<const TokenId>> contents;
    for (const auto& z : paraphrases) contents.push_back(z.content());
    for (const auto& c : contents) {
      ld_sum += ld_or_one(orig, c);
      ++ld_count;
    }
    if (contents.size() >= 2) {
      double s = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < contents.size(); ++a) {
        for (std::size_t b = a + 1; b < contents.size(); ++b) {
          s += ld_or_one(contents[a], contents[b]);
          ++pairs;
        }
      }
      pld_sum += s / static_cast<double>(pairs);
    }
  }
  const double n = static_cast<double>(examples.size());
  out.accuracy = static_cast<double>(correct) / n;
  out.ld = ld_sum / static_cast<double>(ld_count);
  out.pld = pld_sum / n;
  return out;
}

TrainResult finetune_paraphraser(const PolicyParams& policy, const Downstream& downstream, const FewShotSplit& split,
                                 const FinetuneConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw InvalidInput("finetune_paraphraser: empty train split");
  if (cfg.evaluate && split.validation.empty()) throw InvalidInput("finetune_paraphraser: empty validation split");

  PolicyParams current = policy;
  const PolicySnapshot fixed = snapshot(policy);
  AdamW optimizer(cfg.optimizer);
  BatchSampler sampler(split.train.size(), cfg.batch_size, mix_seed(cfg.seed, 0, 0));

  TrainResult result;
  result.steps_per_epoch = steps_per_epoch(split.train.size(), cfg.batch_size);
  result.epochs = static_cast<double>(cfg.steps) / static_cast<double>(result.steps_per_epoch);

  auto make_checkpoint = [&](std::size_t step) {
    Checkpoint c;
    c.step = step;
    c.policy = std::make_shared<const PolicyParams>(current);
    if (!cfg.checkpoint_dir.empty()) {
      const auto path = cfg.checkpoint_dir / step_file(step);
      save_checkpoint(path, current);
      c.file = path.string();
    }
    if (cfg.evaluate) {
      const auto ev = evaluate_paraphraser(current, downstream, split.validation, cfg.eval_decode);
      c.metrics = {{"accuracy", ev.accuracy}, {"ld", ev.ld}, {"pld", ev.pld}};
      for (const auto& [name, value] : c.metrics) result.metrics.push_back({step, "validation", name, value});
    }
    return c;
  };

  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
  result.baseline = make_checkpoint(0);

  const PolicyParams& fixed_params = fixed.params();
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const auto batch = sampler.next();
    GradientAccumulator total = ParamVector::zeros_like(current.values());
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    std::size_t clamps = 0;
    for (const std::size_t idx : batch) {
      const Example& ex = split.train[idx];
      DecodeConfig dc = cfg.decode;
      dc.seed = mix_seed(cfg.seed, step, ex.id);
      const PolicyParams& source = cfg.estimator.regime == PolicyRegime::Off ? fixed_params : current;
      const auto decoded = decode(cfg.scheme, source, ex.x, dc);

      SampleBatch samples;
      std::vector<GradientAccumulator> grads;
      samples.samples.reserve(decoded.size());
      grads.reserve(decoded.size());
      for (const auto& d : decoded) {
        auto [lp, g] = seq_logprob_and_grad(current, ex.x, d.seq);
        SampleRecord rec{d.seq, lp, seq_logprob(fixed_params, ex.x, d.seq), downstream.reward(d.seq, ex.y)};
        reward_sum += rec.reward;
        ++reward_count;
        samples.samples.push_back(std::move(rec));
        grads.push_back(std::move(g));
      }
      const auto est = estimate_gradient(samples, grads, cfg.estimator);
      clamps += est.clamp_events;
      total.axpy(1.0 / static_cast<double>(batch.size()), est.gradient);
    }
    total.check_finite("paraphraser gradient");
    // The estimators return an ascent direction; the optimizer minimizes.
    total.scale(-1.0);
    optimizer.step(current.values(), total);

    result.clamp_events += clamps;
    result.metrics.push_back({step, "train", "mean_reward", reward_sum / static_cast<double>(reward_count)});
    if (clamps > 0) result.metrics.push_back({step, "train", "clamp_events", static_cast<double>(clamps)});
    if (step % cfg.checkpoint_interval == 0) result.checkpoints.push_back(make_checkpoint(step));
  }
  return result;
}

ParaphraseCache ParaphraseCache::build(const PolicyParams& policy, std::span<const Example> examples,
                                       const DecodeConfig& decode) {
  ParaphraseCache cache;
  cache.policy_hash_ = sha256_hex(checkpoint_bytes(policy));
  for (const auto& ex : examples) {
    std::vector<TokenSeq> seqs;
    for (const auto& d : diverse_beam(policy, ex.x, decode)) seqs.push_back(d.seq);
    cache.put(cache.policy_hash_, ex.id, std::move(seqs));
  }
  return cache;
}

const std::vector<TokenSeq>& ParaphraseCache::get(const std::string& policy_hash, std::size_t example_id) const {
  const auto it = entries_.find({policy_hash, example_id});
  if (it == entries_.end()) {
    throw InvalidInput("paraphrase cache miss for example " + std::to_string(example_id) + " under policy " +
                       policy_hash.substr(0, 12));
  }
  return it->second;
}

void ParaphraseCache::put(const std::string& policy_hash, std::size_t example_id, std::vector<TokenSeq> paraphrases) {
  if (policy_hash_.empty()) policy_hash_ = policy_hash;
  entries_[{policy_hash, example_id}] = std::move(paraphrases);
}

ObjectiveValue augmented_objective(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                   const TaskTemplate& tmpl, std::span<const Example> batch,
                                   const ParaphraseCache* cache, std::size_t M, TuningMode mode) {
  if (M > 0 && cache == nullptr) throw InvalidInput("augmented_objective: M > 0 needs a paraphrase cache");
  ObjectiveValue out{0.0, ParamVector::zeros_like(classifier.values())};
  for (const auto& ex : batch) {
    const auto input = format_input(tmpl, ex.x);
    out.value += label_logprobs(classifier, input, verbalizer).at(ex.y);
    out.grad.axpy(1.0, classifier_grad(classifier, input, ex.y, verbalizer, mode));
    if (M == 0) continue;
    const auto& para = cache->get(cache->policy_hash(), ex.id);
    if (para.size() < M) {
      throw InvalidInput("paraphrase cache holds " + std::to_string(para.size()) + " paraphrases for example " +
                         std::to_string(ex.id) + ", need " + std::to_string(M));
    }
    const double w = 1.0 / static_cast<double>(M);
    for (std::size_t j = 0; j < M; ++j) {
      const auto zin = format_input(tmpl, para[j]);
      out.value += w * label_logprobs(classifier, zin, verbalizer).at(ex.y);
      out.grad.axpy(w, classifier_grad(classifier, zin, ex.y, verbalizer, mode));
    }
  }
  return out;
}

void ClassifierTrainConfig::validate() const {
  check_common(steps, batch_size, checkpoint_interval, optimizer);
  if (mode == TuningMode::None) throw ConfigError("tuning_mode", "GS has no trainable parameters");
}

double classifier_accuracy(const Downstream& model, std::span<const Example> examples, const ParaphraseCache* cache,
                           std::size_t M) {
  if (examples.empty()) throw InvalidInput("classifier_accuracy: no examples");
  if (M > 0 && cache == nullptr) throw InvalidInput("classifier_accuracy: M > 0 needs a paraphrase cache");
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    std::vector<TokenSeq> para;
    if (M > 0) {
      const auto& all = cache->get(cache->policy_hash(), ex.id);
      para.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(M, all.size())));
    }
    if (ensemble_predict(model, ex.x, para, /*include_original=*/true) == ex.y) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult train_classifier_augmented(const ClassifierParams& classifier, const Verbalizer& verbalizer,
                                       const TaskTemplate& tmpl, const ParaphraseCache* cache,
                                       const FewShotSplit& split, const ClassifierTrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw InvalidInput("train_classifier_augmented: empty train split");
  if (cfg.M > 0 && cache == nullptr) throw InvalidInput("train_classifier_augmented: M > 0 needs a paraphrase cache");

  Downstream model{classifier, verbalizer, tmpl};
  model.classifier.set_mode(cfg.mode);
  const auto mask = model.classifier.trainable_mask();
  const auto mask_storage = std::make_unique<bool[]>(mask.size());
  std::copy(mask.begin(), mask.end(), mask_storage.get());
  const std::span<const bool> trainable(mask_storage.get(), mask.size());
  AdamW optimizer(cfg.optimizer);
  BatchSampler sampler(split.train.size(), cfg.batch_size, mix_seed(cfg.seed, 1, 0));

  TrainResult result;
  result.steps_per_epoch = steps_per_epoch(split.train.size(), cfg.batch_size);
  result.epochs = static_cast<double>(cfg.steps) / static_cast<double>(result.steps_per_epoch);

  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
  auto make_checkpoint = [&](std::size_t step) {
    Checkpoint c;
    c.step = step;
    c.classifier = std::make_shared<const ClassifierParams>(model.classifier);
    if (!cfg.checkpoint_dir.empty()) {
      const auto path = cfg.checkpoint_dir / step_file(step);
      save_checkpoint(path, model.classifier);
      c.file = path.string();
    }
    if (cfg.evaluate && !split.validation.empty()) {
      const double acc = classifier_accuracy(model, split.validation, cache, cfg.M);
      c.metrics = {{"accuracy", acc}};
      result.metrics.push_back({step, "validation", "accuracy", acc});
    }
    return c;
  };
  result.baseline = make_checkpoint(0);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const auto idx = sampler.next();
    std::vector<Example> batch;
    batch.reserve(idx.size());
    for (const std::size_t i : idx) batch.push_back(split.train[i]);
    auto obj = augmented_objective(model.classifier, verbalizer, tmpl, batch, cache, cfg.M, cfg.mode);
    obj.grad.check_finite("classifier gradient");
    obj.grad.scale(-1.0);
    optimizer.step(model.classifier.values(), obj.grad, trainable);
    result.metrics.push_back({step, "train", "objective", obj.value / static_cast<double>(batch.size())});
    if (step % cfg.checkpoint_interval == 0) result.checkpoints.push_back(make_checkpoint(step));
  }
  return result;
}

}  // namespace riff
