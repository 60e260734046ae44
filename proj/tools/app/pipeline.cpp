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

#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "riff/checkpoint.hpp"
#include "riff/error.hpp"
#include "riff/oracle.hpp"

namespace riff::app {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ClassifierConfig classifier_config(const RunConfig& cfg, const Task& task) {
  ClassifierConfig cc;
  cc.vocab_size = cfg.vocab_size;
  cc.embed_dim = cfg.classifier_embed_dim;
  cc.num_labels = cfg.num_labels;
  cc.prompt_len = cfg.prompt_len;
  cc.lora_rank = cfg.lora_rank;
  cc.lora_alpha = cfg.lora_alpha;
  cc.cls_hidden = cfg.cls_hidden;
  cc.max_input_len = cfg.classifier_max_len;
  cc.mask_id = task.tmpl.mask;
  return cc;
}

PolicyConfig policy_config(const RunConfig& cfg, const Task& task) {
  return PolicyConfig{task.vocab.policy_vocab_size(), cfg.policy_embed_dim, cfg.policy_hidden_dim, cfg.policy_max_len};
}

json checkpoint_entry(const Checkpoint& c) {
  json e;
  e["step"] = c.step;
  e["file"] = c.file;
  e["sha256"] = c.file.empty() ? std::string() : sha256_file(c.file);
  e["metrics"] = c.metrics;
  return e;
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h * 0x100000001B3ULL;
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Task prepare_task(const RunConfig& cfg) {
  Task task{SyntheticVocab(cfg.vocab_size, cfg.num_labels), {}, {}, {}};
  if (!cfg.dataset_path.empty()) {
    task.dataset.vocab_size = cfg.vocab_size;
    task.dataset.num_labels = cfg.num_labels;
    task.dataset.train = load_examples_jsonl(cfg.dataset_path);
  } else {
    task.dataset = gen_synthetic_task(cfg.vocab_size, cfg.num_labels, cfg.pool_size, cfg.test_size, cfg.data_seed);
  }
  task.tmpl = TaskTemplate::for_vocab(task.vocab);
  task.tmpl.instruction = cfg.instruction;
  task.tmpl.max_len = cfg.classifier_max_len;
  if (!cfg.template_path.empty()) task.tmpl = load_template_json(cfg.template_path, task.tmpl);
  std::vector<TokenId> verb;
  for (std::size_t c = 0; c < cfg.num_labels; ++c) verb.push_back(task.vocab.family_token(c, 0));
  task.verbalizer = Verbalizer(verb, cfg.vocab_size);
  return task;
}

fs::path output_root() {
  if (const char* env = std::getenv("RIFF_OUT"); env != nullptr && *env != '\0') return env;
  return "riff_out";
}

fs::path run_dir(const fs::path& root, const RunConfig& cfg, std::uint64_t seed) {
  return root / "runs" / cfg.name / std::to_string(seed);
}

fs::path pretrain_dir(const fs::path& root, const RunConfig& cfg) { return root / "runs" / cfg.name / "pretrain"; }

Pretrained pretrain(const RunConfig& cfg, const Task& task) {
  Pretrained out;
  const auto corpus = gen_rewriter_corpus(task.dataset.train, task.vocab, cfg.data_seed);
  PretrainOptions po;
  po.epochs = cfg.pretrain_epochs;
  po.lr = cfg.pretrain_lr;
  po.weight_decay = cfg.weight_decay;
  po.seed = cfg.data_seed;
  out.policy = pretrain_mle(PolicyParams::random(policy_config(cfg, task), cfg.data_seed), corpus, po);

  // The classifier's "pre-training": a short supervised pass over examples
  // the few-shot splits never draw from.
  const auto pool = gen_synthetic_task(cfg.vocab_size, cfg.num_labels, cfg.classifier_pretrain_examples, 0,
                                       cfg.data_seed + 2);
  const auto base = ClassifierParams::random(classifier_config(cfg, task), TuningMode::AllTune, cfg.data_seed + 1);
  ClassifierTrainConfig ct;
  ct.mode = TuningMode::AllTune;
  ct.M = 0;
  ct.optimizer.lr = cfg.classifier_pretrain_lr;
  ct.optimizer.weight_decay = cfg.weight_decay;
  ct.steps = std::max<std::size_t>(cfg.classifier_pretrain_steps, 1);
  ct.batch_size = 8;
  ct.checkpoint_interval = ct.steps;
  ct.seed = cfg.data_seed;
  ct.evaluate = false;
  if (cfg.classifier_pretrain_steps == 0 || cfg.classifier_pretrain_lr == 0.0) {
    out.classifier = base;
  } else {
    FewShotSplit split{pool.train, {}, cfg.data_seed};
    const auto res = train_classifier_augmented(base, task.verbalizer, task.tmpl, nullptr, split, ct);
    out.classifier = *res.checkpoints.back().classifier;
  }
  return out;
}

Pretrained ensure_pretrained(const RunConfig& cfg, const Task& task, const fs::path& root) {
  const auto dir = pretrain_dir(root, cfg);
  const fs::path saved_policy = dir / "policy.ckpt";
  const fs::path saved_classifier = dir / "classifier.ckpt";
  fs::path policy_file = cfg.policy_checkpoint;
  fs::path classifier_file = cfg.classifier_checkpoint;
  if (policy_file.empty() && fs::exists(saved_policy)) policy_file = saved_policy;
  if (classifier_file.empty() && fs::exists(saved_classifier)) classifier_file = saved_classifier;

  if (!policy_file.empty() && !classifier_file.empty()) {
    Pretrained out{load_policy_checkpoint(policy_file), load_classifier_checkpoint(classifier_file),
                   policy_file.string(), classifier_file.string()};
    out.classifier.set_mode(TuningMode::AllTune);
    return out;
  }
  Pretrained out = pretrain(cfg, task);
  if (!policy_file.empty()) out.policy = load_policy_checkpoint(policy_file);
  if (!classifier_file.empty()) {
    out.classifier = load_classifier_checkpoint(classifier_file);
    out.classifier.set_mode(TuningMode::AllTune);
  }
  fs::create_directories(dir);
  if (policy_file.empty()) {
    save_checkpoint(saved_policy, out.policy);
    policy_file = saved_policy;
  }
  if (classifier_file.empty()) {
    save_checkpoint(saved_classifier, out.classifier);
    classifier_file = saved_classifier;
  }
  out.policy_file = policy_file.string();
  out.classifier_file = classifier_file.string();

  json manifest;
  manifest["stage"] = "pretrain";
  manifest["config"] = to_json(cfg);
  manifest["files"] = {{"policy", {{"path", out.policy_file}, {"sha256", sha256_file(policy_file)}}},
                       {"classifier", {{"path", out.classifier_file}, {"sha256", sha256_file(classifier_file)}}}};
  write_json(dir / "manifest.json", manifest);
  return out;
}

FinetuneSummary run_finetune(const RunConfig& cfg, const Task& task, const Pretrained& pre, const fs::path& root,
                             std::uint64_t seed) {
  cfg.validate();
  const auto split = fewshot_split(task.dataset.train, cfg.num_labels, cfg.n_shot, seed);
  Downstream downstream{pre.classifier, task.verbalizer, task.tmpl};
  downstream.classifier.set_mode(TuningMode::AllTune);

  const fs::path dir = run_dir(root, cfg, seed);
  fs::create_directories(dir);

  FinetuneConfig fc;
  fc.estimator = cfg.estimator_spec();
  fc.scheme = cfg.decoder;
  fc.decode = cfg.decode_config(seed);
  fc.eval_decode = cfg.decode_config(seed);
  fc.optimizer.lr = cfg.lr;
  fc.optimizer.weight_decay = cfg.weight_decay;
  fc.steps = cfg.steps;
  fc.batch_size = cfg.batch_size;
  fc.checkpoint_interval = cfg.checkpoint_interval;
  fc.seed = seed;
  fc.evaluate = cfg.evaluate_checkpoints;
  fc.checkpoint_dir = dir / "checkpoints";

  const auto result = finetune_paraphraser(pre.policy, downstream, split, fc);
  write_metrics_csv(dir / "metrics.csv", result.metrics);

  FinetuneSummary s;
  s.seed = seed;
  s.dir = dir;
  s.num_checkpoints = result.checkpoints.size();
  s.epochs = result.epochs;

  json manifest;
  manifest["stage"] = "riff-finetune";
  manifest["config"] = to_json(cfg);
  manifest["seed"] = seed;
  manifest["n_train"] = split.train.size();
  manifest["n_validation"] = split.validation.size();
  manifest["steps"] = cfg.steps;
  manifest["steps_per_epoch"] = result.steps_per_epoch;
  manifest["epochs"] = result.epochs;
  manifest["num_checkpoints"] = result.checkpoints.size();
  manifest["clamp_events"] = result.clamp_events;
  manifest["baseline"] = checkpoint_entry(result.baseline);
  json entries = json::array();
  for (const auto& c : result.checkpoints) entries.push_back(checkpoint_entry(c));
  manifest["checkpoints"] = entries;
  if (cfg.evaluate_checkpoints) {
    const auto& best = select_best_checkpoint(result.checkpoints);
    s.baseline_accuracy = result.baseline.metric("accuracy");
    s.best_accuracy = best.metric("accuracy");
    s.best_step = best.step;
    manifest["best_checkpoint"] = checkpoint_entry(best);
  }
  manifest["files"] = {
      {"metrics.csv", sha256_file(dir / "metrics.csv")},
      {"pretrained_policy", {{"path", pre.policy_file}, {"sha256", pre.policy_file.empty() ? "" : sha256_file(pre.policy_file)}}},
      {"classifier", {{"path", pre.classifier_file}, {"sha256", pre.classifier_file.empty() ? "" : sha256_file(pre.classifier_file)}}},
  };
  write_json(dir / "manifest.json", manifest);
  return s;
}

PolicyParams load_best_paraphraser(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  if (!manifest.contains("best_checkpoint")) {
    throw std::runtime_error(dir.string() + ": run has no evaluated checkpoints");
  }
  return load_policy_checkpoint(manifest["best_checkpoint"]["file"].get<std::string>());
}

ClassifierSummary run_train_classifier(const RunConfig& cfg, const Task& task, const Pretrained& pre,
                                       const PolicyParams& paraphraser, const fs::path& root, std::uint64_t seed) {
  cfg.validate();
  const auto split = fewshot_split(task.dataset.train, cfg.num_labels, cfg.n_shot, seed);
  const fs::path dir = run_dir(root, cfg, seed) / ("classifier_" + std::string(to_string(cfg.tuning_mode)));
  fs::create_directories(dir);

  std::optional<ParaphraseCache> cache;
  if (cfg.classifier_M > 0) {
    std::vector<Example> all = split.train;
    all.insert(all.end(), split.validation.begin(), split.validation.end());
    all.insert(all.end(), task.dataset.test.begin(), task.dataset.test.end());
    DecodeConfig dc = cfg.decode_config(seed);
    dc.M = cfg.classifier_M;
    cache = ParaphraseCache::build(paraphraser, all, dc);
  }
  const ParaphraseCache* cache_ptr = cache ? &*cache : nullptr;

  ClassifierTrainConfig ct;
  ct.mode = cfg.tuning_mode;
  ct.M = cfg.classifier_M;
  ct.optimizer.lr = cfg.effective_classifier_lr();
  ct.optimizer.weight_decay = cfg.weight_decay;
  ct.steps = cfg.classifier_steps;
  ct.batch_size = cfg.batch_size;
  ct.checkpoint_interval = cfg.checkpoint_interval;
  ct.seed = seed;
  ct.evaluate = true;
  ct.checkpoint_dir = dir / "checkpoints";

  auto result = train_classifier_augmented(pre.classifier, task.verbalizer, task.tmpl, cache_ptr, split, ct);
  const auto& best = select_best_checkpoint(result.checkpoints);

  ClassifierSummary s;
  s.seed = seed;
  s.dir = dir;
  s.best_step = best.step;
  s.best_validation_accuracy = best.metric("accuracy");
  if (!task.dataset.test.empty()) {
    const Downstream model{*best.classifier, task.verbalizer, task.tmpl};
    s.test_accuracy = classifier_accuracy(model, task.dataset.test, cache_ptr, cfg.classifier_M);
    s.test_accuracy_plain = classifier_accuracy(model, task.dataset.test, nullptr, 0);
    result.metrics.push_back({best.step, "test", "accuracy", s.test_accuracy});
    result.metrics.push_back({best.step, "test", "accuracy_plain", s.test_accuracy_plain});
  }
  write_metrics_csv(dir / "metrics.csv", result.metrics);

  json manifest;
  manifest["stage"] = "train-classifier";
  manifest["config"] = to_json(cfg);
  manifest["seed"] = seed;
  manifest["tuning_mode"] = std::string(to_string(cfg.tuning_mode));
  manifest["steps_per_epoch"] = result.steps_per_epoch;
  manifest["epochs"] = result.epochs;
  manifest["num_checkpoints"] = result.checkpoints.size();
  manifest["paraphrase_policy_sha256"] = cache ? cache->policy_hash() : std::string();
  json entries = json::array();
  for (const auto& c : result.checkpoints) entries.push_back(checkpoint_entry(c));
  manifest["checkpoints"] = entries;
  manifest["best_checkpoint"] = checkpoint_entry(best);
  manifest["test_accuracy"] = s.test_accuracy;
  manifest["test_accuracy_plain"] = s.test_accuracy_plain;
  manifest["files"] = {{"metrics.csv", sha256_file(dir / "metrics.csv")}};
  write_json(dir / "manifest.json", manifest);
  return s;
}

OracleReport oracle_suite(std::uint64_t seed, std::size_t instances) {
  OracleReport report;
  report.instances = instances;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t V = 2 + rng() % 3;
    const std::size_t max_len = 2 + rng() % 3;
    const PolicyConfig pc{V, 4, 4, max_len};
    const auto policy = PolicyParams::random(pc, rng());
    auto fixed = policy;
    std::normal_distribution<double> noise(0.0, 0.3);
    for (double& v : fixed.values().values()) v += noise(rng);

    std::vector<TokenId> content(1 + rng() % 3);
    for (auto& t : content) t = static_cast<TokenId>(1 + rng() % (V - 1));
    const auto x = TokenSeq::from_content(content);
    const std::uint64_t salt = rng();
    const RewardFn reward = [salt](const TokenSeq& z) {
      std::uint64_t h = salt;
      for (TokenId t : z.ids()) h = fnv_mix(h, t);
      return -3.0 * static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
    };

    auto with_values = [&policy](const ParamVector& theta) {
      PolicyParams p = policy;
      p.values() = theta;
      return p;
    };
    const auto g = exact_gradient(policy, x, reward, max_len);
    const auto fd = finite_diff_grad(
        [&](const ParamVector& th) { return exact_objective(with_values(th), x, reward, max_len); },
        policy.values());
    report.max_rel_error_mml = std::max(report.max_rel_error_mml, max_relative_error(g.values(), fd));

    const auto g0 = exact_klon_gradient(policy, fixed, x, reward, max_len, 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      report.max_abs_beta0_diff = std::max(report.max_abs_beta0_diff, std::abs(g0[k] - g[k]));
    }
    for (const double beta : {0.1, 0.6}) {
      const auto gk = exact_klon_gradient(policy, fixed, x, reward, max_len, beta);
      const auto fdk = finite_diff_grad(
          [&](const ParamVector& th) {
            return exact_klon_objective(with_values(th), fixed, x, reward, max_len, beta);
          },
          policy.values());
      report.max_rel_error_klon = std::max(report.max_rel_error_klon, max_relative_error(gk.values(), fdk));
    }
  }
  return report;
}

std::string cell_name(const std::string& base, const GridCell& cell) {
  return base + "-" + std::string(to_string(cell.estimator)) + "-" + std::string(to_string(cell.regime)) + "-" +
         std::string(to_string(cell.decoder)) + (cell.normalize ? "-z" : "-raw");
}

std::vector<GridCell> grid_cells(const std::vector<EstimatorKind>& estimators, const std::vector<PolicyRegime>& regimes,
                                 const std::vector<DecodeScheme>& decoders, const std::vector<bool>& normalize) {
  std::vector<GridCell> cells;
  for (auto e : estimators) {
    for (auto r : regimes) {
      for (auto d : decoders) {
        for (bool z : normalize) cells.push_back({e, r, d, z});
      }
    }
  }
  return cells;
}

std::vector<ReportRow> build_report(const std::vector<fs::path>& run_dirs) {
  std::vector<ReportRow> rows;
  for (const auto& run : run_dirs) {
    ReportRow row;
    row.name = run.filename().string();
    if (row.name.empty()) row.name = run.parent_path().filename().string();
    std::vector<double> bests;
    double ckpt_sum = 0.0;
    std::size_t ckpt_count = 0;
    std::vector<std::string> problems;
    std::vector<fs::path> seeds;
    if (fs::is_directory(run)) {
      for (const auto& entry : fs::directory_iterator(run)) {
        const auto stem = entry.path().filename().string();
        if (entry.is_directory() && !stem.empty() && std::all_of(stem.begin(), stem.end(), ::isdigit)) {
          seeds.push_back(entry.path());
        }
      }
    }
    std::sort(seeds.begin(), seeds.end());
    for (const auto& sd : seeds) {
      const auto seed = sd.filename().string();
      if (!fs::exists(sd / "manifest.json") || !fs::exists(sd / "metrics.csv")) {
        problems.push_back("seed " + seed + " incomplete");
        continue;
      }
      std::optional<double> best;
      for (const auto& m : read_metrics_csv(sd / "metrics.csv")) {
        if (m.split != "validation" || m.metric != "accuracy" || m.step == 0) continue;
        best = best ? std::max(*best, m.value) : m.value;
        ckpt_sum += m.value;
        ++ckpt_count;
      }
      if (!best) {
        problems.push_back("seed " + seed + " has no checkpoint accuracy");
        continue;
      }
      bests.push_back(*best);
    }
    if (seeds.empty()) problems.push_back("no seed directories");
    row.seeds = bests.size();
    if (!bests.empty()) {
      double mean = 0.0;
      for (double b : bests) mean += b;
      mean /= static_cast<double>(bests.size());
      double var = 0.0;
      for (double b : bests) var += (b - mean) * (b - mean);
      row.best_mean = mean;
      row.best_std = std::sqrt(var / static_cast<double>(bests.size()));
      row.checkpoint_mean = ckpt_sum / static_cast<double>(ckpt_count);
    }
    row.complete = problems.empty();
    for (std::size_t i = 0; i < problems.size(); ++i) row.note += (i ? "; " : "") + problems[i];
    rows.push_back(row);
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "run,seeds,best_mean,best_std,checkpoint_mean,complete,note\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%d", r.seeds, r.best_mean, r.best_std, r.checkpoint_mean,
                  r.complete ? 1 : 0);
    out << r.name << ',' << buf << ',' << r.note << '\n';
  }
  return out.str();
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::size_t width = 3;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %5s  %22s\n", static_cast<int>(width), "run", "seeds", "best (std | ckpt mean)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %5zu  %6.2f (%5.2f | %6.2f)%s%s\n", static_cast<int>(width), r.name.c_str(),
                  r.seeds, 100.0 * r.best_mean, 100.0 * r.best_std, 100.0 * r.checkpoint_mean,
                  r.complete ? "" : "  [incomplete] ", r.note.c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace riff::app
