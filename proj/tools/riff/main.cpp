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

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pipeline.hpp"
#include "riff/checkpoint.hpp"
#include "riff/error.hpp"
#include "riff/run_config.hpp"
#include "riff/trainer.hpp"

namespace fs = std::filesystem;
using namespace riff;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string estimators = "mml,pg";
  std::string regimes = "on,off,klon";
  std::string decoders = "beam,top_p,mixed";
  std::string normalize = "both";
  std::vector<std::string> report_dirs;
  std::string csv_path;
  bool pretrained_only = false;
};

RunConfig load_config(const Options& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty()) {
    if (!fs::exists(opt.config_path)) throw ConfigError("--config", "no such file: " + opt.config_path);
    cfg = load_run_config(opt.config_path);
  }
  if (opt.seed) cfg.seeds = {*opt.seed};
  if (opt.workers > 0) cfg.workers = opt.workers;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename Fn>
std::vector<T> parse_axis(const std::string& flag, const std::string& value, Fn parse) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) {
    try {
      out.push_back(parse(item));
    } catch (const InvalidInput& e) {
      throw ConfigError(flag, e.what());
    }
  }
  if (out.empty()) throw ConfigError(flag, "needs at least one value");
  return out;
}

/// Runs jobs on up to `workers` threads; the first exception is rethrown.
void run_parallel(std::size_t workers, std::vector<std::function<void()>> jobs) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(workers, jobs.size()); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

int cmd_pretrain(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto task = app::prepare_task(cfg);
  const auto pre = app::ensure_pretrained(cfg, task, app::output_root());
  std::printf("policy      %s\nclassifier  %s\n", pre.policy_file.c_str(), pre.classifier_file.c_str());
  return 0;
}

int cmd_finetune(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto root = app::output_root();
  const auto task = app::prepare_task(cfg);
  const auto pre = app::ensure_pretrained(cfg, task, root);
  std::mutex mu;
  std::vector<std::function<void()>> jobs;
  for (const auto seed : cfg.seeds) {
    jobs.emplace_back([&, seed] {
      const auto s = app::run_finetune(cfg, task, pre, root, seed);
      std::lock_guard lock(mu);
      std::printf("seed %-6llu step0 %.4f  best %.4f @ %zu  checkpoints %zu  epochs %.2f  %s\n",
                  static_cast<unsigned long long>(seed), s.baseline_accuracy, s.best_accuracy, s.best_step,
                  s.num_checkpoints, s.epochs, s.dir.string().c_str());
    });
  }
  run_parallel(cfg.workers, std::move(jobs));
  return 0;
}

PolicyParams paraphraser_for(const RunConfig& cfg, const app::Pretrained& pre, const fs::path& root,
                             std::uint64_t seed, bool pretrained_only) {
  const auto dir = app::run_dir(root, cfg, seed);
  if (!pretrained_only && fs::exists(dir / "manifest.json")) return app::load_best_paraphraser(dir);
  return pre.policy;
}

int cmd_train_classifier(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto root = app::output_root();
  const auto task = app::prepare_task(cfg);
  const auto pre = app::ensure_pretrained(cfg, task, root);
  for (const auto seed : cfg.seeds) {
    const auto para = paraphraser_for(cfg, pre, root, seed, opt.pretrained_only);
    const auto s = app::run_train_classifier(cfg, task, pre, para, root, seed);
    std::printf("seed %-6llu %-8s best val %.4f @ %zu  test %.4f  test (no paraphrases) %.4f\n",
                static_cast<unsigned long long>(seed), std::string(to_string(cfg.tuning_mode)).c_str(),
                s.best_validation_accuracy, s.best_step, s.test_accuracy, s.test_accuracy_plain);
  }
  return 0;
}

int cmd_evaluate(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto root = app::output_root();
  const auto task = app::prepare_task(cfg);
  const auto pre = app::ensure_pretrained(cfg, task, root);
  if (task.dataset.test.empty()) throw ConfigError("test_size", "evaluation needs a test set");
  const Downstream downstream{pre.classifier, task.verbalizer, task.tmpl};
  std::printf("classifier test accuracy (no paraphrases) %.4f\n",
              classifier_accuracy(downstream, task.dataset.test, nullptr, 0));
  const auto decode = cfg.decode_config(0);
  const auto base = evaluate_paraphraser(pre.policy, downstream, task.dataset.test, decode);
  std::printf("%-12s acc %.4f  LD %.4f  PLD %.4f\n", "pretrained", base.accuracy, base.ld, base.pld);
  for (const auto seed : cfg.seeds) {
    const auto dir = app::run_dir(root, cfg, seed);
    if (!fs::exists(dir / "manifest.json")) {
      std::printf("seed %-7llu no fine-tuned run in %s\n", static_cast<unsigned long long>(seed), dir.c_str());
      continue;
    }
    const auto ev = evaluate_paraphraser(app::load_best_paraphraser(dir), downstream, task.dataset.test, decode);
    std::printf("seed %-7llu acc %.4f  LD %.4f  PLD %.4f\n", static_cast<unsigned long long>(seed), ev.accuracy,
                ev.ld, ev.pld);
    app::write_json(dir / "evaluate.json",
                    {{"split", "test"}, {"accuracy", ev.accuracy}, {"ld", ev.ld}, {"pld", ev.pld},
                     {"pretrained", {{"accuracy", base.accuracy}, {"ld", base.ld}, {"pld", base.pld}}}});
  }
  return 0;
}

int cmd_oracle_check(const Options& opt) {
  const auto report = app::oracle_suite(opt.seed.value_or(0));
  const double worst = std::max(report.max_rel_error_mml, report.max_rel_error_klon);
  std::printf("instances               %zu\n", report.instances);
  std::printf("max rel error (mml)     %.3e\n", report.max_rel_error_mml);
  std::printf("max rel error (klon)    %.3e\n", report.max_rel_error_klon);
  std::printf("beta=0 max |difference| %.3e\n", report.max_abs_beta0_diff);
  std::printf("max relative gradient error %.3e\n", worst);
  return worst < 1e-3 && report.max_abs_beta0_diff == 0.0 ? 0 : 1;
}

int cmd_grid(const Options& opt) {
  const auto base = load_config(opt);
  const auto estimators = parse_axis<EstimatorKind>("--estimators", opt.estimators, parse_estimator);
  const auto regimes = parse_axis<PolicyRegime>("--regimes", opt.regimes, parse_regime);
  const auto decoders = parse_axis<DecodeScheme>("--decoders", opt.decoders, parse_decode_scheme);
  std::vector<bool> normalize;
  if (opt.normalize == "both") {
    normalize = {true, false};
  } else if (opt.normalize == "true" || opt.normalize == "on") {
    normalize = {true};
  } else if (opt.normalize == "false" || opt.normalize == "off") {
    normalize = {false};
  } else {
    throw ConfigError("--normalize", "expected true, false or both");
  }

  const auto root = app::output_root();
  const auto task = app::prepare_task(base);
  const auto pre = app::ensure_pretrained(base, task, root);

  std::vector<RunConfig> cells;
  for (const auto& cell : app::grid_cells(estimators, regimes, decoders, normalize)) {
    RunConfig cfg = base;
    cfg.name = app::cell_name(base.name, cell);
    cfg.estimator = cell.estimator;
    cfg.regime = cell.regime;
    cfg.decoder = cell.decoder;
    cfg.normalize = cell.normalize;
    cfg.policy_checkpoint = pre.policy_file;
    cfg.classifier_checkpoint = pre.classifier_file;
    cfg.validate();
    cells.push_back(cfg);
  }

  std::mutex mu;
  std::vector<std::function<void()>> jobs;
  for (const auto& cfg : cells) {
    for (const auto seed : cfg.seeds) {
      jobs.emplace_back([&, seed] {
        const auto s = app::run_finetune(cfg, task, pre, root, seed);
        std::lock_guard lock(mu);
        std::printf("%-40s seed %-6llu best %.4f (step0 %.4f)\n", cfg.name.c_str(),
                    static_cast<unsigned long long>(seed), s.best_accuracy, s.baseline_accuracy);
        std::fflush(stdout);
      });
    }
  }
  const std::size_t total = jobs.size();
  run_parallel(base.workers, std::move(jobs));
  std::printf("grid: %zu runs x %zu seeds = %zu metric CSVs\n", cells.size(), base.seeds.size(), total);

  std::vector<fs::path> dirs;
  for (const auto& cfg : cells) dirs.push_back(root / "runs" / cfg.name);
  const auto rows = app::build_report(dirs);
  std::ofstream(root / "runs" / (base.name + "-grid.csv")) << app::report_csv(rows);
  std::fputs(app::report_text(rows).c_str(), stdout);
  return 0;
}

int cmd_report(const Options& opt) {
  std::vector<fs::path> dirs(opt.report_dirs.begin(), opt.report_dirs.end());
  const auto rows = app::build_report(dirs);
  if (!opt.csv_path.empty()) {
    std::ofstream out(opt.csv_path);
    if (!out) throw std::runtime_error("cannot write " + opt.csv_path);
    out << app::report_csv(rows);
  }
  std::fputs(app::report_text(rows).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Paraphrase-augmented few-shot classification experiments"};
  cli.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "JSON run configuration");
    sub->add_option("--seed", opt.seed, "Run a single seed instead of the configured list");
    sub->add_option("--workers", opt.workers, "Parallel runs");
  };

  auto* pretrain = cli.add_subcommand("pretrain", "Pre-train the paraphraser and the classifier");
  add_common(pretrain);
  auto* finetune = cli.add_subcommand("riff-finetune", "Fine-tune the paraphraser against the frozen classifier");
  add_common(finetune);
  auto* train = cli.add_subcommand("train-classifier", "Train the classifier with cached paraphrases");
  add_common(train);
  train->add_flag("--pretrained-paraphraser", opt.pretrained_only, "Ignore fine-tuned paraphrasers");
  auto* evaluate = cli.add_subcommand("evaluate", "Test-set paraphrase accuracy, LD and PLD");
  add_common(evaluate);
  auto* oracle = cli.add_subcommand("oracle-check", "Exact gradients against finite differences");
  oracle->add_option("--seed", opt.seed, "Instance seed");
  auto* grid = cli.add_subcommand("grid", "Fine-tune every estimator / regime / decoder / normalization cell");
  add_common(grid);
  grid->add_option("--estimators", opt.estimators, "Comma list of mml, pg");
  grid->add_option("--regimes", opt.regimes, "Comma list of on, off, klon");
  grid->add_option("--decoders", opt.decoders, "Comma list of beam, top_p, mixed");
  grid->add_option("--normalize", opt.normalize, "true, false or both");
  auto* report = cli.add_subcommand("report", "Summarize finished runs");
  report->add_option("run_dirs", opt.report_dirs, "runs/<name> directories")->required();
  report->add_option("--csv", opt.csv_path, "Also write the summary as CSV");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  try {
    if (*pretrain) return cmd_pretrain(opt);
    if (*finetune) return cmd_finetune(opt);
    if (*train) return cmd_train_classifier(opt);
    if (*evaluate) return cmd_evaluate(opt);
    if (*oracle) return cmd_oracle_check(opt);
    if (*grid) return cmd_grid(opt);
    if (*report) return cmd_report(opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
