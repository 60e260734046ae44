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

#include <benchmark/benchmark.h>

#include <random>

#include "riff/classifier.hpp"
#include "riff/data.hpp"
#include "riff/decoding.hpp"
#include "riff/estimators.hpp"
#include "riff/seqpolicy.hpp"

namespace {

using namespace riff;

const PolicyConfig kPolicy{17, 8, 16, 24};
const TokenSeq kInput = TokenSeq::from_ids({1, 5, 6, 3, 7, 8, 9, 2, 10, 11, 0});

void BM_Decode(benchmark::State& state) {
  const auto policy = PolicyParams::random(kPolicy, 1);
  const auto scheme = static_cast<DecodeScheme>(state.range(0));
  DecodeConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode(scheme, policy, kInput, cfg));
    ++cfg.seed;
  }
  state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_Decode)->Arg(0)->Arg(1)->Arg(2);

void BM_SeqLogprobGrad(benchmark::State& state) {
  const auto policy = PolicyParams::random(kPolicy, 2);
  const auto z = TokenSeq::from_ids({5, 6, 3, 8, 7, 9, 2, 0});
  for (auto _ : state) benchmark::DoNotOptimize(seq_logprob_and_grad(policy, kInput, z));
}
BENCHMARK(BM_SeqLogprobGrad);

void BM_ClassifierGrad(benchmark::State& state) {
  const SyntheticVocab vocab(20, 2);
  ClassifierConfig c;
  c.vocab_size = 20;
  c.mask_id = vocab.mask();
  const auto mode = static_cast<TuningMode>(state.range(0));
  const auto params = ClassifierParams::random(c, mode, 3);
  const Verbalizer verb({1, 3}, 20);
  const auto input = format_input(TaskTemplate::for_vocab(vocab), kInput);
  for (auto _ : state) benchmark::DoNotOptimize(classifier_grad(params, input, 1, verb, mode));
  state.SetLabel(std::string(to_string(mode)));
}
BENCHMARK(BM_ClassifierGrad)->DenseRange(1, 6);

void BM_EstimateGradient(benchmark::State& state) {
  const auto policy = PolicyParams::random(kPolicy, 4);
  const auto fixed = PolicyParams::random(kPolicy, 5);
  DecodeConfig cfg;
  SampleBatch batch;
  std::vector<GradientAccumulator> grads;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> reward(-1.0, 0.5);
  for (const auto& d : mixed_decode(policy, kInput, cfg)) {
    auto [lp, g] = seq_logprob_and_grad(policy, kInput, d.seq);
    batch.samples.push_back({d.seq, lp, seq_logprob(fixed, kInput, d.seq), reward(rng)});
    grads.push_back(std::move(g));
  }
  EstimatorSpec spec;
  spec.regime = static_cast<PolicyRegime>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_gradient(batch, grads, spec));
  state.SetLabel(std::string(to_string(spec.regime)));
}
BENCHMARK(BM_EstimateGradient)->Arg(0)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
