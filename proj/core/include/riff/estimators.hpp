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

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "riff/diffmath.hpp"
#include "riff/param_vector.hpp"
#include "riff/tokens.hpp"

namespace riff {

/// One scored paraphrase: log-probabilities under the current and the fixed
/// policy, and the reward R(z) = log P(y | z).
struct SampleRecord {
  TokenSeq z;
  LogProb cur_logprob = 0.0;
  LogProb fixed_logprob = 0.0;
  double reward = 0.0;
};

struct SampleBatch {
  std::vector<SampleRecord> samples;

  std::size_t size() const { return samples.size(); }
  std::vector<double> rewards() const;
  /// Throws InvalidInput if empty or any field is non-finite.
  void validate() const;
};

enum class EstimatorKind { MML, PG };
enum class PolicyRegime { On, Off, KLOn };
enum class CoefficientKind { MML, PG, MMLOff, PGOff };

std::string_view to_string(EstimatorKind kind);
std::string_view to_string(PolicyRegime regime);
EstimatorKind parse_estimator(std::string_view name);
PolicyRegime parse_regime(std::string_view name);

struct Coefficients {
  std::vector<double> phi;
  CoefficientKind kind = CoefficientKind::MML;
  std::size_t clamp_events = 0;  // importance log-ratios clipped to +-kLogRatioClamp
};

struct KlonConfig {
  double beta = 0.1;
};

/// Importance log-ratios log s = cur - fixed are clipped to this magnitude.
inline constexpr double kLogRatioClamp = 30.0;

/// phi_j = P(z_j) e^{R_j} / sum_j' P(z_j') e^{R_j'}, in log space.
Coefficients mml_coefficients(const SampleBatch& batch);

/// phi_j = P(z_j) R_j.
Coefficients pg_coefficients(const SampleBatch& batch);

/// (R - mean) / std with population statistics; all zeros when std is 0.
std::vector<double> normalize_rewards(std::span<const double> rewards);

/// Importance-weighted coefficients for samples drawn from the fixed policy.
Coefficients offpolicy_coefficients(const SampleBatch& batch, EstimatorKind kind);

/// sum_j phi_j grad_j.
GradientAccumulator assemble_gradient(const Coefficients& coeffs, std::span<const GradientAccumulator> grads);

/// base - beta * (1/M) sum_j (log s_j + 1) grad_j for on-policy samples.
GradientAccumulator klon_gradient(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                                  const GradientAccumulator& base, const KlonConfig& cfg);

/// Same penalty with explicit per-sample weights in place of 1/M; with
/// weights P(z) over an enumerated support this is the exact gradient of
/// -beta E[log s].
GradientAccumulator klon_gradient_weighted(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                                           const GradientAccumulator& base, const KlonConfig& cfg,
                                           std::span<const double> weights);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::MML;
  PolicyRegime regime = PolicyRegime::KLOn;
  bool normalize = true;
  double beta = 0.1;
};

struct Estimate {
  GradientAccumulator gradient;  // ascent direction for the paraphraser objective
  Coefficients coefficients;
  std::size_t clamp_events = 0;
};

/// Full per-example estimator: optional reward normalization, then the
/// coefficient rule for (kind, regime), then the KL correction under KLOn.
Estimate estimate_gradient(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                           const EstimatorSpec& spec);

}  // namespace riff
