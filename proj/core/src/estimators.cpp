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

#include "riff/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riff/error.hpp"

namespace riff {
namespace {

double clamp_log_ratio(double log_s, std::size_t& events) {
  if (!std::isfinite(log_s)) throw NumericError("non-finite importance ratio");
  if (log_s > kLogRatioClamp) {
    ++events;
    return kLogRatioClamp;
  }
  if (log_s < -kLogRatioClamp) {
    ++events;
    return -kLogRatioClamp;
  }
  return log_s;
}

std::vector<double> normalized_weights(const std::vector<double>& log_w) {
  const double lse = logsumexp(log_w);
  if (lse == -std::numeric_limits<double>::infinity()) {
    throw NumericError("degenerate batch: every sample has zero weight");
  }
  std::vector<double> phi(log_w.size());
  for (std::size_t j = 0; j < log_w.size(); ++j) phi[j] = std::exp(log_w[j] - lse);
  return phi;
}

void check_grads(const SampleBatch& batch, std::span<const GradientAccumulator> grads) {
  if (grads.size() != batch.size()) throw InvalidInput("gradient count does not match batch size");
}

}  // namespace

std::vector<double> SampleBatch::rewards() const {
  std::vector<double> r;
  r.reserve(samples.size());
  for (const auto& s : samples) r.push_back(s.reward);
  return r;
}

void SampleBatch::validate() const {
  if (samples.empty()) throw InvalidInput("empty sample batch");
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto& s = samples[j];
    if (std::isnan(s.cur_logprob) || std::isnan(s.fixed_logprob) || !std::isfinite(s.reward) ||
        s.cur_logprob == std::numeric_limits<double>::infinity() ||
        s.fixed_logprob == std::numeric_limits<double>::infinity()) {
      throw InvalidInput("sample " + std::to_string(j) + " has a non-finite field");
    }
  }
}

std::string_view to_string(EstimatorKind kind) { return kind == EstimatorKind::MML ? "mml" : "pg"; }

std::string_view to_string(PolicyRegime regime) {
  switch (regime) {
    case PolicyRegime::On: return "on";
    case PolicyRegime::Off: return "off";
    case PolicyRegime::KLOn: return "klon";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "mml") return EstimatorKind::MML;
  if (name == "pg") return EstimatorKind::PG;
  throw InvalidInput("unknown estimator '" + std::string(name) + "'");
}

PolicyRegime parse_regime(std::string_view name) {
  if (name == "on") return PolicyRegime::On;
  if (name == "off") return PolicyRegime::Off;
  if (name == "klon") return PolicyRegime::KLOn;
  throw InvalidInput("unknown policy regime '" + std::string(name) + "'");
}

Coefficients mml_coefficients(const SampleBatch& batch) {
  batch.validate();
  std::vector<double> log_w(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) log_w[j] = batch.samples[j].cur_logprob + batch.samples[j].reward;
  return Coefficients{normalized_weights(log_w), CoefficientKind::MML, 0};
}

Coefficients pg_coefficients(const SampleBatch& batch) {
  batch.validate();
  Coefficients c{std::vector<double>(batch.size()), CoefficientKind::PG, 0};
  for (std::size_t j = 0; j < batch.size(); ++j) {
    c.phi[j] = std::exp(batch.samples[j].cur_logprob) * batch.samples[j].reward;
  }
  return c;
}

std::vector<double> normalize_rewards(std::span<const double> rewards) {
  if (rewards.empty()) throw InvalidInput("normalize_rewards: empty input");
  std::vector<double> out(rewards.size(), 0.0);
  // Exact test: the computed mean of equal values can differ from them by an ulp.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) return out;
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  if (var == 0.0) return out;
  const double sd = std::sqrt(var);
  for (std::size_t j = 0; j < rewards.size(); ++j) out[j] = (rewards[j] - mean) / sd;
  return out;
}

Coefficients offpolicy_coefficients(const SampleBatch& batch, EstimatorKind kind) {
  batch.validate();
  Coefficients c;
  std::vector<double> log_s(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    log_s[j] = clamp_log_ratio(batch.samples[j].cur_logprob - batch.samples[j].fixed_logprob, c.clamp_events);
  }
  if (kind == EstimatorKind::PG) {
    c.kind = CoefficientKind::PGOff;
    c.phi.resize(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) c.phi[j] = std::exp(log_s[j]) * batch.samples[j].reward;
  } else {
    c.kind = CoefficientKind::MMLOff;
    std::vector<double> log_w(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) log_w[j] = log_s[j] + batch.samples[j].reward;
    c.phi = normalized_weights(log_w);
  }
  return c;
}

GradientAccumulator assemble_gradient(const Coefficients& coeffs, std::span<const GradientAccumulator> grads) {
  if (coeffs.phi.size() != grads.size()) throw InvalidInput("assemble_gradient: coefficient/gradient count mismatch");
  if (grads.empty()) throw InvalidInput("assemble_gradient: no gradients");
  GradientAccumulator out = ParamVector::zeros_like(grads.front());
  for (std::size_t j = 0; j < grads.size(); ++j) {
    if (!grads[j].same_layout(out)) throw InvalidInput("assemble_gradient: gradient shape mismatch");
    out.axpy(coeffs.phi[j], grads[j]);
  }
  return out;
}

GradientAccumulator klon_gradient_weighted(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                                           const GradientAccumulator& base, const KlonConfig& cfg,
                                           std::span<const double> weights) {
  check_grads(batch, grads);
  if (weights.size() != batch.size()) throw InvalidInput("klon_gradient: weight count mismatch");
  if (!std::isfinite(cfg.beta)) throw InvalidInput("klon_gradient: beta must be finite");
  if (cfg.beta == 0.0) return base;
  GradientAccumulator out = base;
  std::size_t events = 0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& s = batch.samples[j];
    const double log_s = clamp_log_ratio(s.cur_logprob - s.fixed_logprob, events);
    out.axpy(-cfg.beta * weights[j] * (log_s + 1.0), grads[j]);
  }
  return out;
}

GradientAccumulator klon_gradient(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                                  const GradientAccumulator& base, const KlonConfig& cfg) {
  const std::vector<double> uniform(batch.size(), 1.0 / static_cast<double>(batch.size()));
  return klon_gradient_weighted(batch, grads, base, cfg, uniform);
}

Estimate estimate_gradient(const SampleBatch& batch, std::span<const GradientAccumulator> grads,
                           const EstimatorSpec& spec) {
  batch.validate();
  check_grads(batch, grads);
  SampleBatch work = batch;
  if (spec.normalize) {
    const auto rn = normalize_rewards(batch.rewards());
    for (std::size_t j = 0; j < work.size(); ++j) work.samples[j].reward = rn[j];
  }

  Estimate est;
  if (spec.regime == PolicyRegime::Off) {
    est.coefficients = offpolicy_coefficients(work, spec.kind);
  } else {
    est.coefficients = spec.kind == EstimatorKind::MML ? mml_coefficients(work) : pg_coefficients(work);
  }
  est.clamp_events = est.coefficients.clamp_events;
  est.gradient = assemble_gradient(est.coefficients, grads);
  if (spec.regime == PolicyRegime::KLOn) {
    for (const auto& s : work.samples) {
      const double log_s = s.cur_logprob - s.fixed_logprob;
      if (std::abs(log_s) > kLogRatioClamp) ++est.clamp_events;
    }
    est.gradient = klon_gradient(work, grads, est.gradient, KlonConfig{spec.beta});
  }
  return est;
}

}  // namespace riff
