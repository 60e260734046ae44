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
#include "riff/diffmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "riff/error.hpp"

namespace riff {

std::vector<LogProb> log_softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("log_softmax: temperature must be positive");
  }
  if (logits.empty()) throw InvalidInput("log_softmax: empty logits");
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw NumericError("log_softmax: non-finite logit at index " + std::to_string(i));
    }
    max = std::max(max, logits[i] / temperature);
  }
  std::vector<LogProb> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature - max;
    sum += std::exp(out[i]);
  }
  const double log_z = std::log(sum);
  for (double& v : out) v -= log_z;
  return out;
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("logsumexp: empty input");
  double max = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw NumericError("logsumexp: NaN or +inf input");
    }
    max = std::max(max, x);
  }
  if (xs.size() == 1) return xs[0];
  if (max == -std::numeric_limits<double>::infinity()) return max;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - max);
  return max + std::log(sum);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  auto out = log_softmax(logits, temperature);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> finite_diff_grad(const ScalarFn& f, const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_grad: step must be positive");
  std::vector<double> grad(theta.size());
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      auto [name, off] = theta.locate(i);
      throw NumericError("finite_diff_grad: non-finite objective at coordinate " + std::to_string(i) +
                         " (segment '" + std::string(name) + "' offset " + std::to_string(off) + ")");
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double max_relative_error(std::span<const double> actual, std::span<const double> reference,
                          double floor) {
  if (actual.size() != reference.size()) throw InvalidInput("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (std::abs(reference[i]) < floor) continue;
    worst = std::max(worst, std::abs(actual[i] - reference[i]) / std::abs(reference[i]));
  }
  return worst;
}

}  // namespace riff
