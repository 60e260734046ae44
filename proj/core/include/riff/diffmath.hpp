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

#include <functional>
#include <span>
#include <vector>

#include "riff/param_vector.hpp"

namespace riff {

/// Log-probability on the natural-log scale.
using LogProb = double;

/// Numerically stable log-softmax of logits / temperature.
/// Throws NumericError on non-finite logits, InvalidInput on temperature <= 0.
std::vector<LogProb> log_softmax(std::span<const double> logits, double temperature = 1.0);

/// log(sum(exp(xs))). Entries may be -inf; NaN or +inf throws.
double logsumexp(std::span<const double> xs);

/// Softmax via log_softmax; convenience for coefficient assembly.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

using ScalarFn = std::function<double(const ParamVector&)>;

/// Central differences (f(t + h e_i) - f(t - h e_i)) / 2h for every
/// coordinate. A non-finite evaluation throws NumericError naming the
/// coordinate and its segment.
std::vector<double> finite_diff_grad(const ScalarFn& f, const ParamVector& theta, double h = 1e-5);

/// Gaussian-CDF gelu: x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

/// max_i |a_i - b_i| / |b_i| over components with |b_i| >= floor.
double max_relative_error(std::span<const double> actual, std::span<const double> reference,
                          double floor = 1e-8);

}  // namespace riff
