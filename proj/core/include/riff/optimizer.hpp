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

#include <span>
#include <vector>

#include "riff/param_vector.hpp"

namespace riff {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  bool amsgrad = true;
};

/// Decoupled-weight-decay Adam (AMSGrad variant by default). Minimizes: the
/// caller passes the gradient of a loss. Segments outside `trainable` are
/// left bitwise untouched, including by weight decay.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  /// `trainable` is indexed by segment; empty means every segment trains.
  void step(ParamVector& params, const GradientAccumulator& grad, std::span<const bool> trainable = {});

  const AdamWConfig& config() const { return config_; }
  std::size_t steps_taken() const { return t_; }

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<double> v_max_;
  std::size_t t_ = 0;
};

}  // namespace riff
