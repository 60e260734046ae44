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

#include "riff/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "riff/error.hpp"

namespace riff {

void AdamW::step(ParamVector& params, const GradientAccumulator& grad, std::span<const bool> trainable) {
  if (!params.same_layout(grad)) throw InvalidInput("AdamW: gradient layout mismatch");
  const auto& segments = params.layout().segments();
  if (!trainable.empty() && trainable.size() != segments.size()) {
    throw InvalidInput("AdamW: trainable mask size mismatch");
  }
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    v_max_.assign(params.size(), 0.0);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double lr = config_.lr;

  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!trainable.empty() && !trainable[s]) continue;
    const auto& seg = segments[s];
    for (std::size_t i = seg.offset; i < seg.offset + seg.length; ++i) {
      const double g = grad[i];
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
      double v = v_[i];
      if (config_.amsgrad) {
        v_max_[i] = std::max(v_max_[i], v_[i]);
        v = v_max_[i];
      }
      params[i] -= lr * config_.weight_decay * params[i];
      params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v / bc2) + config_.eps);
    }
  }
}

}  // namespace riff
