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

#include <gtest/gtest.h>

#include <cmath>

#include "riff/optimizer.hpp"

namespace riff {
namespace {

ParamVector make(double a, double b) {
  Layout l;
  l.add("a", 2).add("b", 2);
  ParamVector p(std::move(l));
  p[0] = a;
  p[1] = -a;
  p[2] = b;
  p[3] = -b;
  return p;
}

TEST(AdamW, FrozenSegmentsStayBitwise) {
  auto p = make(1.0, 2.0);
  const auto before = p;
  auto g = ParamVector::zeros_like(p);
  g.fill(0.3);
  AdamW opt({.lr = 0.1, .weight_decay = 0.5});
  const bool mask[] = {true, false};
  for (int i = 0; i < 5; ++i) opt.step(p, g, mask);
  EXPECT_EQ(p.segment("b")[0], before.segment("b")[0]);
  EXPECT_EQ(p.segment("b")[1], before.segment("b")[1]);
  EXPECT_NE(p.segment("a")[0], before.segment("a")[0]);
}

TEST(AdamW, ZeroLearningRateIsIdentity) {
  auto p = make(0.7, -1.1);
  const auto before = p;
  auto g = ParamVector::zeros_like(p);
  g.fill(-2.0);
  AdamW opt({.lr = 0.0});
  for (int i = 0; i < 3; ++i) opt.step(p, g);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.steps_taken(), 3u);
}

TEST(AdamW, FirstStepMovesByLr) {
  // Bias-corrected first step is lr * g / (|g| + eps) = lr * sign(g).
  auto p = make(0.0, 0.0);
  auto g = ParamVector::zeros_like(p);
  g[0] = 4.0;
  g[1] = -0.01;
  AdamW opt({.lr = 0.05, .weight_decay = 0.0});
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.05, 1e-9);
  EXPECT_NEAR(p[1], 0.05, 1e-6);
  EXPECT_EQ(p[2], 0.0);
}

TEST(AdamW, MinimizesQuadratic) {
  auto p = make(3.0, -2.0);
  AdamW opt({.lr = 0.05, .weight_decay = 0.0});
  auto loss = [](const ParamVector& x) {
    double s = 0.0;
    for (double v : x.values()) s += (v - 1.0) * (v - 1.0);
    return s;
  };
  const double start = loss(p);
  for (int i = 0; i < 500; ++i) {
    auto g = ParamVector::zeros_like(p);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] = 2.0 * (p[k] - 1.0);
    opt.step(p, g);
  }
  EXPECT_LT(loss(p), 1e-3 * start);
}

}  // namespace
}  // namespace riff
