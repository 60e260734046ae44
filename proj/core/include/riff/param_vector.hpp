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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riff {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

/// Ordered, contiguous segment table. Segments never overlap and together
/// cover [0, size()) exactly; this holds by construction since segments can
/// only be appended.
class Layout {
 public:
  Layout& add(std::string name, std::size_t length);

  std::size_t size() const { return size_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  bool operator==(const Layout&) const = default;

 private:
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

/// Flat vector of 64-bit reals addressed through named segments. Parameters
/// and their gradients share this type; a gradient is a ParamVector with the
/// same layout as the parameters it differentiates.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::shared_ptr<const Layout> layout);
  explicit ParamVector(Layout layout);

  static ParamVector zeros_like(const ParamVector& other);

  std::size_t size() const { return values_.size(); }
  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }
  bool same_layout(const ParamVector& other) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  /// Name of the segment holding flat index `i` and the offset inside it.
  std::pair<std::string_view, std::size_t> locate(std::size_t i) const;

  void fill(double v);
  void set_zero() { fill(0.0); }
  /// this += alpha * other. Layouts must match.
  void axpy(double alpha, const ParamVector& other);
  void scale(double alpha);

  bool all_finite() const;
  /// Throws NumericError naming the first non-finite coordinate.
  void check_finite(std::string_view what) const;

  bool operator==(const ParamVector& other) const;

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<double> values_;
};

using GradientAccumulator = ParamVector;

}  // namespace riff
