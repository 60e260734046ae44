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
#include "riff/param_vector.hpp"

#include <algorithm>
#include <cmath>

#include "riff/error.hpp"

namespace riff {

Layout& Layout::add(std::string name, std::size_t length) {
  if (contains(name)) throw InvalidInput("duplicate segment '" + name + "'");
  segments_.push_back(Segment{std::move(name), size_, length});
  size_ += length;
  return *this;
}

std::optional<std::size_t> Layout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  return std::nullopt;
}

const Segment& Layout::segment(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw InvalidInput("unknown segment '" + std::string(name) + "'");
  return segments_[*idx];
}

ParamVector::ParamVector(std::shared_ptr<const Layout> layout)
    : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

ParamVector::ParamVector(Layout layout)
    : ParamVector(std::make_shared<const Layout>(std::move(layout))) {}

ParamVector ParamVector::zeros_like(const ParamVector& other) { return ParamVector(other.layout_); }

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  return *layout_ == *other.layout_;
}

std::span<double> ParamVector::segment(std::string_view name) {
  const auto& s = layout_->segment(name);
  return std::span<double>(values_).subspan(s.offset, s.length);
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const auto& s = layout_->segment(name);
  return std::span<const double>(values_).subspan(s.offset, s.length);
}

std::pair<std::string_view, std::size_t> ParamVector::locate(std::size_t i) const {
  for (const auto& s : layout_->segments()) {
    if (i >= s.offset && i < s.offset + s.length) return {s.name, i - s.offset};
  }
  throw InvalidInput("index " + std::to_string(i) + " outside parameter vector");
}

void ParamVector::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void ParamVector::axpy(double alpha, const ParamVector& other) {
  if (!same_layout(other)) throw InvalidInput("axpy: layout mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other.values_[i];
}

void ParamVector::scale(double alpha) {
  for (double& v : values_) v *= alpha;
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ParamVector::check_finite(std::string_view what) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      auto [name, off] = locate(i);
      throw NumericError(std::string(what) + ": non-finite value in segment '" + std::string(name) +
                         "' at offset " + std::to_string(off));
    }
  }
}

bool ParamVector::operator==(const ParamVector& other) const {
  return same_layout(other) && values_ == other.values_;
}

}  // namespace riff
