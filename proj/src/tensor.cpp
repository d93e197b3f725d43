// Copyright 2026 The DRG-HOI Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "drg/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "drg/error.hpp"

namespace drg {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_to_string(shape_));
  }
}

Tensor::Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<Real> data)
    : Tensor(Shape(shape), std::vector<Real>(data)) {}

Tensor Tensor::from_external(Shape shape, std::vector<Real> data) {
  Tensor t(std::move(shape), std::move(data));
  if (!t.all_finite()) throw NumericError("non-finite value in tensor input");
  return t;
}

Tensor Tensor::vector(std::vector<Real> data) {
  Shape shape{data.size()};
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::filled(Shape shape, Real value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

std::span<Real> Tensor::row(std::size_t r) { return std::span<Real>(data_).subspan(r * shape_[1], shape_[1]); }

std::span<const Real> Tensor::row(std::size_t r) const {
  return std::span<const Real>(data_).subspan(r * shape_[1], shape_[1]);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (Real v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_scaled(const Tensor& other, Real scale) {
  if (other.shape_ != shape_) {
    throw DimensionError("add_scaled shape mismatch " + shape_to_string(shape_) + " vs " +
                         shape_to_string(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

void expect_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_to_string(expected) + ", got " +
                         shape_to_string(t.shape()));
  }
}

}  // namespace drg
