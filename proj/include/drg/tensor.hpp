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
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace drg {

using Real = double;
using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major tensor of reals. Every extent is positive and the data
// length always equals the product of the extents.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<Real> data);
  Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<Real> data);

  // Validating constructor for values that come from outside the process.
  // Rejects NaN and Inf with NumericError.
  static Tensor from_external(Shape shape, std::vector<Real> data);
  static Tensor vector(std::vector<Real> data);
  static Tensor filled(Shape shape, Real value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  const std::vector<Real>& storage() const { return data_; }
  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  // Row r of a rank-2 tensor.
  std::span<Real> row(std::size_t r);
  std::span<const Real> row(std::size_t r) const;

  // Same data, new extents with equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;
  void fill(Real value);
  // this += scale * other, shapes must agree.
  void add_scaled(const Tensor& other, Real scale = 1.0);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Throws DimensionError naming `what` unless `t` has exactly `expected` extents.
void expect_shape(const Tensor& t, const Shape& expected, const char* what);

}  // namespace drg
