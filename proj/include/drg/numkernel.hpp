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
#include <functional>
#include <span>
#include <vector>

#include "drg/tensor.hpp"

// Dense forward/backward kernels. Every function is pure.
namespace drg::numkernel {

inline constexpr Real kLayerNormEps = 1e-5;
inline constexpr Real kFiniteDiffStep = 1e-4;

// Standard product of [m x k] and [k x n]. Each output entry accumulates
// over k in ascending order, so results are reproducible for a given build.
Tensor matmul(const Tensor& a, const Tensor& b);

struct MatmulGrads {
  Tensor a;
  Tensor b;
};
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out);

// Applies a linear map to every row: rows [n x k], weight [m x k] -> [n x m].
Tensor linear_rows(const Tensor& rows, const Tensor& weight);
// weight [m x k] times x [k].
std::vector<Real> matvec(const Tensor& weight, std::span<const Real> x);
Real dot(std::span<const Real> a, std::span<const Real> b);

// Numerically stable (max-subtracted) softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);
// Given y = softmax(u) and dL/dy, returns dL/du.
Tensor softmax_backward(const Tensor& y, const Tensor& grad_y);

struct LayerNormCache {
  Tensor normalized;  // (x - mean) * inv_std
  Real inv_std = 0;
};

// (x - mean) / sqrt(var + eps) * gain + bias with population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps = kLayerNormEps,
                  LayerNormCache* cache = nullptr);

struct LayerNormGrads {
  Tensor x;
  Tensor gain;
  Tensor bias;
};
LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gain, const Tensor& grad_out);

Tensor relu(const Tensor& x);
// Gradient is zero at and below zero.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor sigmoid(const Tensor& x);
Real sigmoid(Real x);
// Takes the sigmoid output, not its input.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

// Stride-1 valid cross-correlation.
// input [C_in x H x W], kernels [C_out x C_in x k x k], bias [C_out]
// -> [C_out x (H-k+1) x (W-k+1)]. Kernels are square of any size; the
// spatial stream uses k = 5.
Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, const Tensor& bias);

struct ConvGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};
ConvGrads conv2d_valid_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out);

// 2x2 non-overlapping max pooling of [C x H x W] with even H and W.
// When argmax is given it receives, per output cell, the flat input index
// of the first maximal element in row-major window order.
Tensor maxpool2(const Tensor& input, std::vector<std::size_t>* argmax = nullptr);
Tensor maxpool2_backward(const Shape& input_shape, std::span<const std::size_t> argmax, const Tensor& grad_out);

struct GradCheckReport {
  Real max_relative_error = 0;
  std::size_t parameter_count = 0;
};

using ScalarFunction = std::function<Real(const Tensor&)>;
using GradientFunction = std::function<Tensor(const Tensor&)>;

// Compares gradient(params) against central differences
// (f(p + h) - f(p - h)) / 2h, one coordinate at a time. Relative error per
// coordinate uses max(|analytic|, |numeric|, 1e-8) as denominator.
// Throws NumericError when the loss is non-finite.
GradCheckReport finite_diff_check(const ScalarFunction& loss, const GradientFunction& gradient, const Tensor& params,
                                  Real h = kFiniteDiffStep);

}  // namespace drg::numkernel
