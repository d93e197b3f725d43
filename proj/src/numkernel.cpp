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
#include "drg/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drg/error.hpp"

namespace drg::numkernel {

namespace {

void expect_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_to_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  expect_rank(a, 2, "matmul lhs");
  expect_rank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul inner extents disagree: " + shape_to_string(a.shape()) + " * " +
                         shape_to_string(b.shape()));
  }
  Tensor out({m, n});
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* pc = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = pa[i * k + p];
      const Real* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return out;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out) {
  expect_shape(grad_out, {a.dim(0), b.dim(1)}, "matmul grad");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  MatmulGrads g{Tensor(a.shape()), Tensor(b.shape())};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      Real acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += grad_out.at(i, j) * b.at(p, j);
      g.a.at(i, p) = acc;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a.at(i, p);
      for (std::size_t j = 0; j < n; ++j) g.b.at(p, j) += av * grad_out.at(i, j);
    }
  }
  return g;
}

Real dot(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) throw DimensionError("dot length mismatch");
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<Real> matvec(const Tensor& weight, std::span<const Real> x) {
  expect_rank(weight, 2, "matvec weight");
  if (weight.dim(1) != x.size()) {
    throw DimensionError("matvec: weight " + shape_to_string(weight.shape()) + " vs vector of length " +
                         std::to_string(x.size()));
  }
  std::vector<Real> out(weight.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot(weight.row(r), x);
  return out;
}

Tensor linear_rows(const Tensor& rows, const Tensor& weight) {
  expect_rank(rows, 2, "linear rows");
  expect_rank(weight, 2, "linear weight");
  if (rows.dim(1) != weight.dim(1)) {
    throw DimensionError("linear_rows: rows " + shape_to_string(rows.shape()) + " vs weight " +
                         shape_to_string(weight.shape()));
  }
  Tensor out({rows.dim(0), weight.dim(0)});
  for (std::size_t n = 0; n < rows.dim(0); ++n) {
    for (std::size_t m = 0; m < weight.dim(0); ++m) out.at(n, m) = dot(rows.row(n), weight.row(m));
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.empty()) throw DimensionError("softmax of empty input");
  expect_rank(logits, 1, "softmax");
  const auto v = logits.values();
  const Real peak = *std::max_element(v.begin(), v.end());
  Tensor out(logits.shape());
  Real total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (auto& x : out.values()) x /= total;
  return out;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_y) {
  expect_shape(grad_y, y.shape(), "softmax grad");
  const Real inner = dot(y.values(), grad_y.values());
  Tensor out(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) out[i] = y[i] * (grad_y[i] - inner);
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps, LayerNormCache* cache) {
  expect_rank(x, 1, "layer_norm input");
  expect_shape(gain, x.shape(), "layer_norm gain");
  expect_shape(bias, x.shape(), "layer_norm bias");
  const std::size_t d = x.numel();
  Real mean = 0;
  for (Real v : x.values()) mean += v;
  mean /= static_cast<Real>(d);
  Real var = 0;
  for (Real v : x.values()) var += (v - mean) * (v - mean);
  var /= static_cast<Real>(d);
  const Real inv_std = 1.0 / std::sqrt(var + eps);

  Tensor normalized(x.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < d; ++i) {
    normalized[i] = (x[i] - mean) * inv_std;
    out[i] = normalized[i] * gain[i] + bias[i];
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return out;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gain, const Tensor& grad_out) {
  const Tensor& xhat = cache.normalized;
  expect_shape(grad_out, xhat.shape(), "layer_norm grad");
  const std::size_t d = xhat.numel();
  LayerNormGrads g{Tensor(xhat.shape()), Tensor(xhat.shape()), Tensor(xhat.shape())};
  Real sum_g = 0, sum_g_xhat = 0;
  std::vector<Real> gxhat(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.gain[i] = grad_out[i] * xhat[i];
    g.bias[i] = grad_out[i];
    gxhat[i] = grad_out[i] * gain[i];
    sum_g += gxhat[i];
    sum_g_xhat += gxhat[i] * xhat[i];
  }
  const Real inv_d = 1.0 / static_cast<Real>(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.x[i] = cache.inv_std * (gxhat[i] - inv_d * sum_g - xhat[i] * inv_d * sum_g_xhat);
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0 ? x[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  expect_shape(grad_out, x.shape(), "relu grad");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0 ? grad_out[i] : 0.0;
  return out;
}

Real sigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  expect_shape(grad_out, y.shape(), "sigmoid grad");
  Tensor out(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) out[i] = grad_out[i] * y[i] * (1.0 - y[i]);
  return out;
}

namespace {

struct ConvDims {
  std::size_t c_in, h, w, c_out, k, oh, ow;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernels) {
  expect_rank(input, 3, "conv2d input");
  expect_rank(kernels, 4, "conv2d kernels");
  ConvDims d{input.dim(0), input.dim(1), input.dim(2), kernels.dim(0), kernels.dim(2), 0, 0};
  if (kernels.dim(1) != d.c_in || kernels.dim(3) != d.k) {
    throw DimensionError("conv2d kernels " + shape_to_string(kernels.shape()) + " incompatible with input " +
                         shape_to_string(input.shape()));
  }
  if (d.h < d.k || d.w < d.k) {
    throw DimensionError("conv2d input " + shape_to_string(input.shape()) + " smaller than kernel " +
                         std::to_string(d.k));
  }
  d.oh = d.h - d.k + 1;
  d.ow = d.w - d.k + 1;
  return d;
}

}  // namespace

Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const ConvDims d = conv_dims(input, kernels);
  expect_shape(bias, {d.c_out}, "conv2d bias");
  Tensor out({d.c_out, d.oh, d.ow});
  const Real* in = input.data();
  const Real* ker = kernels.data();
  Real* o = out.data();
  for (std::size_t co = 0; co < d.c_out; ++co) {
    Real* oplane = o + co * d.oh * d.ow;
    std::fill(oplane, oplane + d.oh * d.ow, bias[co]);
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      const Real* iplane = in + ci * d.h * d.w;
      const Real* kplane = ker + (co * d.c_in + ci) * d.k * d.k;
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const Real kv = kplane[ky * d.k + kx];
          if (kv == 0) continue;
          for (std::size_t y = 0; y < d.oh; ++y) {
            const Real* irow = iplane + (y + ky) * d.w + kx;
            Real* orow = oplane + y * d.ow;
            for (std::size_t x = 0; x < d.ow; ++x) orow[x] += kv * irow[x];
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_valid_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out) {
  const ConvDims d = conv_dims(input, kernels);
  expect_shape(grad_out, {d.c_out, d.oh, d.ow}, "conv2d grad");
  ConvGrads g{Tensor(input.shape()), Tensor(kernels.shape()), Tensor({d.c_out})};
  const Real* in = input.data();
  const Real* ker = kernels.data();
  const Real* go = grad_out.data();
  Real* gin = g.input.data();
  Real* gker = g.kernels.data();
  for (std::size_t co = 0; co < d.c_out; ++co) {
    const Real* gplane = go + co * d.oh * d.ow;
    Real bsum = 0;
    for (std::size_t i = 0; i < d.oh * d.ow; ++i) bsum += gplane[i];
    g.bias[co] = bsum;
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      const Real* iplane = in + ci * d.h * d.w;
      Real* giplane = gin + ci * d.h * d.w;
      const Real* kplane = ker + (co * d.c_in + ci) * d.k * d.k;
      Real* gkplane = gker + (co * d.c_in + ci) * d.k * d.k;
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const Real kv = kplane[ky * d.k + kx];
          Real acc = 0;
          for (std::size_t y = 0; y < d.oh; ++y) {
            const Real* irow = iplane + (y + ky) * d.w + kx;
            Real* girow = giplane + (y + ky) * d.w + kx;
            const Real* grow = gplane + y * d.ow;
            for (std::size_t x = 0; x < d.ow; ++x) {
              acc += grow[x] * irow[x];
              girow[x] += kv * grow[x];
            }
          }
          gkplane[ky * d.k + kx] += acc;
        }
      }
    }
  }
  return g;
}

Tensor maxpool2(const Tensor& input, std::vector<std::size_t>* argmax) {
  expect_rank(input, 3, "maxpool2 input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("maxpool2 needs even extents, got " + shape_to_string(input.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  if (argmax) argmax->assign(c * oh * ow, 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (ch * h + 2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + y) * ow + x;
        out[o] = input[best];
        if (argmax) (*argmax)[o] = best;
      }
    }
  }
  return out;
}

Tensor maxpool2_backward(const Shape& input_shape, std::span<const std::size_t> argmax, const Tensor& grad_out) {
  if (argmax.size() != grad_out.numel()) throw DimensionError("maxpool2 grad does not match argmax routing");
  Tensor g(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_out[o];
  return g;
}

GradCheckReport finite_diff_check(const ScalarFunction& loss, const GradientFunction& gradient, const Tensor& params,
                                  Real h) {
  if (!(h > 0)) throw Error("finite_diff_check step must be positive");
  const Real base = loss(params);
  if (!std::isfinite(base)) throw NumericError("finite_diff_check: loss is not finite");
  const Tensor analytic = gradient(params);
  expect_shape(analytic, params.shape(), "finite_diff_check gradient");

  GradCheckReport report;
  report.parameter_count = params.numel();
  Tensor probe = params;
  for (std::size_t i = 0; i < params.numel(); ++i) {
    const Real original = probe[i];
    probe[i] = original + h;
    const Real up = loss(probe);
    probe[i] = original - h;
    const Real down = loss(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) throw NumericError("finite_diff_check: loss is not finite");
    const Real numeric = (up - down) / (2 * h);
    const Real denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic[i] - numeric) / denom);
  }
  return report;
}

}  // namespace drg::numkernel
