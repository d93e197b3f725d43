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

#include <string>

#include "drg/rng.hpp"
#include "drg/tensor.hpp"

namespace drg::geometry {

// Axis-aligned box in pixel coordinates; valid iff x2 > x1, y2 > y1 and all
// coordinates are finite.
struct BBox {
  Real x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  Real width() const { return x2 - x1; }
  Real height() const { return y2 - y1; }
  Real area() const { return width() * height(); }
  bool valid() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Throws drg::Error describing the offending box.
void validate(const BBox& box);

struct Detection {
  BBox box;
  std::string category;
  Real score = 0;
};

// Two-channel binary raster [2 x S x S]; channel 0 holds the human box,
// channel 1 the object box.
struct SpatialMap {
  Tensor channels;

  std::size_t size() const { return channels.dim(1); }
};

inline constexpr std::size_t kDefaultRasterSize = 64;

Real iou(const BBox& a, const BBox& b);
BBox union_box(const BBox& a, const BBox& b);

// Maps both boxes through the affine transform taking their union box onto
// [0, size]^2 and marks every cell whose center lies in the half-open
// transformed box [x1, x2) x [y1, y2).
SpatialMap rasterize_pair(const BBox& human, const BBox& object, std::size_t size = kDefaultRasterSize);

struct JitterConfig {
  Real max_shift = 0.1;  // fraction of width / height
  Real min_scale = 0.9;
  Real max_scale = 1.1;
  Real min_iou = 0.7;  // strict lower bound on accepted IoU
};

// Random translate + scale of `box`, rejection-sampled until IoU with the
// source exceeds config.min_iou. Returns the source box unchanged once
// max_tries candidates have been rejected.
BBox jitter_box(const BBox& box, Rng& rng, int max_tries = 50, const JitterConfig& config = {});

}  // namespace drg::geometry
