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
#include "drg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drg/error.hpp"

namespace drg {
namespace geometry {

bool BBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) && x2 > x1 && y2 > y1;
}

void validate(const BBox& box) {
  if (!box.valid()) {
    std::ostringstream msg;
    msg << "invalid box (" << box.x1 << ", " << box.y1 << ", " << box.x2 << ", " << box.y2 << ")";
    throw Error(msg.str());
  }
}

Real iou(const BBox& a, const BBox& b) {
  const Real iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const Real ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const Real inter = iw * ih;
  const Real uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BBox union_box(const BBox& a, const BBox& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

namespace {

// Cell c covers [c, c + 1); it is filled iff lo <= c + 0.5 < hi.
void fill_channel(Tensor& map, std::size_t channel, Real lo_x, Real hi_x, Real lo_y, Real hi_y) {
  const std::size_t s = map.dim(1);
  for (std::size_t r = 0; r < s; ++r) {
    const Real cy = static_cast<Real>(r) + 0.5;
    if (cy < lo_y || cy >= hi_y) continue;
    for (std::size_t c = 0; c < s; ++c) {
      const Real cx = static_cast<Real>(c) + 0.5;
      if (cx >= lo_x && cx < hi_x) map[(channel * s + r) * s + c] = 1.0;
    }
  }
}

}  // namespace

SpatialMap rasterize_pair(const BBox& human, const BBox& object, std::size_t size) {
  validate(human);
  validate(object);
  if (size < 8) throw DimensionError("raster size must be at least 8");
  const BBox ref = union_box(human, object);
  const Real sx = static_cast<Real>(size) / ref.width();
  const Real sy = static_cast<Real>(size) / ref.height();
  SpatialMap out{Tensor({2, size, size})};
  const BBox* boxes[2] = {&human, &object};
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const BBox& b = *boxes[ch];
    fill_channel(out.channels, ch, (b.x1 - ref.x1) * sx, (b.x2 - ref.x1) * sx, (b.y1 - ref.y1) * sy,
                 (b.y2 - ref.y1) * sy);
  }
  return out;
}

BBox jitter_box(const BBox& box, Rng& rng, int max_tries, const JitterConfig& config) {
  validate(box);
  const Real w = box.width(), h = box.height();
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const Real dx = rng.uniform(-config.max_shift, config.max_shift) * w;
    const Real dy = rng.uniform(-config.max_shift, config.max_shift) * h;
    const Real sw = rng.uniform(config.min_scale, config.max_scale);
    const Real sh = rng.uniform(config.min_scale, config.max_scale);
    // Scale about the center; zero shift and unit scale reproduce the box exactly.
    const Real gx = (1.0 - sw) * w / 2, gy = (1.0 - sh) * h / 2;
    const BBox candidate{box.x1 + dx + gx, box.y1 + dy + gy, box.x2 + dx - gx, box.y2 + dy - gy};
    if (candidate.valid() && iou(candidate, box) > config.min_iou) return candidate;
  }
  return box;
}

}  // namespace geometry
}  // namespace drg
