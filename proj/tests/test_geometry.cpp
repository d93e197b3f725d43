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
#include <cmath>

#include "doctest.h"
#include "drg/error.hpp"
#include "drg/geometry.hpp"

using namespace drg;
using namespace drg::geometry;

namespace {

Real channel_sum(const SpatialMap& m, std::size_t c) {
  const std::size_t s = m.size();
  Real sum = 0;
  for (std::size_t i = 0; i < s * s; ++i) sum += m.channels[c * s * s + i];
  return sum;
}

BBox random_box(Rng& rng) {
  const Real x = rng.uniform(0, 100), y = rng.uniform(0, 100);
  return {x, y, x + rng.uniform(1, 80), y + rng.uniform(1, 80)};
}

}  // namespace

TEST_CASE("iou") {
  const BBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{5, 5, 6, 6}) == 0.0);
  CHECK(iou(a, BBox{2, 0, 4, 2}) == 0.0);  // touching edges
  CHECK(iou(a, BBox{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const BBox p = random_box(rng), q = random_box(rng);
    const Real v = iou(p, q);
    CHECK(v >= 0);
    CHECK(v <= 1);
    CHECK(v == iou(q, p));
    CHECK(iou(p, p) == 1.0);
  }
}

TEST_CASE("union_box") {
  CHECK(union_box({1, 1, 2, 2}, {0, 0, 3, 3}) == BBox{0, 0, 3, 3});
  CHECK(union_box({0, 0, 2, 2}, {1, 1, 3, 3}) == BBox{0, 0, 3, 3});
  CHECK(union_box({0, 0, 1, 1}, {4, 4, 5, 5}) == BBox{0, 0, 5, 5});
}

TEST_CASE("validate rejects degenerate boxes") {
  CHECK_NOTHROW(validate({0, 0, 1, 1}));
  CHECK_THROWS_AS(validate({0, 0, 0, 1}), Error);
  CHECK_THROWS_AS(validate({2, 0, 1, 1}), Error);
  CHECK_THROWS_AS(validate({0, 0, std::nan(""), 1}), Error);
}

TEST_CASE("rasterize_pair examples") {
  const BBox u{10, 20, 74, 84};
  const SpatialMap full = rasterize_pair(u, {30, 30, 40, 40});
  CHECK(full.size() == 64);
  CHECK(channel_sum(full, 0) == 64 * 64);

  const SpatialMap obj = rasterize_pair({30, 30, 40, 40}, u);
  CHECK(channel_sum(obj, 1) == 64 * 64);

  const SpatialMap half = rasterize_pair({10, 20, 42, 84}, u);
  CHECK(channel_sum(half, 0) == 32 * 64);
  for (std::size_t y = 0; y < 64; ++y) {
    CHECK(half.channels[y * 64 + 31] == 1.0);
    CHECK(half.channels[y * 64 + 32] == 0.0);
  }

  CHECK_THROWS_AS(rasterize_pair(u, u, 4), DimensionError);
}

TEST_CASE("rasterize_pair is invariant to a common scale and translation") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    // Power-of-two scales and integer shifts keep the affine map exact.
    const BBox h = {std::round(rng.uniform(0, 50)), std::round(rng.uniform(0, 50)), 0, 0};
    const BBox hb{h.x1, h.y1, h.x1 + 1 + std::round(rng.uniform(0, 60)), h.y1 + 1 + std::round(rng.uniform(0, 60))};
    const Real ox = std::round(rng.uniform(0, 80)), oy = std::round(rng.uniform(0, 80));
    const BBox ob{ox, oy, ox + 1 + std::round(rng.uniform(0, 40)), oy + 1 + std::round(rng.uniform(0, 40))};
    const Real s = std::ldexp(1.0, static_cast<int>(rng.below(5)) - 2);
    const Real tx = std::round(rng.uniform(-100, 100)), ty = std::round(rng.uniform(-100, 100));
    auto move = [&](const BBox& b) { return BBox{b.x1 * s + tx, b.y1 * s + ty, b.x2 * s + tx, b.y2 * s + ty}; };
    CHECK(rasterize_pair(hb, ob, 16).channels == rasterize_pair(move(hb), move(ob), 16).channels);
  }
}

TEST_CASE("rasterized area tracks the transformed box area") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const BBox h = random_box(rng), o = random_box(rng);
    const std::size_t size = 8 + rng.below(57);
    const SpatialMap m = rasterize_pair(h, o, size);
    const BBox u = union_box(h, o);
    const Real s = static_cast<Real>(size);
    const Real area = (h.width() / u.width() * s) * (h.height() / u.height() * s);
    CHECK(std::abs(channel_sum(m, 0) - area) <= 2.0 * s);
    for (Real v : m.channels.values()) CHECK((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("jitter_box") {
  const BBox b{10, 20, 110, 220};
  Rng rng(4);
  JitterConfig none;
  none.max_shift = 0;
  none.min_scale = none.max_scale = 1.0;
  CHECK(jitter_box(b, rng, 50, none) == b);

  for (int trial = 0; trial < 500; ++trial) {
    const BBox j = jitter_box(b, rng);
    CHECK(iou(j, b) > 0.7);
  }

  Rng r1(99), r2(99);
  for (int trial = 0; trial < 20; ++trial) CHECK(jitter_box(b, r1) == jitter_box(b, r2));

  // An unreachable IoU bound falls back to the source box.
  JitterConfig strict;
  strict.min_iou = 1.0;
  strict.max_shift = 0.5;
  CHECK(jitter_box(b, rng, 5, strict) == b);
}
