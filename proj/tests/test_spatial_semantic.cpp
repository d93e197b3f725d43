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
#include <sstream>

#include "doctest.h"
#include "drg/error.hpp"
#include "drg/numkernel.hpp"
#include "drg/spatial_semantic.hpp"
#include "support.hpp"

using namespace drg;
using namespace drg::features;
using drg::testing::random_tensor;

namespace {

std::string embedding_line(const std::string& token, std::size_t count, Real base) {
  std::ostringstream out;
  out << token;
  for (std::size_t i = 0; i < count; ++i) out << ' ' << base + 0.001 * static_cast<Real>(i);
  out << '\n';
  return out.str();
}

EmbeddingTable table_with(const std::vector<std::string>& names, std::size_t dim, Rng& rng) {
  return drg::testing::random_table(dim, names, rng);
}

}  // namespace

TEST_CASE("default ConvNet shape is 5408") {
  const SpatialConvConfig config;
  CHECK(config.final_extent() == 13);
  CHECK(config.output_dim() == kSpatialDim);
  CHECK(kFeatureDim == 5708);

  Rng rng(1);
  const auto params = SpatialConvParams::random(config, rng);
  const auto map = geometry::rasterize_pair({0, 0, 10, 20}, {5, 5, 30, 12});
  CHECK(spatial_features(map, params).numel() == 5408);

  const auto zero = spatial_features(geometry::SpatialMap{Tensor({2, 64, 64})}, SpatialConvParams::zeros(config));
  CHECK(zero == Tensor({5408}));

  SpatialConvConfig bad;
  bad.raster_size = 10;
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_CASE("outputs depend only on cells inside the receptive fields") {
  // On a 16x16 map, conv5 -> pool -> conv3 -> pool gives 2x2 outputs per
  // channel and the top output row only sees input rows 0..11. Flipping rows
  // 12..15 must leave that row untouched.
  SpatialConvConfig small{12, 3, 2, 5, 3};
  SpatialConvConfig wider{16, 3, 2, 5, 3};
  Rng rng(2);
  const auto params = SpatialConvParams::random(small, rng);
  Tensor a({2, 16, 16}), b({2, 16, 16});
  for (std::size_t i = 0; i < a.numel(); ++i) a[i] = b[i] = static_cast<Real>(rng.below(2));
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t y = 12; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) b[(c * 16 + y) * 16 + x] = 1.0 - b[(c * 16 + y) * 16 + x];
    }
  }
  CHECK(wider.output_dim() == 2 * 2 * 2);
  const Tensor fa = spatial_features({a}, params), fb = spatial_features({b}, params);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(fa[c * 4 + 0] == fb[c * 4 + 0]);
    CHECK(fa[c * 4 + 1] == fb[c * 4 + 1]);
  }
  CHECK(fa != fb);
}

TEST_CASE("spatial ConvNet backward matches finite differences") {
  const SpatialConvConfig config{12, 3, 2, 5, 3};
  Rng rng(3);
  auto params = SpatialConvParams::random(config, rng);
  for (Tensor* t : {&params.conv1_bias, &params.conv2_bias}) {
    for (Real& v : t->values()) v = rng.uniform(0.05, 0.3);
  }
  const auto map = geometry::rasterize_pair({0, 0, 6, 10}, {3, 2, 12, 7}, 12);
  const Tensor w = random_tensor({config.output_dim()}, rng);

  auto loss_of = [&](const SpatialConvParams& p) {
    const Tensor y = spatial_features(map, p);
    Real s = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += w[i] * y[i];
    return s;
  };
  SpatialForwardCache cache;
  spatial_features(map, params, &cache);
  const SpatialConvParams g = spatial_features_backward(cache, params, w);

  auto check = [&](Tensor SpatialConvParams::* member, const Tensor& grad) {
    auto report = numkernel::finite_diff_check(
        [&](const Tensor& t) {
          SpatialConvParams p = params;
          p.*member = t;
          return loss_of(p);
        },
        [&](const Tensor&) { return grad; }, params.*member, 1e-6);
    CHECK(report.max_relative_error < 1e-4);
  };
  check(&SpatialConvParams::conv1_kernels, g.conv1_kernels);
  check(&SpatialConvParams::conv1_bias, g.conv1_bias);
  check(&SpatialConvParams::conv2_kernels, g.conv2_kernels);
  check(&SpatialConvParams::conv2_bias, g.conv2_bias);
}

TEST_CASE("build_feature layout") {
  Rng rng(4);
  const auto table = table_with({"cup", "dog"}, kEmbeddingDim, rng);
  const auto params = SpatialConvParams::random({}, rng);
  const geometry::Detection h{{10, 10, 50, 90}, "person", 0.9};
  const geometry::Detection cup{{40, 30, 60, 50}, "cup", 0.5};
  const auto f = build_feature(h, cup, table, params);
  CHECK(f.values.numel() == 5708);
  CHECK(f.spatial_dim == 5408);
  const Tensor& entry = table.entries().at("cup");
  CHECK(std::equal(f.semantic().begin(), f.semantic().end(), entry.values().begin()));

  // Same layout elsewhere in the image at twice the scale.
  const geometry::Detection h2{{120, 20, 200, 180}, "person", 0.3};
  const geometry::Detection cup2{{180, 60, 220, 100}, "cup", 0.7};
  CHECK(build_feature(h2, cup2, table, params).values == f.values);

  geometry::Detection dog = cup;
  dog.category = "dog";
  const auto g = build_feature(h, dog, table, params);
  CHECK(std::equal(f.spatial().begin(), f.spatial().end(), g.spatial().begin()));
  CHECK(!std::equal(f.semantic().begin(), f.semantic().end(), g.semantic().begin()));

  geometry::Detection unknown = cup;
  unknown.category = "zebra";
  CHECK_THROWS_AS(build_feature(h, unknown, table, params), MissingEmbeddingError);
}

TEST_CASE("embedding files") {
  SUBCASE("single entry") {
    std::istringstream in(embedding_line("dog", 300, 0.5));
    const auto table = parse_embeddings(in, "mem");
    CHECK(table.size() == 1);
    CHECK(table.lookup("dog").numel() == 300);
    CHECK(table.lookup("dog")[1] == doctest::Approx(0.501));
  }
  SUBCASE("short line reports its line number") {
    std::istringstream in(embedding_line("cat", 300, 0) + embedding_line("dog", 299, 0));
    try {
      parse_embeddings(in, "mem");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.source() == "mem");
    }
  }
  SUBCASE("duplicates are rejected") {
    std::istringstream in(embedding_line("dog", 300, 0) + embedding_line("dog", 300, 1));
    CHECK_THROWS_AS(parse_embeddings(in, "mem"), ParseError);
  }
  SUBCASE("header line and blank lines") {
    std::istringstream in("2 3\n\nbig 1 2 3\nbat 3 4 5\n");
    const auto table = parse_embeddings(in, "mem", 3);
    CHECK(table.size() == 2);
  }
  SUBCASE("malformed number") {
    std::istringstream in("a 1 2 x\n");
    CHECK_THROWS_AS(parse_embeddings(in, "mem", 3), ParseError);
  }
  SUBCASE("multi-word categories") {
    std::istringstream in("baseball 1 2 3\nbat 3 4 5\nhair_drier 9 9 9\n");
    const auto table = parse_embeddings(in, "mem", 3);
    CHECK(table.lookup("baseball bat") == Tensor::vector({2, 3, 4}));
    CHECK(table.lookup("hair drier") == Tensor::vector({9, 9, 9}));
    CHECK_THROWS_AS(table.lookup("tennis racket"), MissingEmbeddingError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_embeddings("/nonexistent/embeddings.txt"), ParseError); }
}
