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
#include "drg/spatial_semantic.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "drg/error.hpp"
#include "drg/numkernel.hpp"

namespace drg::features {

namespace nk = numkernel;

std::size_t SpatialConvConfig::final_extent() const {
  if (raster_size < 8) throw DimensionError("raster size must be at least 8");
  if (conv1_channels == 0 || conv2_channels == 0) throw DimensionError("conv channel counts must be positive");
  auto stage = [](std::size_t extent, std::size_t kernel, const char* which) {
    if (kernel == 0 || extent < kernel) {
      throw DimensionError(std::string(which) + ": extent " + std::to_string(extent) + " smaller than kernel " +
                           std::to_string(kernel));
    }
    const std::size_t out = extent - kernel + 1;
    if (out % 2 != 0) {
      throw DimensionError(std::string(which) + ": pooling input extent " + std::to_string(out) + " is odd");
    }
    return out / 2;
  };
  return stage(stage(raster_size, conv1_kernel, "conv1"), conv2_kernel, "conv2");
}

std::size_t SpatialConvConfig::output_dim() const {
  const std::size_t e = final_extent();
  return conv2_channels * e * e;
}

SpatialConvParams SpatialConvParams::zeros(const SpatialConvConfig& c) {
  c.validate();
  return {Tensor({c.conv1_channels, 2, c.conv1_kernel, c.conv1_kernel}), Tensor({c.conv1_channels}),
          Tensor({c.conv2_channels, c.conv1_channels, c.conv2_kernel, c.conv2_kernel}), Tensor({c.conv2_channels})};
}

SpatialConvParams SpatialConvParams::random(const SpatialConvConfig& c, Rng& rng) {
  SpatialConvParams p = zeros(c);
  const Real b1 = std::sqrt(6.0 / static_cast<Real>(2 * c.conv1_kernel * c.conv1_kernel));
  for (auto& v : p.conv1_kernels.values()) v = rng.uniform(-b1, b1);
  const Real b2 = std::sqrt(6.0 / static_cast<Real>(c.conv1_channels * c.conv2_kernel * c.conv2_kernel));
  for (auto& v : p.conv2_kernels.values()) v = rng.uniform(-b2, b2);
  return p;
}

Tensor spatial_features(const geometry::SpatialMap& map, const SpatialConvParams& params, SpatialForwardCache* cache) {
  if (map.channels.rank() != 3 || map.channels.dim(0) != 2) {
    throw DimensionError("spatial map must be [2 x S x S], got " + shape_to_string(map.channels.shape()));
  }
  Tensor c1 = nk::conv2d_valid(map.channels, params.conv1_kernels, params.conv1_bias);
  std::vector<std::size_t> a1;
  Tensor p1 = nk::maxpool2(nk::relu(c1), &a1);
  Tensor c2 = nk::conv2d_valid(p1, params.conv2_kernels, params.conv2_bias);
  std::vector<std::size_t> a2;
  Tensor r2 = nk::relu(c2);
  Tensor p2 = nk::maxpool2(r2, &a2);
  Tensor flat = p2.reshaped({p2.numel()});
  if (cache) {
    cache->input = map.channels;
    cache->conv1_out = std::move(c1);
    cache->pool1_argmax = std::move(a1);
    cache->pool1_out = std::move(p1);
    cache->conv2_out = std::move(c2);
    cache->pool2_argmax = std::move(a2);
    cache->pool2_input_shape = r2.shape();
  }
  return flat;
}

SpatialConvParams spatial_features_backward(const SpatialForwardCache& cache, const SpatialConvParams& params,
                                            const Tensor& grad_out) {
  Tensor g_r2 = nk::maxpool2_backward(cache.pool2_input_shape, cache.pool2_argmax, grad_out);
  Tensor g_c2 = nk::relu_backward(cache.conv2_out, g_r2);
  nk::ConvGrads conv2 = nk::conv2d_valid_backward(cache.pool1_out, params.conv2_kernels, g_c2);
  Tensor g_r1 = nk::maxpool2_backward(cache.conv1_out.shape(), cache.pool1_argmax, conv2.input);
  Tensor g_c1 = nk::relu_backward(cache.conv1_out, g_r1);
  nk::ConvGrads conv1 = nk::conv2d_valid_backward(cache.input, params.conv1_kernels, g_c1);
  return {std::move(conv1.kernels), std::move(conv1.bias), std::move(conv2.kernels), std::move(conv2.bias)};
}

EmbeddingTable& EmbeddingTable::operator=(const EmbeddingTable& other) {
  if (this != &other) {
    dim_ = other.dim_;
    vectors_ = other.vectors_;
  }
  return *this;
}

void EmbeddingTable::insert(const std::string& category, Tensor vector) {
  if (vector.numel() != dim_) {
    throw Error("embedding for '" + category + "' has " + std::to_string(vector.numel()) + " values, expected " +
                std::to_string(dim_));
  }
  if (!vector.all_finite()) throw NumericError("embedding for '" + category + "' is not finite");
  if (!vectors_.emplace(category, vector.reshaped({dim_})).second) {
    throw Error("duplicate embedding for '" + category + "'");
  }
}

Tensor EmbeddingTable::lookup(const std::string& category) const {
  if (auto it = vectors_.find(category); it != vectors_.end()) return it->second;

  std::vector<std::string> words;
  std::istringstream split(category);
  for (std::string w; split >> w;) words.push_back(w);
  if (words.size() < 2) throw MissingEmbeddingError(category);

  std::string joined = words.front();
  for (std::size_t i = 1; i < words.size(); ++i) joined += "_" + words[i];
  if (auto it = vectors_.find(joined); it != vectors_.end()) return it->second;

  Tensor mean({dim_});
  for (const auto& w : words) {
    auto it = vectors_.find(w);
    if (it == vectors_.end()) throw MissingEmbeddingError(category);
    mean.add_scaled(it->second);
  }
  for (auto& v : mean.values()) v /= static_cast<Real>(words.size());
  {
    std::lock_guard lock(warn_mutex_);
    if (warned_.insert(category).second) {
      spdlog::warn("no embedding for '{}' or '{}'; using the mean of its word vectors", category, joined);
    }
  }
  return mean;
}

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source, std::size_t dim) {
  EmbeddingTable table(dim);
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const bool first = !seen_content;
    seen_content = true;
    if (first && tokens.size() == 2) {
      // "<count> <dim>" header as written by common embedding exporters.
      try {
        std::size_t pos = 0;
        (void)std::stoull(tokens[0], &pos);
        if (pos == tokens[0].size() && std::stoull(tokens[1], &pos) == dim && pos == tokens[1].size()) continue;
      } catch (const std::exception&) {
      }
    }
    if (tokens.size() != dim + 1) {
      throw ParseError(source, line_no,
                       "expected a token and " + std::to_string(dim) + " values, got " +
                           std::to_string(tokens.size() - 1) + " values");
    }
    std::vector<Real> values(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& t = tokens[i + 1];
      std::size_t pos = 0;
      try {
        values[i] = std::stod(t, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != t.size() || !std::isfinite(values[i])) {
        throw ParseError(source, line_no, "malformed number '" + t + "'");
      }
    }
    if (table.contains(tokens[0])) throw ParseError(source, line_no, "duplicate category '" + tokens[0] + "'");
    table.insert(tokens[0], Tensor::vector(std::move(values)));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open embedding file");
  return parse_embeddings(in, path.string(), dim);
}

SpatialSemanticFeature build_feature(const geometry::Detection& human, const geometry::Detection& object,
                                     const EmbeddingTable& table, const SpatialConvParams& params,
                                     const SpatialConvConfig& config) {
  const Tensor embedding = table.lookup(object.category);
  const geometry::SpatialMap map = geometry::rasterize_pair(human.box, object.box, config.raster_size);
  const Tensor spatial = spatial_features(map, params);
  std::vector<Real> values;
  values.reserve(spatial.numel() + embedding.numel());
  values.insert(values.end(), spatial.values().begin(), spatial.values().end());
  values.insert(values.end(), embedding.values().begin(), embedding.values().end());
  return {Tensor::vector(std::move(values)), spatial.numel()};
}

}  // namespace drg::features
