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
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "drg/geometry.hpp"
#include "drg/rng.hpp"
#include "drg/tensor.hpp"

namespace drg::features {

inline constexpr std::size_t kEmbeddingDim = 300;
inline constexpr std::size_t kSpatialDim = 5408;  // 32 * 13 * 13
inline constexpr std::size_t kFeatureDim = kSpatialDim + kEmbeddingDim;

// Two-layer ConvNet over the interaction pattern:
// conv(k1, 2 -> c1) -> relu -> pool2 -> conv(k2, c1 -> c2) -> relu -> pool2 -> flatten.
// Defaults give 64 -> 60 -> 30 -> 26 -> 13 and 32 * 13 * 13 = 5408 outputs.
struct SpatialConvConfig {
  std::size_t raster_size = geometry::kDefaultRasterSize;
  std::size_t conv1_channels = 64;
  std::size_t conv2_channels = 32;
  std::size_t conv1_kernel = 5;
  std::size_t conv2_kernel = 5;

  // Spatial extent after the second pooling stage. Throws DimensionError if
  // any stage is undersized or a pooling input is odd.
  std::size_t final_extent() const;
  std::size_t output_dim() const;
  void validate() const { (void)final_extent(); }

  friend bool operator==(const SpatialConvConfig&, const SpatialConvConfig&) = default;
};

struct SpatialConvParams {
  Tensor conv1_kernels;  // [c1 x 2 x k1 x k1]
  Tensor conv1_bias;     // [c1]
  Tensor conv2_kernels;  // [c2 x c1 x k2 x k2]
  Tensor conv2_bias;     // [c2]

  static SpatialConvParams zeros(const SpatialConvConfig& config);
  // He-uniform kernels, zero biases.
  static SpatialConvParams random(const SpatialConvConfig& config, Rng& rng);
};

struct SpatialForwardCache {
  Tensor input;
  Tensor conv1_out;
  std::vector<std::size_t> pool1_argmax;
  Tensor pool1_out;
  Tensor conv2_out;
  std::vector<std::size_t> pool2_argmax;
  Shape pool2_input_shape;
};

// Flattened spatial relation feature of one interaction pattern.
Tensor spatial_features(const geometry::SpatialMap& map, const SpatialConvParams& params,
                        SpatialForwardCache* cache = nullptr);
// Parameter gradients for dL/d(spatial_features) = grad_out.
SpatialConvParams spatial_features_backward(const SpatialForwardCache& cache, const SpatialConvParams& params,
                                            const Tensor& grad_out);

// Category name -> word vector. Immutable once loaded.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = kEmbeddingDim) : dim_(dim) {}
  EmbeddingTable(const EmbeddingTable& other) : dim_(other.dim_), vectors_(other.vectors_) {}
  EmbeddingTable& operator=(const EmbeddingTable& other);

  // Throws drg::Error on duplicates or a wrong vector length.
  void insert(const std::string& category, Tensor vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& category) const { return vectors_.count(category) > 0; }
  const std::map<std::string, Tensor>& entries() const { return vectors_; }

  // Exact token first. Multi-word categories ("baseball bat") then try the
  // underscore-joined token and finally the mean of the per-word vectors
  // (logged as a warning). Throws MissingEmbeddingError otherwise.
  Tensor lookup(const std::string& category) const;

 private:
  std::size_t dim_;
  std::map<std::string, Tensor> vectors_;
  mutable std::mutex warn_mutex_;
  mutable std::set<std::string> warned_;
};

// Whitespace separated text: one category token followed by `dim` decimals
// per line. A leading "<count> <dim>" header line is accepted and skipped.
// Blank lines are ignored. Errors carry the 1-based line number.
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source, std::size_t dim = kEmbeddingDim);
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t dim = kEmbeddingDim);

// x_ij = [spatial part | embedding of the object category].
struct SpatialSemanticFeature {
  Tensor values;
  std::size_t spatial_dim = 0;

  std::span<const Real> spatial() const { return values.values().first(spatial_dim); }
  std::span<const Real> semantic() const { return values.values().subspan(spatial_dim); }
};

SpatialSemanticFeature build_feature(const geometry::Detection& human, const geometry::Detection& object,
                                     const EmbeddingTable& table, const SpatialConvParams& params,
                                     const SpatialConvConfig& config = {});

}  // namespace drg::features
