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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drg/drg.hpp"
#include "drg/geometry.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/streams.hpp"
#include "drg/tensor.hpp"

// The full three-stream network: spatial ConvNet, both relation subgraphs
// and the four scoring heads, with per-image forward and backward passes.
namespace drg::model {

// What the relation graph nodes carry. The default is the spatial-semantic
// feature; the others are ablation substitutes: the word embedding alone,
// the spatial part alone, or the concatenated human and object appearance
// vectors.
enum class NodeInput { SpatialSemantic, Semantic, Spatial, Appearance };

std::string to_string(NodeInput input);
// Throws drg::Error for unknown names.
NodeInput node_input_from_string(const std::string& name);

struct ModelDims {
  features::SpatialConvConfig spatial;
  std::size_t embed_dim = features::kEmbeddingDim;
  std::size_t key_dim = graph::kKeyDim;
  std::size_t appearance_dim = streams::kAppearanceDim;
  std::size_t hidden_dim = streams::kHiddenDim;
  std::size_t num_actions = 29;
  NodeInput node_input = NodeInput::SpatialSemantic;

  bool uses_spatial() const { return node_input == NodeInput::SpatialSemantic || node_input == NodeInput::Spatial; }
  bool uses_embedding() const { return node_input == NodeInput::SpatialSemantic || node_input == NodeInput::Semantic; }
  // Width of the spatial slice at the start of each node feature (0 if unused).
  std::size_t spatial_part() const { return uses_spatial() ? spatial.output_dim() : 0; }
  std::size_t feature_dim() const;
  void validate() const;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ModelParams {
  features::SpatialConvParams spatial;
  graph::DRGParams drg;
  streams::StreamHead human_head;
  streams::StreamHead object_head;
  streams::StreamHead spatial_human_head;
  streams::StreamHead spatial_object_head;

  static ModelParams zeros(const ModelDims& dims);
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed);

  // Stable parameter names, in checkpoint order.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  std::size_t parameter_count() const;
  // Concatenation of all parameters in named() order, and its inverse.
  Tensor flatten() const;
  void assign_flat(const Tensor& flat);
  // this += scale * other
  void add_scaled(const ModelParams& other, Real scale = 1.0);
};

// Relation-graph ablation switches. A disabled subgraph drops its head's
// factor from the fused score; zero iterations keeps the head but feeds it
// the raw node features.
struct GraphOptions {
  int iters_human = graph::kDefaultIterations;
  int iters_object = graph::kDefaultIterations;
  bool human_graph = true;
  bool object_graph = true;

  streams::FusionMask mask() const { return {human_graph, object_graph}; }
};

struct ImageInput {
  std::vector<geometry::Detection> humans;
  std::vector<geometry::Detection> objects;
  std::vector<Tensor> human_appearance;   // one per human
  std::vector<Tensor> object_appearance;  // one per object
};

struct ImageScores {
  std::vector<Tensor> human;           // per human
  std::vector<Tensor> object;          // per object
  std::vector<Tensor> spatial_human;   // per node; empty when disabled or no graph
  std::vector<Tensor> spatial_object;  // per node; empty when disabled or no graph
};

struct ImageCache {
  std::size_t num_humans = 0;
  std::size_t num_objects = 0;
  std::size_t spatial_dim = 0;
  std::vector<features::SpatialForwardCache> spatial;  // per node
  std::vector<graph::AggregateCache> human_graph;
  std::vector<graph::AggregateCache> object_graph;
  std::vector<streams::HeadCache> human_head;
  std::vector<streams::HeadCache> object_head;
  std::vector<streams::HeadCache> spatial_human_head;
  std::vector<streams::HeadCache> spatial_object_head;
  bool features_computed = false;  // ConvNet ran; false for supplied features or no spatial part
};

// Raw node features for every human/object pair. The appearance vectors are
// only read, and then required, for NodeInput::Appearance.
graph::NodeFeatures featurize(const ModelParams& params, const ModelDims& dims, const features::EmbeddingTable& table,
                              const std::vector<geometry::Detection>& humans,
                              const std::vector<geometry::Detection>& objects,
                              std::vector<features::SpatialForwardCache>* caches = nullptr,
                              const std::vector<Tensor>* human_appearance = nullptr,
                              const std::vector<Tensor>* object_appearance = nullptr);

// Scores of all four heads. `raw_features`, when given, replaces the
// featurization step (precomputed archives).
ImageScores forward(const ModelParams& params, const ModelDims& dims, const features::EmbeddingTable& table,
                    const ImageInput& input, const GraphOptions& options, ImageCache* cache = nullptr,
                    const graph::NodeFeatures* raw_features = nullptr);

// dL/d(scores) with the same layout as ImageScores. Empty vectors mean zero.
struct ScoreGrads {
  std::vector<Tensor> human;
  std::vector<Tensor> object;
  std::vector<Tensor> spatial_human;
  std::vector<Tensor> spatial_object;
};

// Accumulates parameter gradients into `grads`.
void backward(const ImageCache& cache, const ModelParams& params, const GraphOptions& options,
              const ScoreGrads& score_grads, ModelParams& grads);

}  // namespace drg::model
