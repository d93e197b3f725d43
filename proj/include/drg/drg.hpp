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
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "drg/geometry.hpp"
#include "drg/numkernel.hpp"
#include "drg/rng.hpp"
#include "drg/tensor.hpp"

// Relation graph over human/object detections, its human-centric and
// object-centric HOI subgraphs, and attentional feature aggregation.
namespace drg::graph {

inline constexpr std::size_t kKeyDim = 1024;
inline constexpr int kDefaultIterations = 2;

enum class SubgraphKind { HumanCentric, ObjectCentric };

const char* to_string(SubgraphKind kind);

// Parameters of one subgraph. Shared by every iteration of that subgraph.
struct SubgraphParams {
  Tensor value;    // W   [d x d]
  Tensor query;    // W_q [d_k x d], applied to neighbors
  Tensor key;      // W_k [d_k x d], applied to the center node
  Tensor ln_gain;  // [d]
  Tensor ln_bias;  // [d]

  std::size_t dim() const { return value.dim(0); }
  std::size_t key_dim() const { return query.dim(0); }
  void validate() const;

  static SubgraphParams zeros(std::size_t dim, std::size_t key_dim);
  // Glorot-uniform projections, unit gain, zero bias.
  static SubgraphParams random(std::size_t dim, std::size_t key_dim, Rng& rng);
};

// The two subgraphs hold independent parameters.
struct DRGParams {
  SubgraphParams human;
  SubgraphParams object;

  const SubgraphParams& of(SubgraphKind kind) const { return kind == SubgraphKind::HumanCentric ? human : object; }
  SubgraphParams& of(SubgraphKind kind) { return kind == SubgraphKind::HumanCentric ? human : object; }
};

// Features x_ij of every HOI node, stacked row-wise with row i * |O| + j.
struct NodeFeatures {
  std::size_t num_humans = 0;
  std::size_t num_objects = 0;
  Tensor values;  // [|H||O| x d]

  std::size_t num_nodes() const { return num_humans * num_objects; }
  std::size_t dim() const { return values.dim(1); }
  std::size_t index(std::size_t human, std::size_t object) const { return human * num_objects + object; }
  std::span<const Real> at(std::size_t human, std::size_t object) const { return values.row(index(human, object)); }

  friend bool operator==(const NodeFeatures&, const NodeFeatures&) = default;
};

struct HOIGraph {
  std::vector<geometry::Detection> humans;
  std::vector<geometry::Detection> objects;
  NodeFeatures nodes;
};

using Featurizer = std::function<Tensor(const geometry::Detection& human, const geometry::Detection& object)>;

// Pairs every human with every object. Returns nullopt (the empty-graph
// signal) when either list is empty; callers then score with the human
// stream only.
std::optional<HOIGraph> build_graph(std::vector<geometry::Detection> humans, std::vector<geometry::Detection> objects,
                                    const Featurizer& featurizer);

// Neighbors of `node` excluding the node itself: same human with every other
// object (human-centric) or same object with every other human
// (object-centric). There are never object-object edges.
std::vector<std::size_t> neighbors(SubgraphKind kind, std::size_t num_humans, std::size_t num_objects,
                                   std::size_t node);

// alpha = softmax(u) with u_m = (W_q n_m) . (W_k c) / sqrt(d_k).
// Requires at least one neighbor.
Tensor attention_weights(std::span<const Real> center, const std::vector<std::span<const Real>>& neighbor_features,
                         const SubgraphParams& params);
Tensor attention_weights(std::span<const Real> center, const std::vector<std::span<const Real>>& neighbor_features,
                         const DRGParams& params, SubgraphKind kind);

// Everything aggregate_once needs to run backward.
struct AggregateCache {
  NodeFeatures input;
  Tensor query;  // [n x d_k]
  Tensor key;    // [n x d_k]
  Tensor value;  // [n x d]
  std::vector<std::vector<std::size_t>> neighbor_lists;
  std::vector<Tensor> attention;  // per node, empty when no neighbors
  std::vector<Tensor> message;    // per node, sum_m alpha_m W x_m before sigma
  std::vector<numkernel::LayerNormCache> norm;
};

// One synchronous round of x <- LayerNorm(x + relu(sum_m alpha_m W x_m)).
// Nodes without neighbors are copied unchanged. Neighbor terms are summed in
// lexicographic order of their feature rows, so relabeling humans or objects
// permutes the output exactly.
NodeFeatures aggregate_once(const NodeFeatures& features, SubgraphKind kind, const DRGParams& params,
                            AggregateCache* cache = nullptr);
NodeFeatures aggregate_once(const NodeFeatures& features, SubgraphKind kind, const SubgraphParams& params,
                            AggregateCache* cache = nullptr);

struct AggregateGrads {
  Tensor input;           // dL/dX, same shape as the features
  SubgraphParams params;  // parameter gradients
};
AggregateGrads aggregate_once_backward(const AggregateCache& cache, SubgraphKind kind, const SubgraphParams& params,
                                       const Tensor& grad_out);

// Repeated aggregation on one subgraph; caches one entry per iteration.
NodeFeatures run_subgraph(const NodeFeatures& raw, SubgraphKind kind, const SubgraphParams& params, int iterations,
                          std::vector<AggregateCache>* caches = nullptr);
// Parameter gradients are summed over iterations.
AggregateGrads run_subgraph_backward(const std::vector<AggregateCache>& caches, SubgraphKind kind,
                                     const SubgraphParams& params, const Tensor& grad_out);

// Human-centric and object-centric outputs, each computed from the raw node
// features. Zero iterations returns the raw features.
std::pair<NodeFeatures, NodeFeatures> run_drg(const HOIGraph& graph, const DRGParams& params, int iters_human,
                                              int iters_object);

}  // namespace drg::graph
