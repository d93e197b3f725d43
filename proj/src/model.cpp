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
#include "drg/model.hpp"

#include "drg/error.hpp"

namespace drg::model {

std::string to_string(NodeInput input) {
  switch (input) {
    case NodeInput::SpatialSemantic:
      return "spatial_semantic";
    case NodeInput::Semantic:
      return "semantic";
    case NodeInput::Spatial:
      return "spatial";
    case NodeInput::Appearance:
      return "appearance";
  }
  return "?";
}

NodeInput node_input_from_string(const std::string& name) {
  for (NodeInput n : {NodeInput::SpatialSemantic, NodeInput::Semantic, NodeInput::Spatial, NodeInput::Appearance}) {
    if (to_string(n) == name) return n;
  }
  throw Error("unknown node input '" + name + "'");
}

std::size_t ModelDims::feature_dim() const {
  switch (node_input) {
    case NodeInput::Semantic:
      return embed_dim;
    case NodeInput::Spatial:
      return spatial.output_dim();
    case NodeInput::Appearance:
      return 2 * appearance_dim;
    case NodeInput::SpatialSemantic:
      break;
  }
  return spatial.output_dim() + embed_dim;
}

void ModelDims::validate() const {
  spatial.validate();
  if (embed_dim == 0 || key_dim == 0 || appearance_dim == 0 || hidden_dim == 0 || num_actions == 0) {
    throw DimensionError("model dimensions must be positive");
  }
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  dims.validate();
  const std::size_t d = dims.feature_dim();
  return {features::SpatialConvParams::zeros(dims.spatial),
          {graph::SubgraphParams::zeros(d, dims.key_dim), graph::SubgraphParams::zeros(d, dims.key_dim)},
          streams::StreamHead::zeros(dims.appearance_dim, dims.hidden_dim, dims.num_actions),
          streams::StreamHead::zeros(dims.appearance_dim, dims.hidden_dim, dims.num_actions),
          streams::StreamHead::zeros(d, dims.hidden_dim, dims.num_actions),
          streams::StreamHead::zeros(d, dims.hidden_dim, dims.num_actions)};
}

ModelParams ModelParams::initialize(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(seed);
  const std::size_t d = dims.feature_dim();
  ModelParams p;
  p.spatial = features::SpatialConvParams::random(dims.spatial, rng);
  p.drg.human = graph::SubgraphParams::random(d, dims.key_dim, rng);
  p.drg.object = graph::SubgraphParams::random(d, dims.key_dim, rng);
  p.human_head = streams::StreamHead::random(dims.appearance_dim, dims.hidden_dim, dims.num_actions, rng);
  p.object_head = streams::StreamHead::random(dims.appearance_dim, dims.hidden_dim, dims.num_actions, rng);
  p.spatial_human_head = streams::StreamHead::random(d, dims.hidden_dim, dims.num_actions, rng);
  p.spatial_object_head = streams::StreamHead::random(d, dims.hidden_dim, dims.num_actions, rng);
  return p;
}

namespace {

template <typename Params, typename Out>
void collect(Params& p, Out& out) {
  out.emplace_back("spatial.conv1.weight", &p.spatial.conv1_kernels);
  out.emplace_back("spatial.conv1.bias", &p.spatial.conv1_bias);
  out.emplace_back("spatial.conv2.weight", &p.spatial.conv2_kernels);
  out.emplace_back("spatial.conv2.bias", &p.spatial.conv2_bias);
  auto subgraph = [&](const std::string& prefix, auto& s) {
    out.emplace_back(prefix + ".value", &s.value);
    out.emplace_back(prefix + ".query", &s.query);
    out.emplace_back(prefix + ".key", &s.key);
    out.emplace_back(prefix + ".norm.gain", &s.ln_gain);
    out.emplace_back(prefix + ".norm.bias", &s.ln_bias);
  };
  subgraph("drg.human", p.drg.human);
  subgraph("drg.object", p.drg.object);
  auto head = [&](const std::string& prefix, auto& h) {
    out.emplace_back(prefix + ".mlp.weight", &h.mlp_weight);
    out.emplace_back(prefix + ".mlp.bias", &h.mlp_bias);
    out.emplace_back(prefix + ".cls.weight", &h.cls_weight);
    out.emplace_back(prefix + ".cls.bias", &h.cls_bias);
  };
  head("head.human", p.human_head);
  head("head.object", p.object_head);
  head("head.spatial_human", p.spatial_human_head);
  head("head.spatial_object", p.spatial_object_head);
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect(*this, out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->numel();
  return n;
}

Tensor ModelParams::flatten() const {
  std::vector<Real> flat;
  flat.reserve(parameter_count());
  for (const auto& [name, t] : named()) flat.insert(flat.end(), t->values().begin(), t->values().end());
  return Tensor::vector(std::move(flat));
}

void ModelParams::assign_flat(const Tensor& flat) {
  if (flat.numel() != parameter_count()) throw DimensionError("flat parameter vector has the wrong length");
  std::size_t offset = 0;
  for (auto& [name, t] : named()) {
    std::copy(flat.data() + offset, flat.data() + offset + t->numel(), t->data());
    offset += t->numel();
  }
}

void ModelParams::add_scaled(const ModelParams& other, Real scale) {
  auto mine = named();
  auto theirs = other.named();
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i].second->add_scaled(*theirs[i].second, scale);
}

graph::NodeFeatures featurize(const ModelParams& params, const ModelDims& dims, const features::EmbeddingTable& table,
                              const std::vector<geometry::Detection>& humans,
                              const std::vector<geometry::Detection>& objects,
                              std::vector<features::SpatialForwardCache>* caches,
                              const std::vector<Tensor>* human_appearance,
                              const std::vector<Tensor>* object_appearance) {
  if (dims.uses_embedding() && table.dim() != dims.embed_dim) {
    throw DimensionError("embedding table dim " + std::to_string(table.dim()) + " != model embed dim " +
                         std::to_string(dims.embed_dim));
  }
  const bool appearance = dims.node_input == NodeInput::Appearance;
  if (appearance && (!human_appearance || !object_appearance || human_appearance->size() != humans.size() ||
                     object_appearance->size() != objects.size())) {
    throw DimensionError("appearance node features need one appearance vector per detection");
  }
  const std::size_t d = dims.feature_dim();
  const std::size_t spatial_dim = dims.spatial_part();
  std::vector<Tensor> embeddings;
  if (dims.uses_embedding()) {
    embeddings.reserve(objects.size());
    for (const auto& o : objects) embeddings.push_back(table.lookup(o.category));
  }

  graph::NodeFeatures nf;
  nf.num_humans = humans.size();
  nf.num_objects = objects.size();
  nf.values = Tensor({humans.size() * objects.size(), d});
  if (caches) caches->assign(dims.uses_spatial() ? nf.num_nodes() : 0, {});
  for (std::size_t i = 0; i < humans.size(); ++i) {
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const std::size_t node = nf.index(i, j);
      auto row = nf.values.row(node);
      if (appearance) {
        const auto h = (*human_appearance)[i].values();
        const auto o = (*object_appearance)[j].values();
        if (h.size() != dims.appearance_dim || o.size() != dims.appearance_dim) {
          throw DimensionError("appearance vector length differs from appearance_dim");
        }
        std::copy(h.begin(), h.end(), row.begin());
        std::copy(o.begin(), o.end(), row.begin() + static_cast<std::ptrdiff_t>(dims.appearance_dim));
        continue;
      }
      if (dims.uses_spatial()) {
        const auto map = geometry::rasterize_pair(humans[i].box, objects[j].box, dims.spatial.raster_size);
        const Tensor spatial = features::spatial_features(map, params.spatial, caches ? &(*caches)[node] : nullptr);
        std::copy(spatial.values().begin(), spatial.values().end(), row.begin());
      }
      if (dims.uses_embedding()) {
        std::copy(embeddings[j].values().begin(), embeddings[j].values().end(),
                  row.begin() + static_cast<std::ptrdiff_t>(spatial_dim));
      }
    }
  }
  return nf;
}

ImageScores forward(const ModelParams& params, const ModelDims& dims, const features::EmbeddingTable& table,
                    const ImageInput& input, const GraphOptions& options, ImageCache* cache,
                    const graph::NodeFeatures* raw_features) {
  if (input.human_appearance.size() != input.humans.size() || input.object_appearance.size() != input.objects.size()) {
    throw DimensionError("one appearance feature per detection is required");
  }
  ImageScores scores;
  if (cache) {
    *cache = ImageCache{};
    cache->num_humans = input.humans.size();
    cache->num_objects = input.objects.size();
    cache->spatial_dim = dims.spatial_part();
    cache->human_head.resize(input.humans.size());
    cache->object_head.resize(input.objects.size());
  }
  for (std::size_t i = 0; i < input.humans.size(); ++i) {
    scores.human.push_back(streams::stream_scores(input.human_appearance[i].values(), params.human_head,
                                                  cache ? &cache->human_head[i] : nullptr));
  }
  for (std::size_t j = 0; j < input.objects.size(); ++j) {
    scores.object.push_back(streams::stream_scores(input.object_appearance[j].values(), params.object_head,
                                                   cache ? &cache->object_head[j] : nullptr));
  }
  if (input.humans.empty() || input.objects.empty()) return scores;
  if (!options.human_graph && !options.object_graph) return scores;

  graph::NodeFeatures raw;
  if (raw_features) {
    if (raw_features->num_humans != input.humans.size() || raw_features->num_objects != input.objects.size() ||
        raw_features->dim() != dims.feature_dim()) {
      throw DimensionError("precomputed node features do not match the image detections");
    }
    raw = *raw_features;
  } else {
    raw = featurize(params, dims, table, input.humans, input.objects, cache ? &cache->spatial : nullptr,
                    &input.human_appearance, &input.object_appearance);
    if (cache) cache->features_computed = dims.uses_spatial();
  }

  const std::size_t n = raw.num_nodes();
  if (options.human_graph) {
    const graph::NodeFeatures out = graph::run_subgraph(raw, graph::SubgraphKind::HumanCentric, params.drg.human,
                                                        options.iters_human, cache ? &cache->human_graph : nullptr);
    if (cache) cache->spatial_human_head.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      scores.spatial_human.push_back(streams::stream_scores(out.values.row(t), params.spatial_human_head,
                                                            cache ? &cache->spatial_human_head[t] : nullptr));
    }
  }
  if (options.object_graph) {
    const graph::NodeFeatures out = graph::run_subgraph(raw, graph::SubgraphKind::ObjectCentric, params.drg.object,
                                                        options.iters_object, cache ? &cache->object_graph : nullptr);
    if (cache) cache->spatial_object_head.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      scores.spatial_object.push_back(streams::stream_scores(out.values.row(t), params.spatial_object_head,
                                                             cache ? &cache->spatial_object_head[t] : nullptr));
    }
  }
  return scores;
}

namespace {

void accumulate_head(streams::StreamHead& into, const streams::StreamHead& g) {
  into.mlp_weight.add_scaled(g.mlp_weight);
  into.mlp_bias.add_scaled(g.mlp_bias);
  into.cls_weight.add_scaled(g.cls_weight);
  into.cls_bias.add_scaled(g.cls_bias);
}

void accumulate_subgraph(graph::SubgraphParams& into, const graph::SubgraphParams& g) {
  into.value.add_scaled(g.value);
  into.query.add_scaled(g.query);
  into.key.add_scaled(g.key);
  into.ln_gain.add_scaled(g.ln_gain);
  into.ln_bias.add_scaled(g.ln_bias);
}

}  // namespace

void backward(const ImageCache& cache, const ModelParams& params, const GraphOptions& options,
              const ScoreGrads& score_grads, ModelParams& grads) {
  for (std::size_t i = 0; i < score_grads.human.size(); ++i) {
    if (score_grads.human[i].empty()) continue;
    accumulate_head(
        grads.human_head,
        streams::stream_scores_backward(cache.human_head.at(i), params.human_head, score_grads.human[i]).params);
  }
  for (std::size_t j = 0; j < score_grads.object.size(); ++j) {
    if (score_grads.object[j].empty()) continue;
    accumulate_head(
        grads.object_head,
        streams::stream_scores_backward(cache.object_head.at(j), params.object_head, score_grads.object[j]).params);
  }

  const std::size_t n = cache.num_humans * cache.num_objects;
  if (n == 0) return;
  Tensor grad_raw;
  auto subgraph_pass = [&](bool enabled, const std::vector<Tensor>& sgrads, const std::vector<streams::HeadCache>& hc,
                           const streams::StreamHead& head, streams::StreamHead& ghead,
                           const std::vector<graph::AggregateCache>& gc, graph::SubgraphKind kind,
                           const graph::SubgraphParams& sp, graph::SubgraphParams& gsp) {
    if (!enabled || sgrads.empty()) return;
    Tensor grad_out;
    for (std::size_t t = 0; t < n; ++t) {
      if (sgrads[t].empty()) continue;
      streams::HeadGrads hg = streams::stream_scores_backward(hc.at(t), head, sgrads[t]);
      accumulate_head(ghead, hg.params);
      if (grad_out.empty()) grad_out = Tensor({n, hg.input.numel()});
      std::copy(hg.input.values().begin(), hg.input.values().end(), grad_out.row(t).begin());
    }
    if (grad_out.empty()) return;
    graph::AggregateGrads ag = graph::run_subgraph_backward(gc, kind, sp, grad_out);
    accumulate_subgraph(gsp, ag.params);
    if (grad_raw.empty()) {
      grad_raw = std::move(ag.input);
    } else {
      grad_raw.add_scaled(ag.input);
    }
  };
  subgraph_pass(options.human_graph, score_grads.spatial_human, cache.spatial_human_head, params.spatial_human_head,
                grads.spatial_human_head, cache.human_graph, graph::SubgraphKind::HumanCentric, params.drg.human,
                grads.drg.human);
  subgraph_pass(options.object_graph, score_grads.spatial_object, cache.spatial_object_head, params.spatial_object_head,
                grads.spatial_object_head, cache.object_graph, graph::SubgraphKind::ObjectCentric, params.drg.object,
                grads.drg.object);

  if (grad_raw.empty() || !cache.features_computed) return;
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = grad_raw.row(t);
    const Tensor g_spatial({cache.spatial_dim}, std::vector<Real>(row.begin(), row.begin() + cache.spatial_dim));
    const features::SpatialConvParams gs =
        features::spatial_features_backward(cache.spatial.at(t), params.spatial, g_spatial);
    grads.spatial.conv1_kernels.add_scaled(gs.conv1_kernels);
    grads.spatial.conv1_bias.add_scaled(gs.conv1_bias);
    grads.spatial.conv2_kernels.add_scaled(gs.conv2_kernels);
    grads.spatial.conv2_bias.add_scaled(gs.conv2_bias);
  }
}

}  // namespace drg::model
