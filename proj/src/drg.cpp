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
#include "drg/drg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drg/error.hpp"

namespace drg::graph {

namespace nk = numkernel;

const char* to_string(SubgraphKind kind) { return kind == SubgraphKind::HumanCentric ? "human" : "object"; }

void SubgraphParams::validate() const {
  if (value.rank() != 2 || value.dim(0) != value.dim(1)) {
    throw DimensionError("subgraph W must be square, got " + shape_to_string(value.shape()));
  }
  const std::size_t d = value.dim(0);
  if (query.rank() != 2 || query.dim(1) != d) throw DimensionError("subgraph W_q must be [d_k x d]");
  expect_shape(key, query.shape(), "subgraph W_k");
  expect_shape(ln_gain, {d}, "subgraph LayerNorm gain");
  expect_shape(ln_bias, {d}, "subgraph LayerNorm bias");
}

SubgraphParams SubgraphParams::zeros(std::size_t dim, std::size_t key_dim) {
  return {Tensor({dim, dim}), Tensor({key_dim, dim}), Tensor({key_dim, dim}), Tensor({dim}), Tensor({dim})};
}

SubgraphParams SubgraphParams::random(std::size_t dim, std::size_t key_dim, Rng& rng) {
  SubgraphParams p = zeros(dim, key_dim);
  const Real bv = std::sqrt(6.0 / static_cast<Real>(2 * dim));
  for (auto& v : p.value.values()) v = rng.uniform(-bv, bv);
  const Real bq = std::sqrt(6.0 / static_cast<Real>(dim + key_dim));
  for (auto& v : p.query.values()) v = rng.uniform(-bq, bq);
  for (auto& v : p.key.values()) v = rng.uniform(-bq, bq);
  p.ln_gain.fill(1.0);
  return p;
}

std::optional<HOIGraph> build_graph(std::vector<geometry::Detection> humans, std::vector<geometry::Detection> objects,
                                    const Featurizer& featurizer) {
  if (humans.empty() || objects.empty()) return std::nullopt;
  std::vector<Real> stacked;
  std::size_t dim = 0;
  for (const auto& h : humans) {
    for (const auto& o : objects) {
      Tensor x = featurizer(h, o);
      if (dim == 0) {
        dim = x.numel();
        stacked.reserve(dim * humans.size() * objects.size());
      } else if (x.numel() != dim) {
        throw DimensionError("featurizer returned inconsistent feature lengths");
      }
      stacked.insert(stacked.end(), x.values().begin(), x.values().end());
    }
  }
  HOIGraph g;
  g.nodes.num_humans = humans.size();
  g.nodes.num_objects = objects.size();
  g.nodes.values = Tensor({humans.size() * objects.size(), dim}, std::move(stacked));
  g.humans = std::move(humans);
  g.objects = std::move(objects);
  return g;
}

std::vector<std::size_t> neighbors(SubgraphKind kind, std::size_t num_humans, std::size_t num_objects,
                                   std::size_t node) {
  const std::size_t i = node / num_objects, j = node % num_objects;
  std::vector<std::size_t> out;
  if (kind == SubgraphKind::HumanCentric) {
    for (std::size_t jj = 0; jj < num_objects; ++jj) {
      if (jj != j) out.push_back(i * num_objects + jj);
    }
  } else {
    for (std::size_t ii = 0; ii < num_humans; ++ii) {
      if (ii != i) out.push_back(ii * num_objects + j);
    }
  }
  return out;
}

Tensor attention_weights(std::span<const Real> center, const std::vector<std::span<const Real>>& neighbor_features,
                         const SubgraphParams& params) {
  if (neighbor_features.empty()) throw DimensionError("attention over an empty neighborhood");
  const std::vector<Real> key = nk::matvec(params.key, center);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(params.key_dim()));
  Tensor logits({neighbor_features.size()});
  for (std::size_t m = 0; m < neighbor_features.size(); ++m) {
    logits[m] = nk::dot(nk::matvec(params.query, neighbor_features[m]), key) * scale;
  }
  return nk::softmax(logits);
}

Tensor attention_weights(std::span<const Real> center, const std::vector<std::span<const Real>>& neighbor_features,
                         const DRGParams& params, SubgraphKind kind) {
  return attention_weights(center, neighbor_features, params.of(kind));
}

NodeFeatures aggregate_once(const NodeFeatures& features, SubgraphKind kind, const DRGParams& params,
                            AggregateCache* cache) {
  return aggregate_once(features, kind, params.of(kind), cache);
}

NodeFeatures aggregate_once(const NodeFeatures& features, SubgraphKind kind, const SubgraphParams& params,
                            AggregateCache* cache) {
  params.validate();
  const std::size_t n = features.num_nodes();
  if (features.values.rank() != 2 || features.values.dim(0) != n || n == 0) {
    throw DimensionError("node features do not match the graph size");
  }
  if (features.dim() != params.dim()) {
    throw DimensionError("node feature dim " + std::to_string(features.dim()) + " != subgraph dim " +
                         std::to_string(params.dim()));
  }
  const std::size_t d = params.dim();

  std::vector<std::vector<std::size_t>> lists(n);
  bool any_edges = false;
  for (std::size_t t = 0; t < n; ++t) {
    lists[t] = neighbors(kind, features.num_humans, features.num_objects, t);
    any_edges = any_edges || !lists[t].empty();
    // Canonical summation order: by feature row, so relabeling the graph
    // cannot change the floating-point result.
    std::sort(lists[t].begin(), lists[t].end(), [&](std::size_t a, std::size_t b) {
      const auto ra = features.values.row(a), rb = features.values.row(b);
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
  }

  NodeFeatures out = features;
  if (cache) {
    *cache = AggregateCache{};
    cache->input = features;
    cache->attention.resize(n);
    cache->message.resize(n);
    cache->norm.resize(n);
  }
  if (!any_edges) {
    if (cache) cache->neighbor_lists = std::move(lists);
    return out;
  }

  // Rows of X projected once: Q = X W_q^T, K = X W_k^T, V = X W^T.
  Tensor q = nk::linear_rows(features.values, params.query);
  Tensor k = nk::linear_rows(features.values, params.key);
  Tensor v = nk::linear_rows(features.values, params.value);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(params.key_dim()));

  for (std::size_t t = 0; t < n; ++t) {
    const auto& nbrs = lists[t];
    if (nbrs.empty()) continue;
    Tensor logits({nbrs.size()});
    for (std::size_t m = 0; m < nbrs.size(); ++m) logits[m] = nk::dot(q.row(nbrs[m]), k.row(t)) * scale;
    Tensor alpha = nk::softmax(logits);
    Tensor message({d});
    for (std::size_t m = 0; m < nbrs.size(); ++m) {
      const auto vm = v.row(nbrs[m]);
      for (std::size_t c = 0; c < d; ++c) message[c] += alpha[m] * vm[c];
    }
    Tensor residual({d});
    const auto xt = features.values.row(t);
    for (std::size_t c = 0; c < d; ++c) residual[c] = xt[c] + (message[c] > 0 ? message[c] : 0.0);
    nk::LayerNormCache norm;
    Tensor y = nk::layer_norm(residual, params.ln_gain, params.ln_bias, nk::kLayerNormEps, cache ? &norm : nullptr);
    std::copy(y.values().begin(), y.values().end(), out.values.row(t).begin());
    if (cache) {
      cache->attention[t] = std::move(alpha);
      cache->message[t] = std::move(message);
      cache->norm[t] = std::move(norm);
    }
  }
  if (cache) {
    cache->query = std::move(q);
    cache->key = std::move(k);
    cache->value = std::move(v);
    cache->neighbor_lists = std::move(lists);
  }
  return out;
}

AggregateGrads aggregate_once_backward(const AggregateCache& cache, SubgraphKind, const SubgraphParams& params,
                                       const Tensor& grad_out) {
  const Tensor& x = cache.input.values;
  expect_shape(grad_out, x.shape(), "aggregate_once grad");
  const std::size_t n = x.dim(0), d = x.dim(1);
  AggregateGrads g{Tensor(x.shape()), SubgraphParams::zeros(d, params.key_dim())};
  if (cache.query.empty()) {
    g.input = grad_out;
    return g;
  }
  const std::size_t dk = params.key_dim();
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(dk));
  Tensor gq({n, dk}), gk({n, dk}), gv({n, d});

  for (std::size_t t = 0; t < n; ++t) {
    const auto& nbrs = cache.neighbor_lists[t];
    const auto gy = grad_out.row(t);
    if (nbrs.empty()) {
      std::copy(gy.begin(), gy.end(), g.input.row(t).begin());
      continue;
    }
    nk::LayerNormGrads ln =
        nk::layer_norm_backward(cache.norm[t], params.ln_gain, Tensor({d}, std::vector<Real>(gy.begin(), gy.end())));
    g.params.ln_gain.add_scaled(ln.gain);
    g.params.ln_bias.add_scaled(ln.bias);
    // Residual path.
    auto gx = g.input.row(t);
    for (std::size_t c = 0; c < d; ++c) gx[c] += ln.x[c];
    // relu(message).
    const Tensor& msg = cache.message[t];
    std::vector<Real> gmsg(d);
    for (std::size_t c = 0; c < d; ++c) gmsg[c] = msg[c] > 0 ? ln.x[c] : 0.0;
    // message = sum_m alpha_m V_m.
    const Tensor& alpha = cache.attention[t];
    Tensor galpha({nbrs.size()});
    for (std::size_t m = 0; m < nbrs.size(); ++m) {
      const auto vm = cache.value.row(nbrs[m]);
      auto gvm = gv.row(nbrs[m]);
      Real acc = 0;
      for (std::size_t c = 0; c < d; ++c) {
        acc += gmsg[c] * vm[c];
        gvm[c] += alpha[m] * gmsg[c];
      }
      galpha[m] = acc;
    }
    // logits u_m = Q_m . K_t * scale.
    Tensor glogit = nk::softmax_backward(alpha, galpha);
    const auto kt = cache.key.row(t);
    auto gkt = gk.row(t);
    for (std::size_t m = 0; m < nbrs.size(); ++m) {
      const Real s = glogit[m] * scale;
      const auto qm = cache.query.row(nbrs[m]);
      auto gqm = gq.row(nbrs[m]);
      for (std::size_t c = 0; c < dk; ++c) {
        gqm[c] += s * kt[c];
        gkt[c] += s * qm[c];
      }
    }
  }

  // Projections P = X A^T: dA += dP^T X, dX += dP A.
  auto project_back = [&](const Tensor& gp, const Tensor& weight, Tensor& gweight) {
    const std::size_t rows = weight.dim(0);
    for (std::size_t t = 0; t < n; ++t) {
      const auto xt = x.row(t);
      const auto gpt = gp.row(t);
      auto gxt = g.input.row(t);
      for (std::size_t r = 0; r < rows; ++r) {
        const Real s = gpt[r];
        if (s == 0) continue;
        auto gw = gweight.row(r);
        const auto w = weight.row(r);
        for (std::size_t c = 0; c < d; ++c) {
          gw[c] += s * xt[c];
          gxt[c] += s * w[c];
        }
      }
    }
  };
  project_back(gq, params.query, g.params.query);
  project_back(gk, params.key, g.params.key);
  project_back(gv, params.value, g.params.value);
  return g;
}

NodeFeatures run_subgraph(const NodeFeatures& raw, SubgraphKind kind, const SubgraphParams& params, int iterations,
                          std::vector<AggregateCache>* caches) {
  if (iterations < 0) throw Error("iteration count must be non-negative");
  if (caches) caches->assign(static_cast<std::size_t>(iterations), AggregateCache{});
  NodeFeatures current = raw;
  for (int it = 0; it < iterations; ++it) {
    current = aggregate_once(current, kind, params, caches ? &(*caches)[static_cast<std::size_t>(it)] : nullptr);
  }
  return current;
}

AggregateGrads run_subgraph_backward(const std::vector<AggregateCache>& caches, SubgraphKind kind,
                                     const SubgraphParams& params, const Tensor& grad_out) {
  AggregateGrads total{grad_out, SubgraphParams::zeros(params.dim(), params.key_dim())};
  for (auto it = caches.rbegin(); it != caches.rend(); ++it) {
    AggregateGrads step = aggregate_once_backward(*it, kind, params, total.input);
    total.input = std::move(step.input);
    total.params.value.add_scaled(step.params.value);
    total.params.query.add_scaled(step.params.query);
    total.params.key.add_scaled(step.params.key);
    total.params.ln_gain.add_scaled(step.params.ln_gain);
    total.params.ln_bias.add_scaled(step.params.ln_bias);
  }
  return total;
}

std::pair<NodeFeatures, NodeFeatures> run_drg(const HOIGraph& graph, const DRGParams& params, int iters_human,
                                              int iters_object) {
  return {run_subgraph(graph.nodes, SubgraphKind::HumanCentric, params.human, iters_human),
          run_subgraph(graph.nodes, SubgraphKind::ObjectCentric, params.object, iters_object)};
}

}  // namespace drg::graph
