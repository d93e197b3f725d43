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
#include "drg/streams.hpp"

#include <cmath>
#include <cstdio>

#include "drg/error.hpp"
#include "drg/numkernel.hpp"

namespace drg::streams {

namespace nk = numkernel;

StreamHead StreamHead::zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_actions) {
  return {Tensor({hidden_dim, input_dim}), Tensor({hidden_dim}), Tensor({num_actions, hidden_dim}),
          Tensor({num_actions})};
}

StreamHead StreamHead::random(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_actions, Rng& rng) {
  StreamHead h = zeros(input_dim, hidden_dim, num_actions);
  const Real b1 = std::sqrt(6.0 / static_cast<Real>(input_dim));
  for (auto& v : h.mlp_weight.values()) v = rng.uniform(-b1, b1);
  const Real b2 = std::sqrt(6.0 / static_cast<Real>(hidden_dim + num_actions));
  for (auto& v : h.cls_weight.values()) v = rng.uniform(-b2, b2);
  return h;
}

Tensor stream_scores(std::span<const Real> input, const StreamHead& head, HeadCache* cache) {
  if (input.size() != head.input_dim()) {
    throw DimensionError("stream head expects input of length " + std::to_string(head.input_dim()) + ", got " +
                         std::to_string(input.size()));
  }
  Tensor pre = Tensor::vector(nk::matvec(head.mlp_weight, input));
  pre.add_scaled(head.mlp_bias);
  Tensor hidden = nk::relu(pre);
  Tensor logits = Tensor::vector(nk::matvec(head.cls_weight, hidden.values()));
  logits.add_scaled(head.cls_bias);
  Tensor scores = nk::sigmoid(logits);
  if (cache) {
    cache->input = Tensor::vector(std::vector<Real>(input.begin(), input.end()));
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->scores = scores;
  }
  return scores;
}

HeadGrads stream_scores_backward(const HeadCache& cache, const StreamHead& head, const Tensor& grad_scores) {
  const Tensor glogits = nk::sigmoid_backward(cache.scores, grad_scores);
  HeadGrads g{Tensor(cache.input.shape()), StreamHead::zeros(head.input_dim(), head.hidden_dim(), head.num_actions())};
  const std::size_t a_count = head.num_actions(), hid = head.hidden_dim(), in = head.input_dim();
  Tensor ghidden({hid});
  for (std::size_t a = 0; a < a_count; ++a) {
    const Real s = glogits[a];
    g.params.cls_bias[a] = s;
    if (s == 0) continue;
    auto gw = g.params.cls_weight.row(a);
    const auto w = head.cls_weight.row(a);
    for (std::size_t j = 0; j < hid; ++j) {
      gw[j] = s * cache.hidden[j];
      ghidden[j] += s * w[j];
    }
  }
  const Tensor gpre = nk::relu_backward(cache.hidden_pre, ghidden);
  for (std::size_t j = 0; j < hid; ++j) {
    const Real s = gpre[j];
    g.params.mlp_bias[j] = s;
    if (s == 0) continue;
    auto gw = g.params.mlp_weight.row(j);
    const auto w = head.mlp_weight.row(j);
    for (std::size_t i = 0; i < in; ++i) {
      gw[i] = s * cache.input[i];
      g.input[i] += s * w[i];
    }
  }
  return g;
}

ActionCatalog::ActionCatalog(std::vector<Action> actions) : actions_(std::move(actions)) {
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i].name.empty()) throw Error("action names must be non-empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (actions_[j].name == actions_[i].name) throw Error("duplicate action '" + actions_[i].name + "'");
    }
  }
}

ActionCatalog ActionCatalog::vcoco() {
  const char* names[] = {"hold_obj",
                         "stand",
                         "sit_instr",
                         "ride_instr",
                         "walk",
                         "look_obj",
                         "hit_instr",
                         "hit_obj",
                         "eat_obj",
                         "eat_instr",
                         "jump_instr",
                         "lay_instr",
                         "talk_on_phone_instr",
                         "carry_obj",
                         "throw_obj",
                         "catch_obj",
                         "cut_instr",
                         "cut_obj",
                         "run",
                         "work_on_computer_instr",
                         "ski_instr",
                         "surf_instr",
                         "skateboard_instr",
                         "smile",
                         "drink_instr",
                         "kick_obj",
                         "point",
                         "read_obj",
                         "snowboard_instr"};
  std::vector<Action> actions;
  for (const char* n : names) {
    const std::string s(n);
    const bool no_object = s == "stand" || s == "walk" || s == "run" || s == "smile" || s == "point";
    actions.push_back({s, !no_object});
  }
  return ActionCatalog(std::move(actions));
}

ActionCatalog ActionCatalog::hico_det() {
  std::vector<Action> actions;
  for (int i = 0; i < 117; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "verb_%03d", i);
    actions.push_back({buf, true});
  }
  return ActionCatalog(std::move(actions));
}

std::optional<std::size_t> ActionCatalog::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ActionCatalog::count_requiring_object() const {
  std::size_t n = 0;
  for (const auto& a : actions_) n += a.requires_object ? 1 : 0;
  return n;
}

namespace {

void check_fuse_inputs(const ActionCatalog& catalog, std::initializer_list<const Tensor*> scores) {
  for (const Tensor* t : scores) {
    if (t->numel() != catalog.size()) {
      throw DimensionError("fuse: score vector of length " + std::to_string(t->numel()) + " for " +
                           std::to_string(catalog.size()) + " actions");
    }
  }
}

}  // namespace

Tensor fuse(Real human_score, Real object_score, const Tensor& human_actions, const Tensor& object_actions,
            const Tensor& spatial_human_actions, const Tensor& spatial_object_actions, const ActionCatalog& catalog,
            const FusionMask& mask) {
  check_fuse_inputs(catalog, {&human_actions, &object_actions, &spatial_human_actions, &spatial_object_actions});
  Tensor out({catalog.size()});
  for (std::size_t a = 0; a < catalog.size(); ++a) {
    Real s = human_score * human_actions[a];
    if (catalog[a].requires_object) {
      s *= object_score * object_actions[a];
      if (mask.human_graph) s *= spatial_human_actions[a];
      if (mask.object_graph) s *= spatial_object_actions[a];
    }
    out[a] = s;
  }
  return out;
}

FuseGrads fuse_backward(Real human_score, Real object_score, const Tensor& human_actions, const Tensor& object_actions,
                        const Tensor& spatial_human_actions, const Tensor& spatial_object_actions,
                        const ActionCatalog& catalog, const Tensor& grad_fused, const FusionMask& mask) {
  check_fuse_inputs(catalog,
                    {&human_actions, &object_actions, &spatial_human_actions, &spatial_object_actions, &grad_fused});
  const std::size_t n = catalog.size();
  FuseGrads g{Tensor({n}), Tensor({n}), Tensor({n}), Tensor({n})};
  for (std::size_t a = 0; a < n; ++a) {
    const Real ga = grad_fused[a];
    if (!catalog[a].requires_object) {
      g.human_actions[a] = ga * human_score;
      continue;
    }
    // Product of all factors except the one being differentiated.
    const Real base = human_score * object_score;
    const Real sph = mask.human_graph ? spatial_human_actions[a] : 1.0;
    const Real spo = mask.object_graph ? spatial_object_actions[a] : 1.0;
    g.human_actions[a] = ga * base * object_actions[a] * sph * spo;
    g.object_actions[a] = ga * base * human_actions[a] * sph * spo;
    if (mask.human_graph) g.spatial_human_actions[a] = ga * base * human_actions[a] * object_actions[a] * spo;
    if (mask.object_graph) g.spatial_object_actions[a] = ga * base * human_actions[a] * object_actions[a] * sph;
  }
  return g;
}

}  // namespace drg::streams
