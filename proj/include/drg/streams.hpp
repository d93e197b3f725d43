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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drg/rng.hpp"
#include "drg/tensor.hpp"

namespace drg::streams {

inline constexpr std::size_t kAppearanceDim = 2048;
inline constexpr std::size_t kHiddenDim = 1024;

// One-layer MLP followed by a per-class sigmoid classifier.
struct StreamHead {
  Tensor mlp_weight;  // [hidden x in]
  Tensor mlp_bias;    // [hidden]
  Tensor cls_weight;  // [A x hidden]
  Tensor cls_bias;    // [A]

  std::size_t input_dim() const { return mlp_weight.dim(1); }
  std::size_t hidden_dim() const { return mlp_weight.dim(0); }
  std::size_t num_actions() const { return cls_weight.dim(0); }

  static StreamHead zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_actions);
  static StreamHead random(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_actions, Rng& rng);
};

struct HeadCache {
  Tensor input;
  Tensor hidden_pre;
  Tensor hidden;
  Tensor scores;
};

// sigmoid(cls(relu(mlp(x)))), one probability per action.
Tensor stream_scores(std::span<const Real> input, const StreamHead& head, HeadCache* cache = nullptr);

struct HeadGrads {
  Tensor input;
  StreamHead params;
};
// grad_scores is dL/d(scores).
HeadGrads stream_scores_backward(const HeadCache& cache, const StreamHead& head, const Tensor& grad_scores);

struct Action {
  std::string name;
  bool requires_object = true;

  friend bool operator==(const Action&, const Action&) = default;
};

class ActionCatalog {
 public:
  ActionCatalog() = default;
  explicit ActionCatalog(std::vector<Action> actions);

  // The 29 V-COCO role classes; stand, walk, run, smile and point have no object.
  static ActionCatalog vcoco();
  // 117 object-agnostic HICO-DET verbs with placeholder names verb_000..verb_116.
  static ActionCatalog hico_det();

  std::size_t size() const { return actions_.size(); }
  const Action& operator[](std::size_t i) const { return actions_.at(i); }
  const std::vector<Action>& actions() const { return actions_; }
  std::optional<std::size_t> index_of(const std::string& name) const;
  std::size_t count_requiring_object() const;

  friend bool operator==(const ActionCatalog&, const ActionCatalog&) = default;

 private:
  std::vector<Action> actions_;
};

// Which spatial-semantic factors enter the product.
struct FusionMask {
  bool human_graph = true;
  bool object_graph = true;
};

// S^a = s_h * s_o * a_h * a_o * a_spH * a_spO for object-requiring actions,
// s_h * a_h for the rest. Masked-out graph factors are dropped.
Tensor fuse(Real human_score, Real object_score, const Tensor& human_actions, const Tensor& object_actions,
            const Tensor& spatial_human_actions, const Tensor& spatial_object_actions, const ActionCatalog& catalog,
            const FusionMask& mask = {});

struct FuseGrads {
  Tensor human_actions;
  Tensor object_actions;
  Tensor spatial_human_actions;
  Tensor spatial_object_actions;
};
// Gradients of sum_a grad_fused[a] * S^a with respect to the four per-action
// score vectors.
FuseGrads fuse_backward(Real human_score, Real object_score, const Tensor& human_actions, const Tensor& object_actions,
                        const Tensor& spatial_human_actions, const Tensor& spatial_object_actions,
                        const ActionCatalog& catalog, const Tensor& grad_fused, const FusionMask& mask = {});

}  // namespace drg::streams
