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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "drg/drg.hpp"
#include "drg/model.hpp"
#include "drg/rng.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/tensor.hpp"
#include "drg/training.hpp"

namespace drg::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, Real scale = 1.0) {
  Tensor t(std::move(shape));
  for (Real& v : t.values()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline graph::NodeFeatures random_nodes(std::size_t humans, std::size_t objects, std::size_t dim, Rng& rng) {
  return {humans, objects, random_tensor({humans * objects, dim}, rng)};
}

inline Real max_abs_diff(std::span<const Real> a, std::span<const Real> b) {
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Real max_abs_diff(const Tensor& a, const Tensor& b) { return max_abs_diff(a.values(), b.values()); }

// Reduced dimensions used by the gradient checks: a 12x12 map through
// conv5 -> pool -> conv3 -> pool leaves a 2-value spatial part, plus a
// 4-value embedding gives d = 6.
inline model::ModelDims tiny_dims() {
  model::ModelDims d;
  d.spatial = {12, 2, 2, 5, 3};
  d.embed_dim = 4;
  d.key_dim = 4;
  d.appearance_dim = 5;
  d.hidden_dim = 4;
  d.num_actions = 3;
  return d;
}

inline features::EmbeddingTable random_table(std::size_t dim, const std::vector<std::string>& categories, Rng& rng) {
  features::EmbeddingTable table(dim);
  for (const auto& c : categories) table.insert(c, random_tensor({dim}, rng));
  return table;
}

// Perturbs every parameter so that no ReLU or max-pool sits on a tie.
inline model::ModelParams jittered_params(const model::ModelDims& dims, std::uint64_t seed, Real scale) {
  model::ModelParams p = model::ModelParams::initialize(dims, seed);
  Rng rng(seed + 1);
  for (auto& [name, t] : p.named()) {
    for (Real& v : t->values()) v += scale * rng.uniform(-1.0, 1.0);
  }
  return p;
}

// Two humans, three objects on a 64x48 canvas, A = 3 with "walk" object-free.
struct TinyScene {
  model::ModelDims dims = tiny_dims();
  streams::ActionCatalog catalog{{{"hold", true}, {"walk", false}, {"kick", true}}};
  features::EmbeddingTable table{4};
  training::AnnotatedImage image;
  training::ImageLabels labels;
};

inline TinyScene tiny_scene(std::uint64_t seed) {
  TinyScene s;
  Rng rng(seed);
  s.table = random_table(s.dims.embed_dim, {"person", "cup", "ball"}, rng);
  auto& in = s.image.input;
  in.humans = {{{2, 3, 20, 40}, "person", 0.95}, {{30, 5, 50, 44}, "person", 0.9}};
  in.objects = {{{15, 20, 26, 30}, "cup", 0.8}, {{40, 35, 48, 45}, "ball", 0.7}, {{5, 1, 60, 12}, "cup", 0.6}};
  for (std::size_t i = 0; i < in.humans.size(); ++i) in.human_appearance.push_back(random_tensor({5}, rng));
  for (std::size_t j = 0; j < in.objects.size(); ++j) in.object_appearance.push_back(random_tensor({5}, rng));
  s.image.id = "tiny";
  s.image.ground_truth = {{"tiny", in.humans[0].box, 0, in.objects[0].box},
                          {"tiny", in.humans[1].box, 2, in.objects[1].box},
                          {"tiny", in.humans[1].box, 0, in.objects[1].box},
                          {"tiny", in.humans[0].box, 1, std::nullopt}};
  s.labels = training::label_image(s.image, s.catalog);
  return s;
}

}  // namespace drg::testing
