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
#include "drg/inference.hpp"

#include "drg/error.hpp"

namespace drg::streams {

std::vector<eval::PredictionTriplet> infer_image(const std::string& image_id, const model::ImageInput& input,
                                                 const model::ModelParams& params, const model::ModelDims& dims,
                                                 const features::EmbeddingTable& table, const ActionCatalog& catalog,
                                                 const model::GraphOptions& options,
                                                 const graph::NodeFeatures* raw_features) {
  if (catalog.size() != dims.num_actions) {
    throw ConfigMismatchError("catalog has " + std::to_string(catalog.size()) + " actions, model expects " +
                              std::to_string(dims.num_actions));
  }
  std::vector<eval::PredictionTriplet> out;
  if (input.humans.empty()) return out;
  const model::ImageScores scores = model::forward(params, dims, table, input, options, nullptr, raw_features);
  const Tensor ones = Tensor::filled({catalog.size()}, 1.0);
  const std::size_t num_objects = input.objects.size();

  for (std::size_t i = 0; i < input.humans.size(); ++i) {
    const auto& h = input.humans[i];
    for (std::size_t j = 0; j < num_objects; ++j) {
      const std::size_t node = i * num_objects + j;
      const Tensor& sph = scores.spatial_human.empty() ? ones : scores.spatial_human[node];
      const Tensor& spo = scores.spatial_object.empty() ? ones : scores.spatial_object[node];
      const Tensor fused =
          fuse(h.score, input.objects[j].score, scores.human[i], scores.object[j], sph, spo, catalog, options.mask());
      for (std::size_t a = 0; a < catalog.size(); ++a) {
        if (!catalog[a].requires_object) continue;
        out.push_back({image_id, h.box, a, input.objects[j].box, fused[a]});
      }
    }
    for (std::size_t a = 0; a < catalog.size(); ++a) {
      if (catalog[a].requires_object) continue;
      out.push_back({image_id, h.box, a, std::nullopt, h.score * scores.human[i][a]});
    }
  }
  return out;
}

}  // namespace drg::streams
