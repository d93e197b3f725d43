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

#include <string>
#include <vector>

#include "drg/evaluation.hpp"
#include "drg/model.hpp"
#include "drg/streams.hpp"

namespace drg::streams {

// Triplets for one image, ordered by human index, then object index, then
// action index. Each human's object-free actions follow its pair triplets.
// Detections must already be score-filtered. With no objects only the
// human-stream triplets are produced.
std::vector<eval::PredictionTriplet> infer_image(const std::string& image_id, const model::ImageInput& input,
                                                 const model::ModelParams& params, const model::ModelDims& dims,
                                                 const features::EmbeddingTable& table, const ActionCatalog& catalog,
                                                 const model::GraphOptions& options,
                                                 const graph::NodeFeatures* raw_features = nullptr);

}  // namespace drg::streams
