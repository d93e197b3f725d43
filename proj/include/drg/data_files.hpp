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
#include <string>
#include <vector>

#include "drg/evaluation.hpp"
#include "drg/geometry.hpp"
#include "drg/streams.hpp"
#include "drg/tensor.hpp"
#include "json.hpp"

// JSON interchange files. Every document carries "schema_version": 1.
//
// detections:  {"images": [{"id", "width", "height",
//                           "detections": [{"box": [x1,y1,x2,y2], "category", "score"}]}]}
// appearance:  {"dim": D, "images": [{"id", "features": [{"detection": k, "values": [D reals]}]}]}
// annotations: {"images": [{"id", "tags": [..]?, "triplets": [{"human": box, "action": name,
//                           "object": box | null, "object_category"?: name}]}]}
// predictions: {"config_hash", "images": [{"id", "predictions": [{"human", "action", "object",
//                           "object_category"?, "score"}]}]}
namespace drg::pipeline {

struct ImageDetections {
  std::string id;
  Real width = 0;
  Real height = 0;
  std::vector<geometry::Detection> detections;
};

struct DetectionFile {
  std::vector<ImageDetections> images;
};

struct ImageAppearance {
  std::string id;
  std::vector<std::pair<std::size_t, Tensor>> features;  // (detection index, values)
};

struct AppearanceFile {
  std::size_t dim = 0;
  std::vector<ImageAppearance> images;
};

struct AnnotatedTriplet {
  geometry::BBox human;
  std::string action;
  std::optional<geometry::BBox> object;
  std::string object_category;  // optional, empty when unknown
};

struct ImageAnnotations {
  std::string id;
  std::vector<std::string> tags;
  std::vector<AnnotatedTriplet> triplets;
};

struct AnnotationFile {
  std::vector<ImageAnnotations> images;
};

struct PredictedTriplet {
  geometry::BBox human;
  std::string action;
  std::optional<geometry::BBox> object;
  std::string object_category;
  Real score = 0;
};

struct ImagePredictions {
  std::string id;
  std::vector<PredictedTriplet> predictions;
};

struct PredictionFile {
  std::string config_hash;
  std::vector<ImagePredictions> images;
};

// Parse helpers throw ParseError carrying the source name and, for JSON
// syntax errors, the line number.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json(const std::string& path);
// indent < 0 writes compact JSON.
void write_json(const std::string& path, const nlohmann::json& j, int indent = 2);

// Boxes are clamped to the image bounds; a box that is empty after clamping
// is an input error.
DetectionFile detections_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json detections_to_json(const DetectionFile& f);
AppearanceFile appearance_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json appearance_to_json(const AppearanceFile& f);
AnnotationFile annotations_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json annotations_to_json(const AnnotationFile& f);
PredictionFile predictions_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json predictions_to_json(const PredictionFile& f);

DetectionFile load_detections(const std::string& path);
AppearanceFile load_appearance(const std::string& path);
AnnotationFile load_annotations(const std::string& path);
PredictionFile load_predictions(const std::string& path);

}  // namespace drg::pipeline
