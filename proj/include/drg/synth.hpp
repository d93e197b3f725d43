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
#include <vector>

#include "drg/config.hpp"
#include "drg/data_files.hpp"
#include "drg/spatial_semantic.hpp"

// Synthetic HOI scenes whose labels are a fixed function of box layout,
// category and a per-human walking flag.
//
// Each action owns a zone in human-normalized coordinates
// u = (cx - h.x1) / h.width, v = (cy - h.y1) / h.height of the object center:
//   hold    cup, book or racket   u in [0.75, 1.15], v in [0.35, 0.65]
//   read    book                  u in [0.25, 0.65], v in [0.10, 0.35]
//   sit_on  chair                 u in [0.30, 0.70], v in [0.65, 1.00]
//   kick    ball                  u in [0.90, 1.35], v in [0.85, 1.10]
//   hit     ball                  u in [1.20, 1.70], v in [0.05, 0.45], and the
//                                 same human holds a racket
//   walk    no object             appearance value 0 of the human is 1
//
// "context" scenes hold two humans of identical size, each with a ball at
// the same integer offset in its hit zone. One of them holds a racket and
// the other a cup, so the two hit candidates have bit-identical pair
// features and only the rest of each human's neighborhood tells them apart.
namespace drg::synth {

struct SynthConfig {
  std::size_t train_images = 200;
  std::size_t test_images = 50;
  double context_fraction = 0.3;
  double width = 640;
  double height = 480;
  std::size_t appearance_dim = 32;
  std::size_t embed_dim = 16;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string> kCategories = {"person", "cup", "book", "chair", "ball", "racket", "plant"};

streams::ActionCatalog catalog();
// Run configuration sized for desk-scale training on the synthetic corpus.
pipeline::RunConfig run_config(const SynthConfig& config);

struct SynthSplit {
  pipeline::DetectionFile detections;
  pipeline::AppearanceFile appearance;
  pipeline::AnnotationFile annotations;
};

struct SynthCorpus {
  pipeline::RunConfig config;
  std::vector<std::pair<std::string, Tensor>> embeddings;  // category order of kCategories
  SynthSplit train;
  SynthSplit test;
};

SynthCorpus generate(const SynthConfig& config);

// Applies the labeling rule to the detections that pass the thresholds.
// Generated annotations equal this function of the generated detections.
std::vector<pipeline::AnnotatedTriplet> label_scene(const pipeline::ImageDetections& detections,
                                                    const pipeline::ImageAppearance& appearance,
                                                    const pipeline::RunConfig& config);

std::string embeddings_text(const SynthCorpus& corpus);
// Writes config.json, embeddings.txt and {train,test}/{detections,appearance,annotations}.json.
void write_corpus(const SynthCorpus& corpus, const std::string& directory);

}  // namespace drg::synth
