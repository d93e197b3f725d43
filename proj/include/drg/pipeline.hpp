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
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "drg/checkpoint.hpp"
#include "drg/config.hpp"
#include "drg/data_files.hpp"
#include "drg/evaluation.hpp"
#include "drg/model.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/tensor_file.hpp"
#include "drg/training.hpp"
#include "json.hpp"

// Batch workflows over the JSON interchange files: featurize, infer, train
// and eval. Commands are deterministic for a fixed config and seed.
namespace drg::pipeline {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitMismatch = 3;
inline constexpr int kExitNumeric = 4;

// Maps an exception to an exit code and writes a one-line diagnostic.
int exit_code_for(std::exception_ptr error, std::string* message = nullptr);

// DRG_WORKERS, default 1.
std::size_t worker_count();
// Runs fn(0..n-1) over `workers` threads; results must be written to
// per-index slots. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Score-filtered humans and objects of one image, with the indices of the
// chosen detections. Appearance may be null when only geometry is needed.
struct SelectedImage {
  model::ImageInput input;
  std::vector<std::size_t> human_indices;
  std::vector<std::size_t> object_indices;
};
SelectedImage select_detections(const ImageDetections& image, const ImageAppearance* appearance,
                                const RunConfig& config);

const ImageAppearance& find_appearance(const AppearanceFile& file, const std::string& id);

std::vector<eval::GroundTruthTriplet> ground_truth(const ImageAnnotations& image,
                                                   const streams::ActionCatalog& catalog);

std::vector<training::AnnotatedImage> assemble(const DetectionFile& detections, const AppearanceFile& appearance,
                                               const AnnotationFile& annotations, const RunConfig& config);

// Feature archive: metadata {"format": "drg-hoi-features", "schema_version",
// "config_hash", "spatial_hash", "images": [{"id", "humans", "objects"}]}
// and one tensor "features/<image index>" of shape [|H||O| x d] per image
// with at least one pair. Appearance node inputs need `appearance`.
io::TensorFile featurize(const DetectionFile& detections, const features::EmbeddingTable& table,
                         const RunConfig& config, const features::SpatialConvParams& spatial, std::size_t workers = 1,
                         const AppearanceFile* appearance = nullptr);

// Hash identifying a set of spatial ConvNet parameters.
std::string spatial_hash(const features::SpatialConvParams& spatial);

// `archive`, when given, supplies the raw node features; its spatial hash
// must match the checkpoint.
PredictionFile infer(const DetectionFile& detections, const AppearanceFile& appearance, const Checkpoint& ckpt,
                     const RunConfig& config, const features::EmbeddingTable& table,
                     const io::TensorFile* archive = nullptr, std::size_t workers = 1);

struct TrainOutput {
  Checkpoint checkpoint;
  training::TrainResult result;
  std::string loss_csv;
  std::size_t train_images = 0;
  std::size_t val_images = 0;
};

// The last round(val_fraction * N) images (at least one when N > 1 and
// val_fraction > 0) form the validation split.
TrainOutput train(const DetectionFile& detections, const AppearanceFile& appearance, const AnnotationFile& annotations,
                  const features::EmbeddingTable& table, const RunConfig& config,
                  const training::EpochCallback& on_epoch = {});

// Role mAP report. With profile.hoi_classes set, scoring is per
// (action, object category) class. A non-empty `tag` restricts evaluation
// to ground-truth images carrying that tag.
nlohmann::json evaluate(const PredictionFile& predictions, const AnnotationFile& annotations, const RunConfig& config,
                        const std::string& tag = "");
std::string format_report(const nlohmann::json& report);

}  // namespace drg::pipeline
