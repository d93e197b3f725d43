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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drg/evaluation.hpp"
#include "drg/geometry.hpp"
#include "drg/model.hpp"
#include "drg/rng.hpp"
#include "drg/streams.hpp"

namespace drg::training {

inline constexpr Real kLearningRate = 0.0025;
inline constexpr Real kMomentum = 0.9;
inline constexpr Real kWeightDecay = 0.0001;
inline constexpr std::size_t kNegativeRatio = 3;
inline constexpr Real kProbabilityClamp = 1e-12;

// Sum over actions of binary cross-entropy, probabilities clamped to
// [1e-12, 1 - 1e-12]. `mask`, when given, selects the actions that count.
Real multilabel_loss(const Tensor& scores, const Tensor& labels, const std::vector<bool>* mask = nullptr);
// d(multilabel_loss)/d(scores); zero where the clamp is active.
Tensor multilabel_loss_grad(const Tensor& scores, const Tensor& labels, const std::vector<bool>* mask = nullptr);

// Per-action scores of the four streams for one human-object pair. Empty
// spatial tensors mean the subgraph is disabled.
struct StreamScores {
  Tensor human;
  Tensor object;
  Tensor spatial_human;
  Tensor spatial_object;
};

// Sum of the per-stream losses. Object-free actions are scored by the human
// stream only; with include_object_free = false they are skipped entirely
// (the trainer charges them once per human instead of once per pair).
Real total_loss(const StreamScores& scores, const Tensor& labels, const streams::ActionCatalog& catalog,
                bool include_object_free = true);

struct TrainingExample {
  std::size_t human_index = 0;
  std::size_t object_index = 0;
  geometry::Detection human;
  geometry::Detection object;
  Tensor labels;  // [A], object-free entries are always 0
  bool is_positive = false;
};

struct SampleConfig {
  std::size_t negative_ratio = kNegativeRatio;
  int jitter_tries = 50;
  geometry::JitterConfig jitter;
};

// Every positive once, with its boxes jittered (one jitter per distinct
// detection, shared by every example that uses the detection), plus up to
// negative_ratio x |positives| negatives drawn without replacement. No
// positives gives an empty batch.
std::vector<TrainingExample> sample_batch(const std::vector<TrainingExample>& positives,
                                          const std::vector<TrainingExample>& negatives, Rng& rng,
                                          const SampleConfig& config = {});

struct OptimState {
  Real lr = kLearningRate;
  Real momentum = kMomentum;
  Real weight_decay = kWeightDecay;
  std::vector<Tensor> velocity;  // lazily shaped like the parameters
};

// v <- momentum * v + g + weight_decay * theta; theta <- theta - lr * v.
// Throws NumericError, leaving everything untouched, if any gradient is
// non-finite.
void sgd_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, OptimState& state);
void sgd_step(model::ModelParams& params, const model::ModelParams& grads, OptimState& state);

// One image with its ground truth, ready for training.
struct AnnotatedImage {
  std::string id;
  model::ImageInput input;
  std::vector<eval::GroundTruthTriplet> ground_truth;
};

// Pair labels from ground truth: (i, j) gets action a iff a ground truth for
// a overlaps both boxes with IoU >= 0.5. Object-free actions are assigned per
// human.
struct ImageLabels {
  std::vector<TrainingExample> positives;
  std::vector<TrainingExample> negatives;
  std::vector<Tensor> human_object_free;  // per human, [A]
};
ImageLabels label_image(const AnnotatedImage& image, const streams::ActionCatalog& catalog,
                        Real iou_threshold = eval::kRoleIouThreshold);

// Loss over the given pair examples plus the object-free term of every
// human, for one image. Boxes in the examples override the image's
// detection boxes. Accumulates gradients into `grads` when non-null.
Real image_loss(const model::ModelParams& params, const model::ModelDims& dims, const features::EmbeddingTable& table,
                const model::ImageInput& input, const std::vector<TrainingExample>& examples,
                const std::vector<Tensor>& human_object_free, const streams::ActionCatalog& catalog,
                const model::GraphOptions& options, model::ModelParams* grads);

struct TrainConfig {
  Real lr = kLearningRate;
  Real momentum = kMomentum;
  Real weight_decay = kWeightDecay;
  int max_epochs = 30;
  int patience = 5;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
  SampleConfig sampling;
  model::GraphOptions graph;
};

struct EpochRecord {
  int epoch = 0;
  Real train_loss = 0;  // mean per image
  Real val_loss = 0;    // mean per image, NaN without a validation set
};

struct TrainResult {
  model::ModelParams params;  // best validation loss (last epoch without validation)
  OptimState state;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// One image per SGD step; images reshuffled and negatives resampled every
// epoch. Single threaded and deterministic for a fixed seed.
TrainResult train(const std::vector<AnnotatedImage>& train_set, const std::vector<AnnotatedImage>& val_set,
                  const model::ModelDims& dims, const features::EmbeddingTable& table,
                  const streams::ActionCatalog& catalog, const TrainConfig& config, model::ModelParams init,
                  const EpochCallback& on_epoch = {});

// Mean per-image loss over every pair, without sampling or jitter.
Real evaluate_loss(const std::vector<AnnotatedImage>& images, const model::ModelParams& params,
                   const model::ModelDims& dims, const features::EmbeddingTable& table,
                   const streams::ActionCatalog& catalog, const model::GraphOptions& options);

}  // namespace drg::training
