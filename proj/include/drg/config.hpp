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

#include <cstdint>
#include <string>
#include <vector>

#include "drg/model.hpp"
#include "drg/streams.hpp"
#include "drg/training.hpp"
#include "json.hpp"

namespace drg::pipeline {

inline constexpr int kSchemaVersion = 1;

// An (action, object category) key for datasets scored per HOI class.
struct HoiClass {
  std::string action;
  std::string object;

  friend bool operator==(const HoiClass&, const HoiClass&) = default;
};

struct DatasetProfile {
  std::string name = "vcoco";
  std::string human_category = "person";
  Real human_threshold = 0.8;   // keep humans scoring strictly above
  Real object_threshold = 0.1;  // keep objects scoring strictly above
  streams::ActionCatalog catalog = streams::ActionCatalog::vcoco();
  // When non-empty, evaluation composes (action, object category) keys.
  std::vector<HoiClass> hoi_classes;

  static DatasetProfile vcoco();
  static DatasetProfile hico_det();
  // Throws drg::Error for unknown names.
  static DatasetProfile named(const std::string& name);
};

struct RunConfig {
  DatasetProfile profile;
  model::ModelDims dims;  // num_actions follows the catalog
  model::GraphOptions graph;
  Real lr = training::kLearningRate;
  Real momentum = training::kMomentum;
  Real weight_decay = training::kWeightDecay;
  int max_epochs = 30;
  int patience = 5;
  std::size_t negative_ratio = training::kNegativeRatio;
  Real val_fraction = 0.1;
  std::uint64_t seed = 0;

  // Checks ranges and syncs dims.num_actions with the catalog.
  void validate();
  training::TrainConfig train_config() const;

  nlohmann::json to_json() const;
  // Fields absent from `j` keep the defaults of the named profile.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);

  // First 16 hex digits of SHA-256 over the canonical JSON dump.
  std::string hash() const;
};

std::string sha256_hex(const std::string& data);

nlohmann::json dims_to_json(const model::ModelDims& dims);
model::ModelDims dims_from_json(const nlohmann::json& j, model::ModelDims base = {});
nlohmann::json catalog_to_json(const streams::ActionCatalog& catalog);
streams::ActionCatalog catalog_from_json(const nlohmann::json& j);

}  // namespace drg::pipeline
