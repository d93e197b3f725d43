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

#include <filesystem>
#include <string>

#include "drg/config.hpp"
#include "drg/model.hpp"
#include "drg/streams.hpp"
#include "drg/tensor_file.hpp"
#include "drg/training.hpp"

// Model checkpoints stored in the named-tensor container. Metadata:
//   {"format": "drg-hoi-checkpoint", "schema_version": 1, "config_hash",
//    "dims": {...}, "actions": [...], "optimizer": {"lr", "momentum", "weight_decay"}}
// Tensors use ModelParams::named() names; optimizer velocity, when present,
// is stored as "optim.velocity.<name>".
namespace drg::pipeline {

struct Checkpoint {
  model::ModelDims dims;
  streams::ActionCatalog catalog;
  std::string config_hash;
  model::ModelParams params;
  training::OptimState optimizer;
};

io::TensorFile checkpoint_to_file(const Checkpoint& ckpt);
// Throws ParseError for a malformed container and ConfigMismatchError when
// a tensor is missing or has the wrong shape for the recorded dims.
Checkpoint checkpoint_from_file(const io::TensorFile& file, const std::string& source);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ConfigMismatchError unless dims and action catalog agree with `config`.
void check_compatible(const Checkpoint& ckpt, const RunConfig& config);

}  // namespace drg::pipeline
