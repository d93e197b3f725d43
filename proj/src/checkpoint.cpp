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
#include "drg/checkpoint.hpp"

#include "drg/data_files.hpp"
#include "drg/error.hpp"

namespace drg::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "drg-hoi-checkpoint";
const std::string kVelocityPrefix = "optim.velocity.";

}  // namespace

io::TensorFile checkpoint_to_file(const Checkpoint& ckpt) {
  io::TensorFile file;
  json meta = {{"format", kFormat},
               {"schema_version", kSchemaVersion},
               {"config_hash", ckpt.config_hash},
               {"dims", dims_to_json(ckpt.dims)},
               {"actions", catalog_to_json(ckpt.catalog)},
               {"optimizer",
                {{"lr", ckpt.optimizer.lr},
                 {"momentum", ckpt.optimizer.momentum},
                 {"weight_decay", ckpt.optimizer.weight_decay}}}};
  file.metadata = meta.dump();
  const auto named = ckpt.params.named();
  for (const auto& [name, t] : named) file.add(name, *t);
  if (ckpt.optimizer.velocity.size() == named.size()) {
    for (std::size_t i = 0; i < named.size(); ++i) {
      file.add(kVelocityPrefix + named[i].first, ckpt.optimizer.velocity[i]);
    }
  }
  return file;
}

Checkpoint checkpoint_from_file(const io::TensorFile& file, const std::string& source) {
  const json meta = parse_json_text(file.metadata, source + " (metadata)");
  Checkpoint ckpt;
  try {
    if (meta.value("format", std::string()) != kFormat) throw ParseError(source, 0, "not a model checkpoint");
    if (meta.value("schema_version", 0) != kSchemaVersion) throw ParseError(source, 0, "unsupported schema_version");
    ckpt.config_hash = meta.value("config_hash", std::string());
    ckpt.dims = dims_from_json(meta.at("dims"));
    ckpt.catalog = catalog_from_json(meta.at("actions"));
    const json& opt = meta.at("optimizer");
    ckpt.optimizer.lr = opt.at("lr").get<Real>();
    ckpt.optimizer.momentum = opt.at("momentum").get<Real>();
    ckpt.optimizer.weight_decay = opt.at("weight_decay").get<Real>();
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("bad checkpoint metadata: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  try {
    ckpt.dims.validate();
  } catch (const Error& e) {
    throw ConfigMismatchError(source + ": " + e.what());
  }
  if (ckpt.dims.num_actions != ckpt.catalog.size()) {
    throw ConfigMismatchError(source + ": num_actions does not match the action list");
  }

  ckpt.params = model::ModelParams::zeros(ckpt.dims);
  auto named = ckpt.params.named();
  bool has_velocity = true;
  for (auto& [name, t] : named) {
    const Tensor* stored = file.find(name);
    if (!stored) throw ConfigMismatchError(source + ": missing tensor '" + name + "'");
    if (stored->shape() != t->shape()) {
      throw ConfigMismatchError(source + ": tensor '" + name + "' has shape " + shape_to_string(stored->shape()) +
                                ", expected " + shape_to_string(t->shape()));
    }
    *t = *stored;
    has_velocity = has_velocity && file.find(kVelocityPrefix + name) != nullptr;
  }
  if (has_velocity) {
    for (auto& [name, t] : named) {
      const Tensor* v = file.find(kVelocityPrefix + name);
      if (v->shape() != t->shape()) throw ConfigMismatchError(source + ": velocity shape mismatch for '" + name + "'");
      ckpt.optimizer.velocity.push_back(*v);
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_tensor_file(path, checkpoint_to_file(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_file(io::read_tensor_file(path), path.string());
}

void check_compatible(const Checkpoint& ckpt, const RunConfig& config) {
  if (!(ckpt.dims == config.dims)) {
    throw ConfigMismatchError("checkpoint dims " + dims_to_json(ckpt.dims).dump() + " differ from config dims " +
                              dims_to_json(config.dims).dump());
  }
  if (!(ckpt.catalog == config.profile.catalog)) {
    throw ConfigMismatchError("checkpoint action list differs from the config's dataset profile");
  }
}

}  // namespace drg::pipeline
