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
#include "drg/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "drg/data_files.hpp"
#include "drg/error.hpp"

namespace drg::pipeline {

using nlohmann::json;

DatasetProfile DatasetProfile::vcoco() { return {}; }

DatasetProfile DatasetProfile::hico_det() {
  DatasetProfile p;
  p.name = "hico_det";
  p.human_threshold = 0.6;
  p.object_threshold = 0.4;
  p.catalog = streams::ActionCatalog::hico_det();
  return p;
}

DatasetProfile DatasetProfile::named(const std::string& name) {
  if (name == "vcoco") return vcoco();
  if (name == "hico_det") return hico_det();
  if (name == "custom" || name == "synthetic") {
    DatasetProfile p = vcoco();
    p.name = name;
    return p;
  }
  throw Error("unknown dataset profile '" + name + "'");
}

void RunConfig::validate() {
  auto in_unit = [](Real v) { return v >= 0 && v <= 1; };
  if (!in_unit(profile.human_threshold) || !in_unit(profile.object_threshold)) {
    throw Error("score thresholds must lie in [0, 1]");
  }
  if (graph.iters_human < 0 || graph.iters_object < 0) throw Error("iteration counts must be non-negative");
  if (profile.catalog.size() == 0) throw Error("the action catalog is empty");
  if (!(lr > 0) || momentum < 0 || weight_decay < 0) throw Error("invalid optimizer settings");
  if (val_fraction < 0 || val_fraction >= 1) throw Error("val_fraction must lie in [0, 1)");
  if (max_epochs < 1 || patience < 1) throw Error("max_epochs and patience must be positive");
  dims.num_actions = profile.catalog.size();
  dims.validate();
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.lr = lr;
  t.momentum = momentum;
  t.weight_decay = weight_decay;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.seed = seed;
  t.sampling.negative_ratio = negative_ratio;
  t.graph = graph;
  return t;
}

json dims_to_json(const model::ModelDims& d) {
  return {{"raster_size", d.spatial.raster_size},
          {"conv1_channels", d.spatial.conv1_channels},
          {"conv2_channels", d.spatial.conv2_channels},
          {"conv1_kernel", d.spatial.conv1_kernel},
          {"conv2_kernel", d.spatial.conv2_kernel},
          {"embed_dim", d.embed_dim},
          {"key_dim", d.key_dim},
          {"appearance_dim", d.appearance_dim},
          {"hidden_dim", d.hidden_dim},
          {"num_actions", d.num_actions},
          {"node_input", model::to_string(d.node_input)}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw Error(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(std::string("unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& into) {
  if (auto it = j.find(key); it != j.end()) into = it->get<T>();
}

}  // namespace

model::ModelDims dims_from_json(const json& j, model::ModelDims d) {
  reject_unknown(j,
                 {"raster_size", "conv1_channels", "conv2_channels", "conv1_kernel", "conv2_kernel", "embed_dim",
                  "key_dim", "appearance_dim", "hidden_dim", "num_actions", "node_input"},
                 "dims");
  read_field(j, "raster_size", d.spatial.raster_size);
  read_field(j, "conv1_channels", d.spatial.conv1_channels);
  read_field(j, "conv2_channels", d.spatial.conv2_channels);
  read_field(j, "conv1_kernel", d.spatial.conv1_kernel);
  read_field(j, "conv2_kernel", d.spatial.conv2_kernel);
  read_field(j, "embed_dim", d.embed_dim);
  read_field(j, "key_dim", d.key_dim);
  read_field(j, "appearance_dim", d.appearance_dim);
  read_field(j, "hidden_dim", d.hidden_dim);
  read_field(j, "num_actions", d.num_actions);
  if (auto it = j.find("node_input"); it != j.end()) {
    d.node_input = model::node_input_from_string(it->get<std::string>());
  }
  return d;
}

json catalog_to_json(const streams::ActionCatalog& catalog) {
  json out = json::array();
  for (const auto& a : catalog.actions()) out.push_back({{"name", a.name}, {"requires_object", a.requires_object}});
  return out;
}

streams::ActionCatalog catalog_from_json(const json& j) {
  if (!j.is_array()) throw Error("actions must be a JSON array");
  std::vector<streams::Action> actions;
  for (const auto& a : j) {
    reject_unknown(a, {"name", "requires_object"}, "action");
    actions.push_back({a.at("name").get<std::string>(), a.value("requires_object", true)});
  }
  return streams::ActionCatalog(std::move(actions));
}

json RunConfig::to_json() const {
  json hoi = json::array();
  for (const auto& c : profile.hoi_classes) hoi.push_back({{"action", c.action}, {"object", c.object}});
  return {{"schema_version", kSchemaVersion},
          {"profile",
           {{"name", profile.name},
            {"human_category", profile.human_category},
            {"human_threshold", profile.human_threshold},
            {"object_threshold", profile.object_threshold},
            {"actions", catalog_to_json(profile.catalog)},
            {"hoi_classes", hoi}}},
          {"dims", dims_to_json(dims)},
          {"graph",
           {{"iters_human", graph.iters_human},
            {"iters_object", graph.iters_object},
            {"human_graph", graph.human_graph},
            {"object_graph", graph.object_graph}}},
          {"train",
           {{"lr", lr},
            {"momentum", momentum},
            {"weight_decay", weight_decay},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"negative_ratio", negative_ratio},
            {"val_fraction", val_fraction}}},
          {"seed", seed}};
}

RunConfig RunConfig::from_json(const json& j) {
  try {
    reject_unknown(j, {"schema_version", "profile", "dims", "graph", "train", "seed"}, "config");
    if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) throw Error("unsupported config schema_version");
    RunConfig c;
    if (auto p = j.find("profile"); p != j.end()) {
      reject_unknown(*p, {"name", "human_category", "human_threshold", "object_threshold", "actions", "hoi_classes"},
                     "profile");
      c.profile = DatasetProfile::named(p->value("name", std::string("vcoco")));
      read_field(*p, "human_category", c.profile.human_category);
      read_field(*p, "human_threshold", c.profile.human_threshold);
      read_field(*p, "object_threshold", c.profile.object_threshold);
      if (auto a = p->find("actions"); a != p->end()) c.profile.catalog = catalog_from_json(*a);
      if (auto h = p->find("hoi_classes"); h != p->end()) {
        for (const auto& e : *h) c.profile.hoi_classes.push_back({e.at("action"), e.at("object")});
      }
    }
    if (auto d = j.find("dims"); d != j.end()) c.dims = dims_from_json(*d, c.dims);
    if (auto g = j.find("graph"); g != j.end()) {
      reject_unknown(*g, {"iters_human", "iters_object", "human_graph", "object_graph"}, "graph");
      read_field(*g, "iters_human", c.graph.iters_human);
      read_field(*g, "iters_object", c.graph.iters_object);
      read_field(*g, "human_graph", c.graph.human_graph);
      read_field(*g, "object_graph", c.graph.object_graph);
    }
    if (auto t = j.find("train"); t != j.end()) {
      reject_unknown(*t, {"lr", "momentum", "weight_decay", "max_epochs", "patience", "negative_ratio", "val_fraction"},
                     "train");
      read_field(*t, "lr", c.lr);
      read_field(*t, "momentum", c.momentum);
      read_field(*t, "weight_decay", c.weight_decay);
      read_field(*t, "max_epochs", c.max_epochs);
      read_field(*t, "patience", c.patience);
      read_field(*t, "negative_ratio", c.negative_ratio);
      read_field(*t, "val_fraction", c.val_fraction);
    }
    read_field(j, "seed", c.seed);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid config: ") + e.what());
  }
}

RunConfig RunConfig::load(const std::string& path) { return from_json(read_json(path)); }

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()).substr(0, 16); }

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace drg::pipeline
