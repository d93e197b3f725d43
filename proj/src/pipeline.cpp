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
#include "drg/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "drg/error.hpp"
#include "drg/inference.hpp"

namespace drg::pipeline {

using nlohmann::json;

int exit_code_for(std::exception_ptr error, std::string* message) {
  std::string msg;
  int code = kExitInput;
  try {
    std::rethrow_exception(error);
  } catch (const ParseError& e) {
    msg = std::string("input error: ") + e.what();
  } catch (const MissingEmbeddingError& e) {
    msg = std::string("input error: ") + e.what();
  } catch (const ConfigMismatchError& e) {
    msg = std::string("config mismatch: ") + e.what();
    code = kExitMismatch;
  } catch (const DimensionError& e) {
    msg = std::string("dimension mismatch: ") + e.what();
    code = kExitMismatch;
  } catch (const NumericError& e) {
    msg = std::string("numeric failure: ") + e.what();
    code = kExitNumeric;
  } catch (const std::exception& e) {
    msg = std::string("error: ") + e.what();
  }
  if (message) *message = msg;
  return code;
}

std::size_t worker_count() {
  const char* env = std::getenv("DRG_WORKERS");
  if (!env || !*env) return 1;
  std::size_t n = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, n);
  if (ec != std::errc() || ptr != end || n == 0) {
    throw Error(std::string("DRG_WORKERS must be a positive integer, got '") + env + "'");
  }
  return n;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

const ImageAppearance& find_appearance(const AppearanceFile& file, const std::string& id) {
  for (const auto& img : file.images) {
    if (img.id == id) return img;
  }
  throw ParseError("appearance", 0, "no appearance features for image '" + id + "'");
}

SelectedImage select_detections(const ImageDetections& image, const ImageAppearance* appearance,
                                const RunConfig& config) {
  const auto& profile = config.profile;
  SelectedImage out;
  std::map<std::size_t, const Tensor*> features;
  if (appearance) {
    for (const auto& [idx, values] : appearance->features) {
      if (idx >= image.detections.size()) {
        throw ParseError("appearance", 0,
                         "image '" + image.id + "': detection index " + std::to_string(idx) + " out of range");
      }
      if (values.numel() != config.dims.appearance_dim) {
        throw ConfigMismatchError("image '" + image.id + "': appearance vectors have " +
                                  std::to_string(values.numel()) + " values, config expects " +
                                  std::to_string(config.dims.appearance_dim));
      }
      features[idx] = &values;
    }
  }
  auto appearance_of = [&](std::size_t k) {
    auto it = features.find(k);
    if (it == features.end()) {
      throw ParseError("appearance", 0,
                       "image '" + image.id + "': no appearance vector for detection " + std::to_string(k));
    }
    return *it->second;
  };
  for (std::size_t k = 0; k < image.detections.size(); ++k) {
    const auto& d = image.detections[k];
    if (d.category == profile.human_category && d.score > profile.human_threshold) {
      out.human_indices.push_back(k);
      out.input.humans.push_back(d);
      if (appearance) out.input.human_appearance.push_back(appearance_of(k));
    }
    if (d.score > profile.object_threshold) {
      out.object_indices.push_back(k);
      out.input.objects.push_back(d);
      if (appearance) out.input.object_appearance.push_back(appearance_of(k));
    }
  }
  return out;
}

std::vector<eval::GroundTruthTriplet> ground_truth(const ImageAnnotations& image,
                                                   const streams::ActionCatalog& catalog) {
  std::vector<eval::GroundTruthTriplet> out;
  for (const auto& t : image.triplets) {
    const auto a = catalog.index_of(t.action);
    if (!a) throw ParseError("annotations", 0, "image '" + image.id + "': unknown action '" + t.action + "'");
    if (catalog[*a].requires_object != t.object.has_value()) {
      throw ParseError(
          "annotations", 0,
          "image '" + image.id + "': action '" + t.action + (t.object ? "' takes no object" : "' needs an object box"));
    }
    out.push_back({image.id, t.human, *a, t.object});
  }
  return out;
}

std::vector<training::AnnotatedImage> assemble(const DetectionFile& detections, const AppearanceFile& appearance,
                                               const AnnotationFile& annotations, const RunConfig& config) {
  std::map<std::string, const ImageAnnotations*> by_id;
  for (const auto& a : annotations.images) by_id[a.id] = &a;
  std::vector<training::AnnotatedImage> out;
  for (const auto& img : detections.images) {
    auto it = by_id.find(img.id);
    if (it == by_id.end()) throw ParseError("annotations", 0, "no annotations for image '" + img.id + "'");
    SelectedImage sel = select_detections(img, &find_appearance(appearance, img.id), config);
    out.push_back({img.id, std::move(sel.input), ground_truth(*it->second, config.profile.catalog)});
  }
  return out;
}

std::string spatial_hash(const features::SpatialConvParams& spatial) {
  io::TensorFile f;
  f.add("conv1.weight", spatial.conv1_kernels);
  f.add("conv1.bias", spatial.conv1_bias);
  f.add("conv2.weight", spatial.conv2_kernels);
  f.add("conv2.bias", spatial.conv2_bias);
  std::ostringstream out;
  io::write_tensor_file(out, f);
  return sha256_hex(out.str()).substr(0, 16);
}

io::TensorFile featurize(const DetectionFile& detections, const features::EmbeddingTable& table,
                         const RunConfig& config, const features::SpatialConvParams& spatial, std::size_t workers,
                         const AppearanceFile* appearance) {
  const bool needs_appearance = config.dims.node_input == model::NodeInput::Appearance;
  if (needs_appearance && !appearance) throw Error("appearance node inputs need an appearance file");
  model::ModelParams params = model::ModelParams::zeros(config.dims);
  params.spatial = spatial;
  const std::size_t n = detections.images.size();
  std::vector<SelectedImage> selected(n);
  std::vector<Tensor> values(n);
  parallel_for(n, workers, [&](std::size_t k) {
    const auto& image = detections.images[k];
    selected[k] =
        select_detections(image, needs_appearance ? &find_appearance(*appearance, image.id) : nullptr, config);
    const auto& in = selected[k].input;
    if (in.humans.empty() || in.objects.empty()) return;
    values[k] = model::featurize(params, config.dims, table, in.humans, in.objects, nullptr, &in.human_appearance,
                                 &in.object_appearance)
                    .values;
  });

  io::TensorFile file;
  json images = json::array();
  for (std::size_t k = 0; k < n; ++k) {
    images.push_back({{"id", detections.images[k].id},
                      {"humans", selected[k].human_indices},
                      {"objects", selected[k].object_indices}});
    if (!values[k].empty()) file.add("features/" + std::to_string(k), std::move(values[k]));
  }
  file.metadata = json{{"format", "drg-hoi-features"},
                       {"schema_version", kSchemaVersion},
                       {"config_hash", config.hash()},
                       {"spatial_hash", spatial_hash(spatial)},
                       {"feature_dim", config.dims.feature_dim()},
                       {"images", images}}
                      .dump();
  return file;
}

namespace {

// Raw node features of image k from an archive, after checking that the
// archive was built from the same detections and selection.
graph::NodeFeatures archived_features(const io::TensorFile& archive, const json& meta, std::size_t k,
                                      const ImageDetections& image, const SelectedImage& sel, std::size_t feature_dim) {
  const json& images = meta.at("images");
  if (k >= images.size() || images[k].at("id") != image.id ||
      images[k].at("humans").get<std::vector<std::size_t>>() != sel.human_indices ||
      images[k].at("objects").get<std::vector<std::size_t>>() != sel.object_indices) {
    throw ConfigMismatchError("feature archive does not match detections for image '" + image.id + "'");
  }
  graph::NodeFeatures nodes{sel.human_indices.size(), sel.object_indices.size(), {}};
  const Tensor* t = archive.find("features/" + std::to_string(k));
  if (!t) throw ConfigMismatchError("feature archive lacks features for image '" + image.id + "'");
  expect_shape(*t, {nodes.num_nodes(), feature_dim}, "archived features");
  nodes.values = *t;
  return nodes;
}

}  // namespace

PredictionFile infer(const DetectionFile& detections, const AppearanceFile& appearance, const Checkpoint& ckpt,
                     const RunConfig& config, const features::EmbeddingTable& table, const io::TensorFile* archive,
                     std::size_t workers) {
  check_compatible(ckpt, config);
  json meta;
  if (archive) {
    meta = parse_json_text(archive->metadata, "feature archive");
    if (meta.value("format", std::string()) != "drg-hoi-features") {
      throw ParseError("feature archive", 0, "not a feature archive");
    }
    if (meta.value("spatial_hash", std::string()) != spatial_hash(ckpt.params.spatial)) {
      throw ConfigMismatchError("feature archive was built with different spatial ConvNet parameters");
    }
    if (meta.value("feature_dim", std::size_t{0}) != config.dims.feature_dim()) {
      throw ConfigMismatchError("feature archive dimension differs from the config");
    }
  }
  const auto& catalog = config.profile.catalog;
  const std::size_t n = detections.images.size();
  PredictionFile out;
  out.config_hash = config.hash();
  out.images.resize(n);
  parallel_for(n, workers, [&](std::size_t k) {
    const ImageDetections& image = detections.images[k];
    const SelectedImage sel = select_detections(image, &find_appearance(appearance, image.id), config);
    std::optional<graph::NodeFeatures> raw;
    if (archive && !sel.input.humans.empty() && !sel.input.objects.empty()) {
      raw = archived_features(*archive, meta, k, image, sel, config.dims.feature_dim());
    }
    const auto triplets = streams::infer_image(image.id, sel.input, ckpt.params, config.dims, table, catalog,
                                               config.graph, raw ? &*raw : nullptr);
    ImagePredictions& dst = out.images[k];
    dst.id = image.id;
    dst.predictions.reserve(triplets.size());
    // infer_image emits, per human, the pair triplets in object order and
    // then the object-free ones.
    std::size_t t = 0;
    for (std::size_t i = 0; i < sel.input.humans.size(); ++i) {
      for (std::size_t j = 0; j < sel.input.objects.size(); ++j) {
        for (std::size_t a = 0; a < catalog.size(); ++a) {
          if (!catalog[a].requires_object) continue;
          const auto& p = triplets.at(t++);
          dst.predictions.push_back({p.human, catalog[a].name, p.object, sel.input.objects[j].category, p.score});
        }
      }
      for (std::size_t a = 0; a < catalog.size(); ++a) {
        if (catalog[a].requires_object) continue;
        const auto& p = triplets.at(t++);
        dst.predictions.push_back({p.human, catalog[a].name, std::nullopt, "", p.score});
      }
    }
  });
  return out;
}

namespace {

std::string format_real(Real x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

TrainOutput train(const DetectionFile& detections, const AppearanceFile& appearance, const AnnotationFile& annotations,
                  const features::EmbeddingTable& table, const RunConfig& config,
                  const training::EpochCallback& on_epoch) {
  std::vector<training::AnnotatedImage> images = assemble(detections, appearance, annotations, config);
  const std::size_t n = images.size();
  std::size_t val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n)));
  if (config.val_fraction > 0 && n > 1) val = std::max<std::size_t>(val, 1);
  val = std::min(val, n > 0 ? n - 1 : 0);
  std::vector<training::AnnotatedImage> val_set(
      std::make_move_iterator(images.end() - static_cast<std::ptrdiff_t>(val)), std::make_move_iterator(images.end()));
  images.resize(n - val);

  TrainOutput out;
  out.train_images = images.size();
  out.val_images = val_set.size();
  const std::string hash = config.hash();
  out.loss_csv = "# config_hash=" + hash + "\nepoch,train_loss,val_loss\n";
  auto record = [&](const training::EpochRecord& rec) {
    out.loss_csv +=
        std::to_string(rec.epoch) + ',' + format_real(rec.train_loss) + ',' + format_real(rec.val_loss) + '\n';
    if (on_epoch) on_epoch(rec);
  };
  out.result = training::train(images, val_set, config.dims, table, config.profile.catalog, config.train_config(),
                               model::ModelParams::initialize(config.dims, config.seed), record);
  out.checkpoint.dims = config.dims;
  out.checkpoint.catalog = config.profile.catalog;
  out.checkpoint.config_hash = hash;
  out.checkpoint.params = out.result.params;
  out.checkpoint.optimizer = out.result.state;
  return out;
}

json evaluate(const PredictionFile& predictions, const AnnotationFile& annotations, const RunConfig& config,
              const std::string& tag) {
  const auto& profile = config.profile;
  const auto& catalog = profile.catalog;
  const bool per_class = !profile.hoi_classes.empty();

  std::vector<std::string> names;
  if (per_class) {
    for (const auto& c : profile.hoi_classes) names.push_back(c.object.empty() ? c.action : c.action + "|" + c.object);
  } else {
    for (const auto& a : catalog.actions()) names.push_back(a.name);
  }
  // Class index of an (action, object category) key; nullopt drops it.
  auto class_of = [&](const std::string& action, const std::string& object) -> std::optional<std::size_t> {
    if (!per_class) return catalog.index_of(action);
    for (std::size_t c = 0; c < profile.hoi_classes.size(); ++c) {
      if (profile.hoi_classes[c].action == action && profile.hoi_classes[c].object == object) return c;
    }
    return std::nullopt;
  };

  std::map<std::string, bool> included;
  std::vector<eval::GroundTruthTriplet> gts;
  for (const auto& img : annotations.images) {
    const bool keep = tag.empty() || std::find(img.tags.begin(), img.tags.end(), tag) != img.tags.end();
    included[img.id] = keep;
    if (!keep) continue;
    ground_truth(img, catalog);  // validates action names and object presence
    for (const auto& t : img.triplets) {
      if (auto c = class_of(t.action, t.object ? t.object_category : "")) {
        gts.push_back({img.id, t.human, *c, t.object});
      }
    }
  }
  std::vector<eval::PredictionTriplet> preds;
  for (const auto& img : predictions.images) {
    auto it = included.find(img.id);
    if (it == included.end()) throw ParseError("predictions", 0, "image '" + img.id + "' has no ground truth");
    if (!it->second) continue;
    for (const auto& p : img.predictions) {
      if (!catalog.index_of(p.action)) {
        throw ParseError("predictions", 0, "image '" + img.id + "': unknown action '" + p.action + "'");
      }
      if (auto c = class_of(p.action, p.object ? p.object_category : "")) {
        preds.push_back({img.id, p.human, *c, p.object, p.score});
      }
    }
  }

  const eval::RoleMapReport report = eval::role_map(preds, gts, names.size());
  json per_action = json::array();
  for (const auto& a : report.per_action) {
    per_action.push_back({{"name", names[a.action]},
                          {"num_gt", a.num_gt},
                          {"num_predictions", a.num_predictions},
                          {"ap", a.ap ? json(*a.ap) : json()}});
  }
  std::size_t images = 0;
  for (const auto& [id, keep] : included) images += keep ? 1 : 0;
  return {{"schema_version", kSchemaVersion},
          {"config_hash", config.hash()},
          {"predictions_config_hash", predictions.config_hash},
          {"tag", tag},
          {"images", images},
          {"mean_ap", report.mean_ap},
          {"evaluated_actions", report.evaluated_actions},
          {"per_action", per_action}};
}

std::string format_report(const json& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %8s %8s %10s\n", "action", "AP", "#gt", "#pred");
  out << line;
  for (const auto& row : report.at("per_action")) {
    const std::string ap = row.at("ap").is_null() ? "-" : format_real(std::round(row.at("ap").get<Real>() * 1e4) / 1e4);
    std::snprintf(line, sizeof line, "%-28s %8s %8zu %10zu\n", row.at("name").get<std::string>().c_str(), ap.c_str(),
                  row.at("num_gt").get<std::size_t>(), row.at("num_predictions").get<std::size_t>());
    out << line;
  }
  std::snprintf(line, sizeof line, "mean AP %.4f over %zu actions\n", report.at("mean_ap").get<Real>(),
                report.at("evaluated_actions").get<std::size_t>());
  out << line;
  return out.str();
}

}  // namespace drg::pipeline
