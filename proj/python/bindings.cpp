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
// Python module drg_hoi._core. Arrays cross the boundary as float64 numpy
// arrays; pipeline inputs and reports cross as file paths and JSON text.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "drg/checkpoint.hpp"
#include "drg/config.hpp"
#include "drg/data_files.hpp"
#include "drg/drg.hpp"
#include "drg/error.hpp"
#include "drg/evaluation.hpp"
#include "drg/geometry.hpp"
#include "drg/pipeline.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/streams.hpp"
#include "drg/synth.hpp"
#include "drg/tensor_file.hpp"
#include "drg/training.hpp"

namespace py = pybind11;
using namespace drg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<Real>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

geometry::BBox to_box(const std::vector<Real>& v) {
  if (v.size() != 4) throw DimensionError("a box is [x1, y1, x2, y2]");
  return {v[0], v[1], v[2], v[3]};
}

graph::SubgraphKind to_kind(const std::string& name) {
  if (name == "human") return graph::SubgraphKind::HumanCentric;
  if (name == "object") return graph::SubgraphKind::ObjectCentric;
  throw Error("subgraph kind must be 'human' or 'object', got '" + name + "'");
}

graph::SubgraphParams to_params(const Array& value, const Array& query, const Array& key, const Array& gain,
                                const Array& bias) {
  graph::SubgraphParams p{to_tensor(value), to_tensor(query), to_tensor(key), to_tensor(gain), to_tensor(bias)};
  p.validate();
  return p;
}

graph::NodeFeatures to_nodes(const Array& features, std::size_t humans, std::size_t objects) {
  graph::NodeFeatures f{humans, objects, to_tensor(features)};
  if (f.values.rank() != 2 || f.values.dim(0) != humans * objects) {
    throw DimensionError("node features must be [num_humans * num_objects, d]");
  }
  return f;
}

pipeline::RunConfig resolve_config(const std::string& config_json) {
  if (config_json.empty()) return pipeline::RunConfig{};
  return pipeline::RunConfig::from_json(pipeline::parse_json_text(config_json, "config"));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
}

std::string featurize(const std::string& detections, const std::string& embeddings, const std::string& output,
                      const std::string& config_json, const std::string& checkpoint, const std::string& appearance) {
  const auto config = resolve_config(config_json);
  const auto dets = pipeline::load_detections(detections);
  const auto table = features::load_embeddings(embeddings, config.dims.embed_dim);
  features::SpatialConvParams spatial;
  if (!checkpoint.empty()) {
    const auto ckpt = pipeline::load_checkpoint(checkpoint);
    pipeline::check_compatible(ckpt, config);
    spatial = ckpt.params.spatial;
  } else {
    spatial = model::ModelParams::initialize(config.dims, config.seed).spatial;
  }
  std::optional<pipeline::AppearanceFile> app;
  if (!appearance.empty()) app = pipeline::load_appearance(appearance);
  const auto archive =
      pipeline::featurize(dets, table, config, spatial, pipeline::worker_count(), app ? &*app : nullptr);
  io::write_tensor_file(output, archive);
  return archive.metadata;
}

void infer(const std::string& detections, const std::string& appearance, const std::string& embeddings,
           const std::string& checkpoint, const std::string& output, const std::string& config_json,
           const std::string& features) {
  const auto config = resolve_config(config_json);
  const auto dets = pipeline::load_detections(detections);
  const auto app = pipeline::load_appearance(appearance);
  const auto table = features::load_embeddings(embeddings, config.dims.embed_dim);
  const auto ckpt = pipeline::load_checkpoint(checkpoint);
  std::optional<io::TensorFile> archive;
  if (!features.empty()) archive = io::read_tensor_file(features);
  const auto preds =
      pipeline::infer(dets, app, ckpt, config, table, archive ? &*archive : nullptr, pipeline::worker_count());
  pipeline::write_json(output, pipeline::predictions_to_json(preds), -1);
}

std::string train(const std::string& detections, const std::string& appearance, const std::string& annotations,
                  const std::string& embeddings, const std::string& output, const std::string& config_json) {
  const auto config = resolve_config(config_json);
  const auto dets = pipeline::load_detections(detections);
  const auto app = pipeline::load_appearance(appearance);
  const auto ann = pipeline::load_annotations(annotations);
  const auto table = features::load_embeddings(embeddings, config.dims.embed_dim);
  const auto result = pipeline::train(dets, app, ann, table, config);
  pipeline::save_checkpoint(output, result.checkpoint);
  write_text(output + ".loss.csv", result.loss_csv);
  return result.loss_csv;
}

std::string evaluate(const std::string& predictions, const std::string& annotations, const std::string& config_json,
                     const std::string& tag) {
  const auto config = resolve_config(config_json);
  return pipeline::evaluate(pipeline::load_predictions(predictions), pipeline::load_annotations(annotations), config,
                            tag)
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual relation graph HOI detection core";

  const char* level = std::getenv("DRG_LOG_LEVEL");
  spdlog::set_level(level && *level ? spdlog::level::from_str(level) : spdlog::level::warn);

  static py::exception<Error> base(m, "DrgError", PyExc_RuntimeError);
  static py::exception<ParseError> parse(m, "ParseError", base.ptr());
  static py::exception<MissingEmbeddingError> missing(m, "MissingEmbeddingError", base.ptr());
  static py::exception<ConfigMismatchError> mismatch(m, "ConfigMismatchError", base.ptr());
  static py::exception<DimensionError> dimension(m, "DimensionError", base.ptr());
  static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      parse(e.what());
    } catch (const MissingEmbeddingError& e) {
      missing(e.what());
    } catch (const ConfigMismatchError& e) {
      mismatch(e.what());
    } catch (const DimensionError& e) {
      dimension(e.what());
    } catch (const NumericError& e) {
      numeric(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def(
      "iou", [](const std::vector<Real>& a, const std::vector<Real>& b) { return geometry::iou(to_box(a), to_box(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "rasterize_pair",
      [](const std::vector<Real>& h, const std::vector<Real>& o, std::size_t size) {
        return to_array(geometry::rasterize_pair(to_box(h), to_box(o), size).channels);
      },
      py::arg("human"), py::arg("object"), py::arg("size") = geometry::kDefaultRasterSize,
      "Two-channel binary layout of the pair inside its union box, shape [2, size, size].");

  m.def(
      "attention_weights",
      [](const Array& center, const Array& neighbors, const Array& query, const Array& key) {
        const Tensor c = to_tensor(center), n = to_tensor(neighbors);
        if (n.rank() != 2) throw DimensionError("neighbors must be [n, d]");
        graph::SubgraphParams p = graph::SubgraphParams::zeros(c.numel(), 1);
        p.query = to_tensor(query);
        p.key = to_tensor(key);
        std::vector<std::span<const Real>> rows;
        for (std::size_t r = 0; r < n.dim(0); ++r) rows.push_back(n.row(r));
        return to_array(graph::attention_weights(c.values(), rows, p));
      },
      py::arg("center"), py::arg("neighbors"), py::arg("query"), py::arg("key"));
  m.def(
      "aggregate",
      [](const Array& features, std::size_t humans, std::size_t objects, const std::string& kind, const Array& value,
         const Array& query, const Array& key, const Array& gain, const Array& bias, int iterations) {
        const auto p = to_params(value, query, key, gain, bias);
        return to_array(graph::run_subgraph(to_nodes(features, humans, objects), to_kind(kind), p, iterations).values);
      },
      py::arg("features"), py::arg("num_humans"), py::arg("num_objects"), py::arg("kind"), py::arg("value"),
      py::arg("query"), py::arg("key"), py::arg("ln_gain"), py::arg("ln_bias"), py::arg("iterations") = 1,
      "Runs `iterations` synchronous attention updates over one subgraph. Rows are node (i, j) at i * num_objects + j.");

  m.def(
      "fuse",
      [](Real sh, Real so, const Array& ah, const Array& ao, const Array& sph, const Array& spo,
         const std::vector<bool>& requires_object) {
        std::vector<streams::Action> actions;
        for (std::size_t a = 0; a < requires_object.size(); ++a) {
          actions.push_back({"a" + std::to_string(a), requires_object[a]});
        }
        return to_array(streams::fuse(sh, so, to_tensor(ah), to_tensor(ao), to_tensor(sph), to_tensor(spo),
                                      streams::ActionCatalog(std::move(actions))));
      },
      py::arg("human_score"), py::arg("object_score"), py::arg("human_actions"), py::arg("object_actions"),
      py::arg("spatial_human_actions"), py::arg("spatial_object_actions"), py::arg("requires_object"));
  m.def(
      "multilabel_loss",
      [](const Array& scores, const Array& labels) {
        return training::multilabel_loss(to_tensor(scores), to_tensor(labels));
      },
      py::arg("scores"), py::arg("labels"));
  m.def("average_precision", &eval::average_precision, py::arg("ranked_true_positive"), py::arg("total_gt"));

  m.def(
      "config_json",
      [](const std::string& config_json) { return resolve_config(config_json).to_json().dump(); },
      py::arg("config_json") = "", "Validated, fully populated run configuration.");
  m.def(
      "config_hash", [](const std::string& config_json) { return resolve_config(config_json).hash(); },
      py::arg("config_json") = "");
  m.def(
      "gen_synth",
      [](const std::string& output, std::uint64_t seed, std::size_t train_images, std::size_t test_images,
         double context_fraction) {
        synth::SynthConfig c;
        c.seed = seed;
        c.train_images = train_images;
        c.test_images = test_images;
        c.context_fraction = context_fraction;
        synth::write_corpus(synth::generate(c), output);
      },
      py::arg("output"), py::arg("seed"), py::arg("train_images") = 200, py::arg("test_images") = 50,
      py::arg("context_fraction") = 0.3, py::call_guard<py::gil_scoped_release>());
  m.def("featurize", &featurize, py::arg("detections"), py::arg("embeddings"), py::arg("output"),
        py::arg("config_json") = "", py::arg("checkpoint") = "", py::arg("appearance") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def("infer", &infer, py::arg("detections"), py::arg("appearance"), py::arg("embeddings"), py::arg("checkpoint"),
        py::arg("output"), py::arg("config_json") = "", py::arg("features") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def("train", &train, py::arg("detections"), py::arg("appearance"), py::arg("annotations"), py::arg("embeddings"),
        py::arg("output"), py::arg("config_json") = "", py::call_guard<py::gil_scoped_release>());
  m.def("evaluate", &evaluate, py::arg("predictions"), py::arg("annotations"), py::arg("config_json") = "",
        py::arg("tag") = "", py::call_guard<py::gil_scoped_release>());
}
