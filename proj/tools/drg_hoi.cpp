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
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "drg/checkpoint.hpp"
#include "drg/config.hpp"
#include "drg/data_files.hpp"
#include "drg/error.hpp"
#include "drg/pipeline.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/synth.hpp"
#include "drg/tensor_file.hpp"

namespace {

using namespace drg;
using pipeline::RunConfig;

// Command-line overrides of RunConfig fields, applied on top of --config.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> profile;
  std::optional<double> human_threshold, object_threshold;
  std::optional<int> iters_human, iters_object;
  bool disable_human_graph = false, disable_object_graph = false;
  std::optional<double> lr, momentum, weight_decay, val_fraction;
  std::optional<int> max_epochs, patience;
  std::optional<std::size_t> negative_ratio;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> node_input;

  void add(CLI::App& app, bool training) {
    app.add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--profile", profile, "Dataset profile when no config is given (vcoco, hico_det)");
    app.add_option("--human-threshold", human_threshold, "Keep humans scoring above this");
    app.add_option("--object-threshold", object_threshold, "Keep objects scoring above this");
    app.add_option("--iters-human", iters_human, "Human-centric aggregation iterations");
    app.add_option("--iters-object", iters_object, "Object-centric aggregation iterations");
    app.add_flag("--disable-human-graph", disable_human_graph, "Drop the human-centric subgraph");
    app.add_flag("--disable-object-graph", disable_object_graph, "Drop the object-centric subgraph");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--node-input", node_input,
                   "Relation graph node features: spatial_semantic, semantic, spatial or appearance");
    if (!training) return;
    app.add_option("--lr", lr, "Learning rate");
    app.add_option("--momentum", momentum, "SGD momentum");
    app.add_option("--weight-decay", weight_decay, "Weight decay");
    app.add_option("--max-epochs", max_epochs, "Epoch limit");
    app.add_option("--patience", patience, "Early-stopping patience in epochs");
    app.add_option("--negative-ratio", negative_ratio, "Negatives per positive");
    app.add_option("--val-fraction", val_fraction, "Tail fraction of images held out for validation");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) {
      c = RunConfig::load(config_path);
      if (profile && *profile != c.profile.name) {
        throw drg::ConfigMismatchError("--profile " + *profile + " conflicts with config profile " + c.profile.name);
      }
    } else if (profile) {
      c.profile = pipeline::DatasetProfile::named(*profile);
    }
    if (human_threshold) c.profile.human_threshold = *human_threshold;
    if (object_threshold) c.profile.object_threshold = *object_threshold;
    if (iters_human) c.graph.iters_human = *iters_human;
    if (iters_object) c.graph.iters_object = *iters_object;
    if (disable_human_graph) c.graph.human_graph = false;
    if (disable_object_graph) c.graph.object_graph = false;
    if (lr) c.lr = *lr;
    if (momentum) c.momentum = *momentum;
    if (weight_decay) c.weight_decay = *weight_decay;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (patience) c.patience = *patience;
    if (negative_ratio) c.negative_ratio = *negative_ratio;
    if (val_fraction) c.val_fraction = *val_fraction;
    if (seed) c.seed = *seed;
    if (node_input) c.dims.node_input = model::node_input_from_string(*node_input);
    c.validate();
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw drg::Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw drg::Error("failed writing '" + path + "'");
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("drg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("DRG_LOG_LEVEL"); level && *level) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Dual relation graph HOI detection: featurize, infer, train, eval and synthetic data."};
  app.require_subcommand(1);

  std::string detections, appearance, annotations, embeddings, checkpoint, features, predictions, output, loss_csv, tag;

  ConfigFlags featurize_flags;
  auto* featurize = app.add_subcommand("featurize", "Write spatial-semantic features for every human-object pair");
  featurize->add_option("--detections", detections, "Detection JSON")->required()->check(CLI::ExistingFile);
  featurize->add_option("--embeddings", embeddings, "Word embedding text file")->required()->check(CLI::ExistingFile);
  featurize->add_option("--appearance", appearance, "Appearance feature JSON (appearance node inputs)")
      ->check(CLI::ExistingFile);
  featurize->add_option("--checkpoint", checkpoint, "Take the spatial ConvNet from this checkpoint")
      ->check(CLI::ExistingFile);
  featurize->add_option("--output", output, "Feature archive to write")->required();
  featurize_flags.add(*featurize, false);

  ConfigFlags infer_flags;
  auto* infer = app.add_subcommand("infer", "Score HOI triplets with a trained checkpoint");
  infer->add_option("--detections", detections, "Detection JSON")->required()->check(CLI::ExistingFile);
  infer->add_option("--appearance", appearance, "Appearance feature JSON")->required()->check(CLI::ExistingFile);
  infer->add_option("--embeddings", embeddings, "Word embedding text file")->required()->check(CLI::ExistingFile);
  infer->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  infer->add_option("--features", features, "Precomputed feature archive")->check(CLI::ExistingFile);
  infer->add_option("--output", output, "Prediction JSON to write")->required();
  infer_flags.add(*infer, false);

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a model with early stopping on a validation split");
  train->add_option("--detections", detections, "Detection JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--appearance", appearance, "Appearance feature JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--annotations", annotations, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--embeddings", embeddings, "Word embedding text file")->required()->check(CLI::ExistingFile);
  train->add_option("--output", output, "Checkpoint to write")->required();
  train->add_option("--loss-csv", loss_csv, "Loss curve CSV (default: <output>.loss.csv)");
  train_flags.add(*train, true);

  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Role mAP of predictions against ground truth");
  eval->add_option("--predictions", predictions, "Prediction JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--annotations", annotations, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--output", output, "Report JSON to write");
  eval->add_option("--tag", tag, "Only images whose annotations carry this tag");
  eval_flags.add(*eval, false);

  synth::SynthConfig synth_config;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic corpus with a known labeling rule");
  gen->add_option("--output", output, "Output directory")->required();
  gen->add_option("--seed", synth_config.seed, "Random seed")->required();
  gen->add_option("--train-images", synth_config.train_images, "Training images");
  gen->add_option("--test-images", synth_config.test_images, "Test images");
  gen->add_option("--context-fraction", synth_config.context_fraction, "Share of two-human context scenes")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pipeline::kExitInput;
  }

  try {
    const std::size_t workers = pipeline::worker_count();
    if (*featurize) {
      const RunConfig config = featurize_flags.resolve();
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
      std::optional<pipeline::AppearanceFile> app_file;
      if (!appearance.empty()) app_file = pipeline::load_appearance(appearance);
      io::write_tensor_file(
          output, pipeline::featurize(dets, table, config, spatial, workers, app_file ? &*app_file : nullptr));
      spdlog::info("featurized {} images into {}", dets.images.size(), output);
    } else if (*infer) {
      const RunConfig config = infer_flags.resolve();
      const auto dets = pipeline::load_detections(detections);
      const auto app_file = pipeline::load_appearance(appearance);
      const auto table = features::load_embeddings(embeddings, config.dims.embed_dim);
      const auto ckpt = pipeline::load_checkpoint(checkpoint);
      std::optional<io::TensorFile> archive;
      if (!features.empty()) archive = io::read_tensor_file(features);
      const auto preds = pipeline::infer(dets, app_file, ckpt, config, table, archive ? &*archive : nullptr, workers);
      pipeline::write_json(output, pipeline::predictions_to_json(preds), -1);
      spdlog::info("wrote predictions for {} images to {}", preds.images.size(), output);
    } else if (*train) {
      const RunConfig config = train_flags.resolve();
      const auto dets = pipeline::load_detections(detections);
      const auto app_file = pipeline::load_appearance(appearance);
      const auto ann = pipeline::load_annotations(annotations);
      const auto table = features::load_embeddings(embeddings, config.dims.embed_dim);
      const auto result = pipeline::train(dets, app_file, ann, table, config, [](const training::EpochRecord& r) {
        spdlog::info("epoch {:3d}  train loss {:.6f}  val loss {:.6f}", r.epoch, r.train_loss, r.val_loss);
      });
      pipeline::save_checkpoint(output, result.checkpoint);
      write_text(loss_csv.empty() ? output + ".loss.csv" : loss_csv, result.loss_csv);
      spdlog::info("trained on {} images ({} held out); best epoch {}{}; checkpoint {}", result.train_images,
                   result.val_images, result.result.best_epoch, result.result.early_stopped ? " (early stop)" : "",
                   output);
    } else if (*eval) {
      const RunConfig config = eval_flags.resolve();
      const auto preds = pipeline::load_predictions(predictions);
      const auto ann = pipeline::load_annotations(annotations);
      const auto report = pipeline::evaluate(preds, ann, config, tag);
      std::cout << pipeline::format_report(report);
      if (!output.empty()) pipeline::write_json(output, report);
    } else if (*gen) {
      const auto corpus = synth::generate(synth_config);
      synth::write_corpus(corpus, output);
      spdlog::info("wrote synthetic corpus ({} train, {} test images) to {}", synth_config.train_images,
                   synth_config.test_images, output);
    }
  } catch (...) {
    std::string message;
    const int code = pipeline::exit_code_for(std::current_exception(), &message);
    spdlog::error("{}", message);
    return code;
  }
  return pipeline::kExitOk;
}
