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
#include "drg/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>

#include "drg/error.hpp"

namespace drg::training {

namespace {

bool counts(const std::vector<bool>* mask, std::size_t a) { return mask == nullptr || (*mask)[a]; }

std::vector<bool> object_mask(const streams::ActionCatalog& catalog, bool requires_object) {
  std::vector<bool> m(catalog.size());
  for (std::size_t a = 0; a < catalog.size(); ++a) m[a] = catalog[a].requires_object == requires_object;
  return m;
}

bool any(const std::vector<bool>& m) { return std::find(m.begin(), m.end(), true) != m.end(); }

}  // namespace

Real multilabel_loss(const Tensor& scores, const Tensor& labels, const std::vector<bool>* mask) {
  expect_shape(labels, scores.shape(), "multilabel_loss labels");
  Real loss = 0;
  for (std::size_t a = 0; a < scores.numel(); ++a) {
    if (!counts(mask, a)) continue;
    const Real p = std::max(scores[a], kProbabilityClamp);
    const Real q = std::max(1.0 - scores[a], kProbabilityClamp);
    loss -= labels[a] * std::log(p) + (1.0 - labels[a]) * std::log(q);
  }
  return loss;
}

Tensor multilabel_loss_grad(const Tensor& scores, const Tensor& labels, const std::vector<bool>* mask) {
  expect_shape(labels, scores.shape(), "multilabel_loss labels");
  Tensor g(scores.shape());
  for (std::size_t a = 0; a < scores.numel(); ++a) {
    if (!counts(mask, a)) continue;
    const Real s = scores[a];
    Real ga = 0;
    if (s > kProbabilityClamp) ga -= labels[a] / s;
    if (1.0 - s > kProbabilityClamp) ga += (1.0 - labels[a]) / (1.0 - s);
    g[a] = ga;
  }
  return g;
}

Real total_loss(const StreamScores& scores, const Tensor& labels, const streams::ActionCatalog& catalog,
                bool include_object_free) {
  const std::vector<bool> with_object = object_mask(catalog, true);
  Real loss = multilabel_loss(scores.human, labels, include_object_free ? nullptr : &with_object);
  for (const Tensor* s : {&scores.object, &scores.spatial_human, &scores.spatial_object}) {
    if (!s->empty()) loss += multilabel_loss(*s, labels, &with_object);
  }
  return loss;
}

std::vector<TrainingExample> sample_batch(const std::vector<TrainingExample>& positives,
                                          const std::vector<TrainingExample>& negatives, Rng& rng,
                                          const SampleConfig& config) {
  std::vector<TrainingExample> batch;
  if (positives.empty()) return batch;

  std::map<std::size_t, geometry::BBox> human_boxes, object_boxes;
  for (const auto& p : positives) {
    if (!human_boxes.count(p.human_index)) {
      human_boxes[p.human_index] = geometry::jitter_box(p.human.box, rng, config.jitter_tries, config.jitter);
    }
    if (!object_boxes.count(p.object_index)) {
      object_boxes[p.object_index] = geometry::jitter_box(p.object.box, rng, config.jitter_tries, config.jitter);
    }
  }
  auto apply_jitter = [&](TrainingExample e) {
    if (auto it = human_boxes.find(e.human_index); it != human_boxes.end()) e.human.box = it->second;
    if (auto it = object_boxes.find(e.object_index); it != object_boxes.end()) e.object.box = it->second;
    return e;
  };
  for (const auto& p : positives) batch.push_back(apply_jitter(p));

  const std::size_t wanted = config.negative_ratio * positives.size();
  if (negatives.size() < wanted) {
    static std::atomic<int> warnings{0};
    const int seen = warnings.fetch_add(1);
    if (seen < 5) {
      spdlog::warn("only {} negatives available, wanted {}; using all", negatives.size(), wanted);
    } else if (seen == 5) {
      spdlog::warn("further negative-shortage warnings suppressed");
    }
  }
  // Partial Fisher-Yates: the first `take` entries become the sample.
  std::vector<std::size_t> pool(negatives.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  const std::size_t take = std::min(wanted, negatives.size());
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
    std::swap(pool[k], pool[pick]);
    batch.push_back(apply_jitter(negatives[pool[k]]));
  }
  return batch;
}

void sgd_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, OptimState& state) {
  if (params.size() != grads.size()) throw DimensionError("sgd_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    expect_shape(*grads[i], params[i]->shape(), "sgd_step gradient");
    if (!grads[i]->all_finite()) throw NumericError("sgd_step: non-finite gradient");
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (const Tensor* p : params) state.velocity.emplace_back(p->shape());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = state.velocity[i];
    expect_shape(v, params[i]->shape(), "sgd_step velocity");
    auto theta = params[i]->values();
    const auto g = grads[i]->values();
    auto vel = v.values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      vel[k] = state.momentum * vel[k] + g[k] + state.weight_decay * theta[k];
      theta[k] -= state.lr * vel[k];
    }
  }
}

void sgd_step(model::ModelParams& params, const model::ModelParams& grads, OptimState& state) {
  std::vector<Tensor*> p;
  std::vector<const Tensor*> g;
  for (auto& [name, t] : params.named()) p.push_back(t);
  for (const auto& [name, t] : grads.named()) g.push_back(t);
  sgd_step(p, g, state);
}

ImageLabels label_image(const AnnotatedImage& image, const streams::ActionCatalog& catalog, Real iou_threshold) {
  const auto& in = image.input;
  const std::size_t a_count = catalog.size();
  ImageLabels out;
  for (std::size_t i = 0; i < in.humans.size(); ++i) {
    Tensor free_labels({a_count});
    for (const auto& gt : image.ground_truth) {
      if (gt.object || gt.action >= a_count || catalog[gt.action].requires_object) continue;
      if (geometry::iou(in.humans[i].box, gt.human) >= iou_threshold) free_labels[gt.action] = 1.0;
    }
    out.human_object_free.push_back(std::move(free_labels));
    for (std::size_t j = 0; j < in.objects.size(); ++j) {
      TrainingExample e{i, j, in.humans[i], in.objects[j], Tensor({a_count}), false};
      for (const auto& gt : image.ground_truth) {
        if (!gt.object || gt.action >= a_count || !catalog[gt.action].requires_object) continue;
        if (geometry::iou(in.humans[i].box, gt.human) >= iou_threshold &&
            geometry::iou(in.objects[j].box, *gt.object) >= iou_threshold) {
          e.labels[gt.action] = 1.0;
          e.is_positive = true;
        }
      }
      (e.is_positive ? out.positives : out.negatives).push_back(std::move(e));
    }
  }
  return out;
}

Real image_loss(const model::ModelParams& params, const model::ModelDims& dims, const features::EmbeddingTable& table,
                const model::ImageInput& input, const std::vector<TrainingExample>& examples,
                const std::vector<Tensor>& human_object_free, const streams::ActionCatalog& catalog,
                const model::GraphOptions& options, model::ModelParams* grads) {
  model::ImageInput view = input;
  for (const auto& e : examples) {
    view.humans.at(e.human_index).box = e.human.box;
    view.objects.at(e.object_index).box = e.object.box;
  }
  model::ImageCache cache;
  const model::ImageScores scores =
      model::forward(params, dims, table, view, options, grads ? &cache : nullptr, nullptr);

  const std::vector<bool> with_object = object_mask(catalog, true);
  const std::vector<bool> object_free = object_mask(catalog, false);
  const std::size_t num_objects = view.objects.size();
  model::ScoreGrads sg;
  if (grads) {
    sg.human.resize(view.humans.size());
    sg.object.resize(view.objects.size());
    sg.spatial_human.resize(scores.spatial_human.size());
    sg.spatial_object.resize(scores.spatial_object.size());
  }
  auto accumulate = [](Tensor& into, Tensor g) {
    if (into.empty()) {
      into = std::move(g);
    } else {
      into.add_scaled(g);
    }
  };

  Real loss = 0;
  for (const auto& e : examples) {
    const std::size_t node = e.human_index * num_objects + e.object_index;
    StreamScores s{scores.human[e.human_index], scores.object[e.object_index],
                   scores.spatial_human.empty() ? Tensor() : scores.spatial_human[node],
                   scores.spatial_object.empty() ? Tensor() : scores.spatial_object[node]};
    loss += total_loss(s, e.labels, catalog, false);
    if (!grads) continue;
    accumulate(sg.human[e.human_index], multilabel_loss_grad(s.human, e.labels, &with_object));
    accumulate(sg.object[e.object_index], multilabel_loss_grad(s.object, e.labels, &with_object));
    if (!s.spatial_human.empty()) {
      accumulate(sg.spatial_human[node], multilabel_loss_grad(s.spatial_human, e.labels, &with_object));
    }
    if (!s.spatial_object.empty()) {
      accumulate(sg.spatial_object[node], multilabel_loss_grad(s.spatial_object, e.labels, &with_object));
    }
  }
  if (any(object_free)) {
    for (std::size_t i = 0; i < human_object_free.size() && i < view.humans.size(); ++i) {
      loss += multilabel_loss(scores.human[i], human_object_free[i], &object_free);
      if (grads) accumulate(sg.human[i], multilabel_loss_grad(scores.human[i], human_object_free[i], &object_free));
    }
  }
  if (grads) model::backward(cache, params, options, sg, *grads);
  return loss;
}

Real evaluate_loss(const std::vector<AnnotatedImage>& images, const model::ModelParams& params,
                   const model::ModelDims& dims, const features::EmbeddingTable& table,
                   const streams::ActionCatalog& catalog, const model::GraphOptions& options) {
  if (images.empty()) return std::numeric_limits<Real>::quiet_NaN();
  Real total = 0;
  for (const auto& img : images) {
    ImageLabels labels = label_image(img, catalog);
    std::vector<TrainingExample> all = std::move(labels.positives);
    all.insert(all.end(), labels.negatives.begin(), labels.negatives.end());
    total += image_loss(params, dims, table, img.input, all, labels.human_object_free, catalog, options, nullptr);
  }
  return total / static_cast<Real>(images.size());
}

TrainResult train(const std::vector<AnnotatedImage>& train_set, const std::vector<AnnotatedImage>& val_set,
                  const model::ModelDims& dims, const features::EmbeddingTable& table,
                  const streams::ActionCatalog& catalog, const TrainConfig& config, model::ModelParams init,
                  const EpochCallback& on_epoch) {
  if (catalog.size() != dims.num_actions) throw ConfigMismatchError("catalog size does not match model actions");
  TrainResult result;
  result.params = std::move(init);
  result.state.lr = config.lr;
  result.state.momentum = config.momentum;
  result.state.weight_decay = config.weight_decay;

  std::vector<ImageLabels> labels;
  labels.reserve(train_set.size());
  for (const auto& img : train_set) labels.push_back(label_image(img, catalog));

  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  model::ModelParams best = result.params;
  Real best_val = std::numeric_limits<Real>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<std::size_t>(rng.below(k))]);
    }
    Real epoch_loss = 0;
    for (std::size_t idx : order) {
      const ImageLabels& l = labels[idx];
      const std::vector<TrainingExample> batch = sample_batch(l.positives, l.negatives, rng, config.sampling);
      model::ModelParams grads = model::ModelParams::zeros(dims);
      const Real loss = image_loss(result.params, dims, table, train_set[idx].input, batch, l.human_object_free,
                                   catalog, config.graph, &grads);
      if (!std::isfinite(loss)) throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
      sgd_step(result.params, grads, result.state);
      epoch_loss += loss;
    }
    EpochRecord rec{epoch, train_set.empty() ? 0.0 : epoch_loss / static_cast<Real>(train_set.size()),
                    evaluate_loss(val_set, result.params, dims, table, catalog, config.graph)};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val_set.empty()) {
      best = result.params;
      result.best_epoch = epoch;
      continue;
    }
    if (!std::isfinite(rec.val_loss)) throw NumericError("validation loss is not finite");
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = result.params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.params = std::move(best);
  return result;
}

}  // namespace drg::training
