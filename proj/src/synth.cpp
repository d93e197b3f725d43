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
#include "drg/synth.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "drg/error.hpp"
#include "drg/rng.hpp"

namespace drg::synth {

namespace {

using geometry::BBox;
using geometry::Detection;
using pipeline::AnnotatedTriplet;

struct Zone {
  double u0, u1, v0, v1;
  bool contains(double u, double v, double margin = 0) const {
    return u >= u0 - margin && u <= u1 + margin && v >= v0 - margin && v <= v1 + margin;
  }
};

constexpr Zone kHoldZone{0.75, 1.15, 0.35, 0.65};
constexpr Zone kReadZone{0.25, 0.65, 0.10, 0.35};
constexpr Zone kSitZone{0.30, 0.70, 0.65, 1.00};
constexpr Zone kKickZone{0.90, 1.35, 0.85, 1.10};
constexpr Zone kHitZone{1.20, 1.70, 0.05, 0.45};
constexpr Zone kAllZones[] = {kHoldZone, kReadZone, kSitZone, kKickZone, kHitZone};

constexpr double kDistractorMargin = 0.12;

enum Action : std::size_t { kHold, kRead, kSitOn, kKick, kHit, kWalk };

// Object sizes as (width, height) fractions of the human height.
std::pair<double, double> object_size(const std::string& category) {
  if (category == "cup") return {0.12, 0.12};
  if (category == "book") return {0.18, 0.14};
  if (category == "racket") return {0.18, 0.30};
  if (category == "ball") return {0.14, 0.14};
  if (category == "chair") return {0.45, 0.45};
  if (category == "plant") return {0.25, 0.45};
  return {0.3, 0.9};
}

std::pair<double, double> relative_center(const BBox& human, const BBox& object) {
  const double cx = 0.5 * (object.x1 + object.x2);
  const double cy = 0.5 * (object.y1 + object.y2);
  return {(cx - human.x1) / human.width(), (cy - human.y1) / human.height()};
}

bool holds(const BBox& human, const Detection& object, const std::string& category) {
  if (object.category != category) return false;
  auto [u, v] = relative_center(human, object.box);
  return kHoldZone.contains(u, v);
}

// Integer box of the given category centered at zone-relative (u, v).
BBox place(const BBox& human, const std::string& category, double u, double v) {
  const auto [fw, fh] = object_size(category);
  const double w = std::max(4.0, std::round(fw * human.height()));
  const double h = std::max(4.0, std::round(fh * human.height()));
  const double cx = human.x1 + u * human.width();
  const double cy = human.y1 + v * human.height();
  const double x1 = std::round(cx - 0.5 * w);
  const double y1 = std::round(cy - 0.5 * h);
  return {x1, y1, x1 + w, y1 + h};
}

// Interior point of a zone, keeping 20% of each extent as margin.
std::pair<double, double> zone_point(const Zone& z, Rng& rng) {
  const double du = 0.2 * (z.u1 - z.u0);
  const double dv = 0.2 * (z.v1 - z.v0);
  return {rng.uniform(z.u0 + du, z.u1 - du), rng.uniform(z.v0 + dv, z.v1 - dv)};
}

class SceneBuilder {
 public:
  SceneBuilder(const SynthConfig& config, Rng& rng) : config_(config), rng_(rng) {}

  bool inside_image(const BBox& b) const {
    return b.x1 >= 0 && b.y1 >= 0 && b.x2 <= config_.width && b.y2 <= config_.height;
  }

  std::size_t add_human(const BBox& box, bool walking) {
    detections_.push_back({box, "person", rng_.uniform(0.85, 1.0)});
    walking_.push_back(walking);
    humans_.push_back(box);
    return detections_.size() - 1;
  }

  bool add_object(const BBox& box, const std::string& category) {
    if (!inside_image(box)) return false;
    detections_.push_back({box, category, rng_.uniform(0.6, 1.0)});
    walking_.push_back(false);
    return true;
  }

  // Places an object in `zone` of `human`, clear of every other human's zones.
  void add_in_zone(const BBox& human, const Zone& zone, const std::string& category) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      auto [u, v] = zone_point(zone, rng_);
      const BBox box = place(human, category, u, v);
      if (clear_of_zones(box, &human) && add_object(box, category)) return;
    }
  }

  void add_distractor(const std::string& category) {
    const auto [fw, fh] = object_size(category);
    const double w = std::round(fw * 200), h = std::round(fh * 200);
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double x1 = std::round(rng_.uniform(0, config_.width - w));
      const double y1 = std::round(rng_.uniform(0, config_.height - h));
      const BBox box{x1, y1, x1 + w, y1 + h};
      if (clear_of_zones(box, nullptr) && add_object(box, category)) return;
    }
  }

  void add_junk() {
    const std::string& category = kCategories[rng_.below(kCategories.size())];
    const double x1 = std::round(rng_.uniform(0, config_.width - 60));
    const double y1 = std::round(rng_.uniform(0, config_.height - 60));
    const double w = std::round(rng_.uniform(10, 60)), h = std::round(rng_.uniform(10, 60));
    detections_.push_back({{x1, y1, x1 + w, y1 + h}, category, rng_.uniform(0.01, 0.09)});
    walking_.push_back(false);
  }

  pipeline::ImageDetections detections(const std::string& id) const {
    return {id, config_.width, config_.height, detections_};
  }

  pipeline::ImageAppearance appearance(const std::string& id) {
    pipeline::ImageAppearance out{id, {}};
    for (std::size_t k = 0; k < detections_.size(); ++k) {
      std::vector<Real> v(config_.appearance_dim);
      for (auto& x : v) x = 0.1 * std::round(3.0 * rng_.normal()) / 3.0;
      v[0] = walking_[k] ? 1.0 : 0.0;
      for (std::size_t c = 0; c < kCategories.size(); ++c) {
        if (kCategories[c] == detections_[k].category && 1 + c < v.size()) v[1 + c] += 1.0;
      }
      out.features.emplace_back(k, Tensor::vector(std::move(v)));
    }
    return out;
  }

 private:
  // True if the box center lies outside every zone (with margin) of every
  // human other than `owner`.
  bool clear_of_zones(const BBox& box, const BBox* owner) const {
    for (const BBox& h : humans_) {
      if (owner && h == *owner) continue;
      auto [u, v] = relative_center(h, box);
      for (const Zone& z : kAllZones) {
        if (z.contains(u, v, kDistractorMargin)) return false;
      }
    }
    return true;
  }

  const SynthConfig& config_;
  Rng& rng_;
  std::vector<Detection> detections_;
  std::vector<bool> walking_;
  std::vector<BBox> humans_;
};

BBox random_human(Rng& rng, double x_lo, double x_hi) {
  const double w = 80 + static_cast<double>(rng.below(21));
  const double h = 180 + static_cast<double>(rng.below(51));
  const double x1 = std::round(rng.uniform(x_lo, x_hi));
  const double y1 = std::round(rng.uniform(20, 180));
  return {x1, y1, x1 + w, y1 + h};
}

void populate_human(SceneBuilder& scene, const BBox& human, Rng& rng) {
  const double hand = rng.uniform();
  std::optional<std::string> held;
  if (hand < 0.25) {
    held = "cup";
  } else if (hand < 0.45) {
    held = "book";
  } else if (hand < 0.7) {
    held = "racket";
  }
  if (held) scene.add_in_zone(human, kHoldZone, *held);
  if (rng.uniform() < 0.3) scene.add_in_zone(human, kReadZone, "book");
  if (rng.uniform() < 0.3) scene.add_in_zone(human, kSitZone, "chair");
  if (rng.uniform() < 0.3) scene.add_in_zone(human, kKickZone, "ball");
  const double hit_rate = held == "racket" ? 0.6 : 0.25;
  if (rng.uniform() < hit_rate) scene.add_in_zone(human, kHitZone, "ball");
}

void regular_scene(SceneBuilder& scene, Rng& rng) {
  const std::size_t count = 1 + rng.below(2);
  std::vector<BBox> humans;
  if (count == 1) {
    humans.push_back(random_human(rng, 10, 250));
  } else {
    humans.push_back(random_human(rng, 10, 50));
    humans.push_back(random_human(rng, 330, 370));
  }
  for (const BBox& h : humans) scene.add_human(h, rng.uniform() < 0.4);
  for (const BBox& h : humans) populate_human(scene, h, rng);
  const std::size_t distractors = rng.below(3);
  for (std::size_t k = 0; k < distractors; ++k) scene.add_distractor(rng.uniform() < 0.5 ? "plant" : "chair");
}

void context_scene(SceneBuilder& scene, Rng& rng) {
  const double w = 80 + static_cast<double>(rng.below(21));
  const double h = 180 + static_cast<double>(rng.below(51));
  const double xa = 10 + static_cast<double>(rng.below(31));
  const double xb = xa + 310 + static_cast<double>(rng.below(21));
  const double ya = 20 + static_cast<double>(rng.below(161));
  const double yb = 20 + static_cast<double>(rng.below(161));
  const BBox humans[2] = {{xa, ya, xa + w, ya + h}, {xb, yb, xb + w, yb + h}};
  for (const BBox& b : humans) scene.add_human(b, rng.uniform() < 0.4);

  // The same integer ball offset for both humans.
  auto [u, v] = zone_point(kHitZone, rng);
  const BBox ref = place(humans[0], "ball", u, v);
  const std::size_t racket_owner = rng.below(2);
  for (std::size_t k = 0; k < 2; ++k) {
    const double dx = humans[k].x1 - humans[0].x1, dy = humans[k].y1 - humans[0].y1;
    scene.add_object({ref.x1 + dx, ref.y1 + dy, ref.x2 + dx, ref.y2 + dy}, "ball");
    scene.add_in_zone(humans[k], kHoldZone, k == racket_owner ? "racket" : "cup");
  }
}

SynthSplit generate_split(const SynthConfig& config, std::size_t count, const std::string& prefix, Rng& rng,
                          const pipeline::RunConfig& run) {
  SynthSplit split;
  split.appearance.dim = config.appearance_dim;
  const auto contexts = static_cast<std::size_t>(std::round(config.context_fraction * static_cast<double>(count)));
  for (std::size_t n = 0; n < count; ++n) {
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04zu", prefix.c_str(), n);
    SceneBuilder scene(config, rng);
    // Context scenes are spread evenly through the split.
    const bool is_context = contexts > 0 && (n * contexts) / count != ((n + 1) * contexts) / count;
    if (is_context) {
      context_scene(scene, rng);
    } else {
      regular_scene(scene, rng);
    }
    const std::size_t junk = rng.below(3);
    for (std::size_t k = 0; k < junk; ++k) scene.add_junk();

    pipeline::ImageDetections dets = scene.detections(id);
    pipeline::ImageAppearance app = scene.appearance(id);
    pipeline::ImageAnnotations ann{id, {}, label_scene(dets, app, run)};
    if (is_context) ann.tags.push_back("context");
    split.detections.images.push_back(std::move(dets));
    split.appearance.images.push_back(std::move(app));
    split.annotations.images.push_back(std::move(ann));
  }
  return split;
}

std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

streams::ActionCatalog catalog() {
  return streams::ActionCatalog(
      {{"hold", true}, {"read", true}, {"sit_on", true}, {"kick", true}, {"hit", true}, {"walk", false}});
}

pipeline::RunConfig run_config(const SynthConfig& config) {
  pipeline::RunConfig run;
  run.profile = pipeline::DatasetProfile::named("synthetic");
  run.profile.catalog = catalog();
  run.dims.spatial = {24, 8, 8, 5, 3};
  run.dims.embed_dim = config.embed_dim;
  run.dims.key_dim = 32;
  run.dims.appearance_dim = config.appearance_dim;
  run.dims.hidden_dim = 32;
  run.seed = config.seed;
  run.validate();
  return run;
}

std::vector<AnnotatedTriplet> label_scene(const pipeline::ImageDetections& detections,
                                          const pipeline::ImageAppearance& appearance,
                                          const pipeline::RunConfig& config) {
  const auto& profile = config.profile;
  std::vector<std::size_t> humans, objects;
  for (std::size_t k = 0; k < detections.detections.size(); ++k) {
    const Detection& d = detections.detections[k];
    if (d.category == profile.human_category && d.score > profile.human_threshold) humans.push_back(k);
    if (d.score > profile.object_threshold) objects.push_back(k);
  }
  auto walking = [&](std::size_t k) {
    for (const auto& [idx, values] : appearance.features) {
      if (idx == k) return values[0] > 0.5;
    }
    return false;
  };

  std::vector<AnnotatedTriplet> out;
  for (std::size_t hi : humans) {
    const BBox& h = detections.detections[hi].box;
    bool has_racket = false;
    for (std::size_t oi : objects) has_racket = has_racket || holds(h, detections.detections[oi], "racket");
    for (std::size_t a = kHold; a <= kHit; ++a) {
      for (std::size_t oi : objects) {
        if (oi == hi) continue;
        const Detection& o = detections.detections[oi];
        auto [u, v] = relative_center(h, o.box);
        bool label = false;
        switch (a) {
          case kHold:
            label = (o.category == "cup" || o.category == "book" || o.category == "racket") && kHoldZone.contains(u, v);
            break;
          case kRead:
            label = o.category == "book" && kReadZone.contains(u, v);
            break;
          case kSitOn:
            label = o.category == "chair" && kSitZone.contains(u, v);
            break;
          case kKick:
            label = o.category == "ball" && kKickZone.contains(u, v);
            break;
          case kHit:
            label = o.category == "ball" && kHitZone.contains(u, v) && has_racket;
            break;
          default:
            break;
        }
        if (label) out.push_back({h, catalog()[a].name, o.box, o.category});
      }
    }
    if (walking(hi)) out.push_back({h, catalog()[kWalk].name, std::nullopt, ""});
  }
  return out;
}

SynthCorpus generate(const SynthConfig& config) {
  SynthCorpus corpus;
  corpus.config = run_config(config);
  Rng rng(config.seed);
  for (const std::string& category : kCategories) {
    std::vector<Real> v(config.embed_dim);
    for (auto& x : v) x = std::round(1000.0 * rng.normal()) / 1000.0;
    corpus.embeddings.emplace_back(category, Tensor::vector(std::move(v)));
  }
  corpus.train = generate_split(config, config.train_images, "train", rng, corpus.config);
  corpus.test = generate_split(config, config.test_images, "test", rng, corpus.config);
  return corpus;
}

std::string embeddings_text(const SynthCorpus& corpus) {
  std::string out;
  for (const auto& [category, vec] : corpus.embeddings) {
    out += category;
    for (Real x : vec.values()) out += ' ' + format_real(x);
    out += '\n';
  }
  return out;
}

void write_corpus(const SynthCorpus& corpus, const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path root(directory);
  fs::create_directories(root);
  pipeline::write_json((root / "config.json").string(), corpus.config.to_json());
  {
    std::ofstream out(root / "embeddings.txt", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write embeddings to '" + directory + "'");
    out << embeddings_text(corpus);
  }
  for (const auto& [name, split] : {std::pair{"train", &corpus.train}, std::pair{"test", &corpus.test}}) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    pipeline::write_json((dir / "detections.json").string(), pipeline::detections_to_json(split->detections), -1);
    pipeline::write_json((dir / "appearance.json").string(), pipeline::appearance_to_json(split->appearance), -1);
    pipeline::write_json((dir / "annotations.json").string(), pipeline::annotations_to_json(split->annotations), -1);
  }
}

}  // namespace drg::synth
