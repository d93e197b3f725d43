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
#include "drg/data_files.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drg/config.hpp"
#include "drg/error.hpp"

namespace drg::pipeline {

using nlohmann::json;

namespace {

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

// Schema checks report a JSON path such as images[2].detections[0].score.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ParseError(source_, 0, path + ": " + what);
  }

  const json& member(const json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing '") + key + "'");
    return *it;
  }

  const json& array(const json& obj, const char* key, const std::string& path) const {
    const json& a = member(obj, key, path);
    if (!a.is_array()) fail(path + "." + key, "expected an array");
    return a;
  }

  std::string string(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  Real number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const Real x = v.get<Real>();
    if (!std::isfinite(x)) fail(path, "non-finite number");
    return x;
  }

  Real number(const json& obj, const char* key, const std::string& path) const {
    return number(member(obj, key, path), path + "." + key);
  }

  geometry::BBox box(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 4) fail(path, "expected [x1, y1, x2, y2]");
    geometry::BBox b{number(v[0], path), number(v[1], path), number(v[2], path), number(v[3], path)};
    if (!b.valid()) fail(path, "box must satisfy x2 > x1 and y2 > y1");
    return b;
  }

  void version(const json& root) const {
    if (!root.is_object()) fail("$", "expected an object");
    if (auto it = root.find("schema_version"); it != root.end()) {
      if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) fail("$.schema_version", "unsupported");
    }
  }

 private:
  std::string source_;
};

std::string at(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

json box_json(const geometry::BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line_of_byte(text, e.byte), e.what());
  }
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

void write_json(const std::string& path, const json& j, int indent) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(indent) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

DetectionFile detections_from_json(const json& j, const std::string& source) {
  Reader r(source);
  r.version(j);
  DetectionFile f;
  const json& images = r.array(j, "images", "$");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ip = at("images", i);
    const json& img = images[i];
    ImageDetections out;
    out.id = r.string(img, "id", ip);
    out.width = r.number(img, "width", ip);
    out.height = r.number(img, "height", ip);
    if (out.width <= 0 || out.height <= 0) r.fail(ip, "image extents must be positive");
    const json& dets = r.array(img, "detections", ip);
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const std::string dp = ip + "." + at("detections", k);
      geometry::Detection d;
      d.box = r.box(r.member(dets[k], "box", dp), dp + ".box");
      d.box = {std::clamp(d.box.x1, 0.0, out.width), std::clamp(d.box.y1, 0.0, out.height),
               std::clamp(d.box.x2, 0.0, out.width), std::clamp(d.box.y2, 0.0, out.height)};
      if (!d.box.valid()) r.fail(dp + ".box", "box is empty after clamping to the image");
      d.category = r.string(dets[k], "category", dp);
      if (d.category.empty()) r.fail(dp + ".category", "empty category");
      d.score = r.number(dets[k], "score", dp);
      if (d.score < 0 || d.score > 1) r.fail(dp + ".score", "score must lie in [0, 1]");
      out.detections.push_back(std::move(d));
    }
    f.images.push_back(std::move(out));
  }
  return f;
}

json detections_to_json(const DetectionFile& f) {
  json images = json::array();
  for (const auto& img : f.images) {
    json dets = json::array();
    for (const auto& d : img.detections) {
      dets.push_back({{"box", box_json(d.box)}, {"category", d.category}, {"score", d.score}});
    }
    images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}, {"detections", dets}});
  }
  return {{"schema_version", kSchemaVersion}, {"images", images}};
}

AppearanceFile appearance_from_json(const json& j, const std::string& source) {
  Reader r(source);
  r.version(j);
  AppearanceFile f;
  const json& dim = r.member(j, "dim", "$");
  if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0) r.fail("$.dim", "expected a positive integer");
  f.dim = dim.get<std::size_t>();
  const json& images = r.array(j, "images", "$");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ip = at("images", i);
    ImageAppearance out;
    out.id = r.string(images[i], "id", ip);
    const json& feats = r.array(images[i], "features", ip);
    for (std::size_t k = 0; k < feats.size(); ++k) {
      const std::string fp = ip + "." + at("features", k);
      const json& idx = r.member(feats[k], "detection", fp);
      if (!idx.is_number_unsigned()) r.fail(fp + ".detection", "expected a non-negative integer");
      const json& vals = r.array(feats[k], "values", fp);
      if (vals.size() != f.dim) r.fail(fp + ".values", "expected " + std::to_string(f.dim) + " values");
      std::vector<Real> v(vals.size());
      for (std::size_t c = 0; c < vals.size(); ++c) v[c] = r.number(vals[c], fp + ".values");
      out.features.emplace_back(idx.get<std::size_t>(), Tensor::vector(std::move(v)));
    }
    f.images.push_back(std::move(out));
  }
  return f;
}

json appearance_to_json(const AppearanceFile& f) {
  json images = json::array();
  for (const auto& img : f.images) {
    json feats = json::array();
    for (const auto& [idx, t] : img.features) feats.push_back({{"detection", idx}, {"values", t.storage()}});
    images.push_back({{"id", img.id}, {"features", feats}});
  }
  return {{"schema_version", kSchemaVersion}, {"dim", f.dim}, {"images", images}};
}

namespace {

template <typename Triplet>
void read_triplet_common(const Reader& r, const json& t, const std::string& tp, Triplet& out) {
  out.human = r.box(r.member(t, "human", tp), tp + ".human");
  out.action = r.string(t, "action", tp);
  const json& obj = r.member(t, "object", tp);
  if (!obj.is_null()) out.object = r.box(obj, tp + ".object");
  if (auto it = t.find("object_category"); it != t.end() && !it->is_null()) {
    if (!it->is_string()) r.fail(tp + ".object_category", "expected a string");
    out.object_category = it->get<std::string>();
  }
}

template <typename Triplet>
json triplet_common(const Triplet& t) {
  json j = {{"human", box_json(t.human)}, {"action", t.action}, {"object", t.object ? box_json(*t.object) : json()}};
  if (!t.object_category.empty()) j["object_category"] = t.object_category;
  return j;
}

}  // namespace

AnnotationFile annotations_from_json(const json& j, const std::string& source) {
  Reader r(source);
  r.version(j);
  AnnotationFile f;
  const json& images = r.array(j, "images", "$");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ip = at("images", i);
    ImageAnnotations out;
    out.id = r.string(images[i], "id", ip);
    if (auto it = images[i].find("tags"); it != images[i].end()) {
      if (!it->is_array()) r.fail(ip + ".tags", "expected an array");
      for (const auto& tag : *it) out.tags.push_back(tag.get<std::string>());
    }
    const json& trips = r.array(images[i], "triplets", ip);
    for (std::size_t k = 0; k < trips.size(); ++k) {
      AnnotatedTriplet t;
      read_triplet_common(r, trips[k], ip + "." + at("triplets", k), t);
      out.triplets.push_back(std::move(t));
    }
    f.images.push_back(std::move(out));
  }
  return f;
}

json annotations_to_json(const AnnotationFile& f) {
  json images = json::array();
  for (const auto& img : f.images) {
    json trips = json::array();
    for (const auto& t : img.triplets) trips.push_back(triplet_common(t));
    json entry = {{"id", img.id}, {"triplets", trips}};
    if (!img.tags.empty()) entry["tags"] = img.tags;
    images.push_back(std::move(entry));
  }
  return {{"schema_version", kSchemaVersion}, {"images", images}};
}

PredictionFile predictions_from_json(const json& j, const std::string& source) {
  Reader r(source);
  r.version(j);
  PredictionFile f;
  if (auto it = j.find("config_hash"); it != j.end() && it->is_string()) f.config_hash = it->get<std::string>();
  const json& images = r.array(j, "images", "$");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ip = at("images", i);
    ImagePredictions out;
    out.id = r.string(images[i], "id", ip);
    const json& preds = r.array(images[i], "predictions", ip);
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const std::string pp = ip + "." + at("predictions", k);
      PredictedTriplet p;
      read_triplet_common(r, preds[k], pp, p);
      p.score = r.number(preds[k], "score", pp);
      out.predictions.push_back(std::move(p));
    }
    f.images.push_back(std::move(out));
  }
  return f;
}

json predictions_to_json(const PredictionFile& f) {
  json images = json::array();
  for (const auto& img : f.images) {
    json preds = json::array();
    for (const auto& p : img.predictions) {
      json e = triplet_common(p);
      e["score"] = p.score;
      preds.push_back(std::move(e));
    }
    images.push_back({{"id", img.id}, {"predictions", preds}});
  }
  return {{"schema_version", kSchemaVersion}, {"config_hash", f.config_hash}, {"images", images}};
}

DetectionFile load_detections(const std::string& path) { return detections_from_json(read_json(path), path); }
AppearanceFile load_appearance(const std::string& path) { return appearance_from_json(read_json(path), path); }
AnnotationFile load_annotations(const std::string& path) { return annotations_from_json(read_json(path), path); }
PredictionFile load_predictions(const std::string& path) { return predictions_from_json(read_json(path), path); }

}  // namespace drg::pipeline
