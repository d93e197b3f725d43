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
#include "drg/evaluation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace drg::eval {

namespace {

// min(human IoU, object IoU) when the pair is eligible, nullopt otherwise.
std::optional<Real> pair_overlap(const PredictionTriplet& p, const GroundTruthTriplet& g, Real thresh) {
  if (p.image_id != g.image_id || p.action != g.action) return std::nullopt;
  if (p.object.has_value() != g.object.has_value()) return std::nullopt;
  const Real hi = geometry::iou(p.human, g.human);
  if (hi < thresh) return std::nullopt;
  if (!p.object) return hi;
  const Real oi = geometry::iou(*p.object, *g.object);
  if (oi < thresh) return std::nullopt;
  return std::min(hi, oi);
}

}  // namespace

MatchResult match(const std::vector<PredictionTriplet>& predictions, const std::vector<GroundTruthTriplet>& gts,
                  Real iou_threshold) {
  MatchResult r;
  r.order.resize(predictions.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return predictions[a].score > predictions[b].score; });
  std::vector<bool> claimed(gts.size(), false);
  r.true_positive.reserve(predictions.size());
  r.matched_gt.reserve(predictions.size());
  for (std::size_t idx : r.order) {
    std::optional<std::size_t> best;
    Real best_overlap = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      auto overlap = pair_overlap(predictions[idx], gts[g], iou_threshold);
      if (overlap && *overlap > best_overlap) {
        best_overlap = *overlap;
        best = g;
      }
    }
    if (best) claimed[*best] = true;
    r.true_positive.push_back(best.has_value());
    r.matched_gt.push_back(best);
  }
  return r;
}

Real average_precision(const std::vector<bool>& flags, std::size_t total_gt) {
  if (total_gt == 0) {
    spdlog::warn("average precision requested with no ground truth; reporting 0");
    return 0.0;
  }
  const std::size_t n = flags.size();
  std::vector<Real> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (flags[i]) ++tp;
    precision[i] = static_cast<Real>(tp) / static_cast<Real>(i + 1);
    recall[i] = static_cast<Real>(tp) / static_cast<Real>(total_gt);
  }
  // Precision envelope, non-increasing from the right.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  Real ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

RoleMapReport role_map(const std::vector<PredictionTriplet>& predictions, const std::vector<GroundTruthTriplet>& gts,
                       std::size_t num_actions, Real iou_threshold) {
  RoleMapReport report;
  std::vector<std::vector<PredictionTriplet>> preds_by_action(num_actions);
  std::vector<std::vector<GroundTruthTriplet>> gts_by_action(num_actions);
  for (const auto& p : predictions) {
    if (p.action < num_actions) preds_by_action[p.action].push_back(p);
  }
  for (const auto& g : gts) {
    if (g.action < num_actions) gts_by_action[g.action].push_back(g);
  }
  Real sum = 0;
  for (std::size_t a = 0; a < num_actions; ++a) {
    ActionAP entry{a, gts_by_action[a].size(), preds_by_action[a].size(), std::nullopt};
    if (entry.num_gt > 0) {
      const MatchResult m = match(preds_by_action[a], gts_by_action[a], iou_threshold);
      entry.ap = average_precision(m.true_positive, entry.num_gt);
      sum += *entry.ap;
      ++report.evaluated_actions;
    }
    report.per_action.push_back(entry);
  }
  report.mean_ap = report.evaluated_actions > 0 ? sum / static_cast<Real>(report.evaluated_actions) : 0.0;
  return report;
}

}  // namespace drg::eval
