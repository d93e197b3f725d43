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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "drg/geometry.hpp"

namespace drg::eval {

inline constexpr Real kRoleIouThreshold = 0.5;

struct GroundTruthTriplet {
  std::string image_id;
  geometry::BBox human;
  std::size_t action = 0;
  std::optional<geometry::BBox> object;  // absent for actions without an object
};

struct PredictionTriplet {
  std::string image_id;
  geometry::BBox human;
  std::size_t action = 0;
  std::optional<geometry::BBox> object;
  Real score = 0;
};

struct MatchResult {
  // Predictions in ranked order: descending score, ties keep input order.
  std::vector<std::size_t> order;
  // true_positive[r] belongs to predictions[order[r]].
  std::vector<bool> true_positive;
  // Ground-truth index claimed by each ranked prediction, if any.
  std::vector<std::optional<std::size_t>> matched_gt;
};

// Greedy role matching. A prediction is a true positive iff an unclaimed
// ground truth with the same image and action has human IoU >= threshold and
// either object IoU >= threshold or no object on both sides. Among eligible
// ground truths the one with the highest min(human IoU, object IoU) wins,
// lower index on ties. Predictions are ranked internally.
MatchResult match(const std::vector<PredictionTriplet>& predictions, const std::vector<GroundTruthTriplet>& gts,
                  Real iou_threshold = kRoleIouThreshold);

// All-point interpolated AP for ranked TP/FP flags. Returns 0 (with a
// logged warning) when there are no ground truths.
Real average_precision(const std::vector<bool>& ranked_true_positive, std::size_t total_gt);

struct ActionAP {
  std::size_t action = 0;
  std::size_t num_gt = 0;
  std::size_t num_predictions = 0;
  std::optional<Real> ap;  // empty when the action has no ground truth
};

struct RoleMapReport {
  std::vector<ActionAP> per_action;
  Real mean_ap = 0;  // over actions with at least one ground truth
  std::size_t evaluated_actions = 0;
};

RoleMapReport role_map(const std::vector<PredictionTriplet>& predictions, const std::vector<GroundTruthTriplet>& gts,
                       std::size_t num_actions, Real iou_threshold = kRoleIouThreshold);

}  // namespace drg::eval
