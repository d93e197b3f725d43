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

// Reference implementations written directly from the definitions, with
// explicit loops and no shared code paths with the library kernels.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "drg/drg.hpp"
#include "drg/evaluation.hpp"
#include "drg/geometry.hpp"
#include "drg/rng.hpp"

namespace drg::oracle {

// x_c <- LayerNorm(x_c + relu(sum_m alpha_m W x_m)) with
// alpha = softmax_m((W_q x_m) . (W_k x_c) / sqrt(d_k)), node by node.
inline Tensor aggregate(const graph::NodeFeatures& f, graph::SubgraphKind kind, const graph::SubgraphParams& p,
                        Real eps = 1e-5) {
  const std::size_t H = f.num_humans, O = f.num_objects, d = f.dim(), dk = p.key_dim();
  Tensor out({H * O, d});
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < O; ++j) {
      const std::size_t c = i * O + j;
      std::vector<std::size_t> nb;
      if (kind == graph::SubgraphKind::HumanCentric) {
        for (std::size_t jj = 0; jj < O; ++jj) {
          if (jj != j) nb.push_back(i * O + jj);
        }
      } else {
        for (std::size_t ii = 0; ii < H; ++ii) {
          if (ii != i) nb.push_back(ii * O + j);
        }
      }
      if (nb.empty()) {
        for (std::size_t r = 0; r < d; ++r) out.at(c, r) = f.values.at(c, r);
        continue;
      }
      std::vector<Real> key(dk, 0.0);
      for (std::size_t a = 0; a < dk; ++a) {
        for (std::size_t b = 0; b < d; ++b) key[a] += p.key.at(a, b) * f.values.at(c, b);
      }
      std::vector<Real> logits;
      for (std::size_t m : nb) {
        Real u = 0;
        for (std::size_t a = 0; a < dk; ++a) {
          Real q = 0;
          for (std::size_t b = 0; b < d; ++b) q += p.query.at(a, b) * f.values.at(m, b);
          u += q * key[a];
        }
        logits.push_back(u / std::sqrt(static_cast<Real>(dk)));
      }
      const Real top = *std::max_element(logits.begin(), logits.end());
      Real z = 0;
      for (Real u : logits) z += std::exp(u - top);
      std::vector<Real> y(d);
      for (std::size_t r = 0; r < d; ++r) {
        Real msg = 0;
        for (std::size_t k = 0; k < nb.size(); ++k) {
          Real wx = 0;
          for (std::size_t b = 0; b < d; ++b) wx += p.value.at(r, b) * f.values.at(nb[k], b);
          msg += std::exp(logits[k] - top) / z * wx;
        }
        y[r] = f.values.at(c, r) + std::max<Real>(0, msg);
      }
      Real mean = 0;
      for (Real v : y) mean += v;
      mean /= static_cast<Real>(d);
      Real var = 0;
      for (Real v : y) var += (v - mean) * (v - mean);
      var /= static_cast<Real>(d);
      for (std::size_t r = 0; r < d; ++r) {
        out.at(c, r) = p.ln_gain[r] * (y[r] - mean) / std::sqrt(var + eps) + p.ln_bias[r];
      }
    }
  }
  return out;
}

inline std::vector<std::size_t> ranked(const std::vector<eval::PredictionTriplet>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

// min(human IoU, object IoU) if the prediction may claim the ground truth.
inline std::optional<Real> eligibility(const eval::PredictionTriplet& p, const eval::GroundTruthTriplet& g, Real t) {
  if (p.image_id != g.image_id || p.action != g.action) return std::nullopt;
  if (p.object.has_value() != g.object.has_value()) return std::nullopt;
  const Real h = geometry::iou(p.human, g.human);
  if (h < t) return std::nullopt;
  if (!p.object) return h;
  const Real o = geometry::iou(*p.object, *g.object);
  if (o < t) return std::nullopt;
  return std::min(h, o);
}

struct OracleMatch {
  std::vector<bool> true_positive;                  // ranked order
  std::vector<std::optional<std::size_t>> claimed;  // ranked order
};

// Enumerates every injective assignment of ranked predictions to eligible
// ground truths and keeps the lexicographically best one under the key
// sequence (matched, min IoU, -gt index) taken in rank order.
inline OracleMatch brute_force_match(const std::vector<eval::PredictionTriplet>& preds,
                                     const std::vector<eval::GroundTruthTriplet>& gts, Real t = 0.5) {
  const auto order = ranked(preds);
  using Key = std::tuple<int, Real, long>;
  std::vector<Key> best_keys, keys;
  std::vector<std::optional<std::size_t>> best_claim, claim(order.size());
  std::vector<bool> used(gts.size(), false);
  bool have_best = false;

  auto recurse = [&](auto&& self, std::size_t r) -> void {
    if (r == order.size()) {
      if (!have_best || keys > best_keys) {
        best_keys = keys;
        best_claim = claim;
        have_best = true;
      }
      return;
    }
    keys.emplace_back(0, 0.0, 0);
    claim[r] = std::nullopt;
    self(self, r + 1);
    keys.pop_back();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const auto q = eligibility(preds[order[r]], gts[g], t);
      if (!q) continue;
      used[g] = true;
      keys.emplace_back(1, *q, -static_cast<long>(g));
      claim[r] = g;
      self(self, r + 1);
      keys.pop_back();
      used[g] = false;
    }
    claim[r] = std::nullopt;
  };
  recurse(recurse, 0);

  OracleMatch out;
  out.claimed = best_claim;
  for (const auto& c : best_claim) out.true_positive.push_back(c.has_value());
  return out;
}

// Sum over true positives at rank k of max_{k' >= k} precision(k'), over G.
inline Real average_precision(const std::vector<bool>& flags, std::size_t total_gt) {
  if (total_gt == 0) return 0;
  std::vector<Real> precision(flags.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    tp += flags[k] ? 1 : 0;
    precision[k] = static_cast<Real>(tp) / static_cast<Real>(k + 1);
  }
  Real ap = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (!flags[k]) continue;
    Real best = 0;
    for (std::size_t k2 = k; k2 < flags.size(); ++k2) best = std::max(best, precision[k2]);
    ap += best;
  }
  return ap / static_cast<Real>(total_gt);
}

// Mean over actions with ground truth of the oracle AP.
inline Real role_map(const std::vector<eval::PredictionTriplet>& preds,
                     const std::vector<eval::GroundTruthTriplet>& gts, std::size_t num_actions, Real t = 0.5) {
  Real sum = 0;
  std::size_t counted = 0;
  for (std::size_t a = 0; a < num_actions; ++a) {
    std::vector<eval::PredictionTriplet> pa;
    std::vector<eval::GroundTruthTriplet> ga;
    for (const auto& p : preds) {
      if (p.action == a) pa.push_back(p);
    }
    for (const auto& g : gts) {
      if (g.action == a) ga.push_back(g);
    }
    if (ga.empty()) continue;
    sum += average_precision(brute_force_match(pa, ga, t).true_positive, ga.size());
    ++counted;
  }
  return counted ? sum / static_cast<Real>(counted) : 0;
}

struct Fixture {
  std::vector<eval::PredictionTriplet> predictions;
  std::vector<eval::GroundTruthTriplet> ground_truth;
  std::size_t num_actions = 2;
};

// Three images, two actions (action 1 object-free). Predictions are shifted
// copies of ground-truth boxes so IoUs land on both sides of 0.5; scores are
// drawn from a few levels to exercise ties. Sized for brute_force_match.
inline Fixture random_fixture(Rng& rng) {
  Fixture f;
  const char* images[] = {"a", "b", "c"};
  auto box = [&] {
    const Real x = rng.uniform(0, 60), y = rng.uniform(0, 60);
    return geometry::BBox{x, y, x + rng.uniform(10, 40), y + rng.uniform(10, 40)};
  };
  auto near = [&](const geometry::BBox& b) {
    const Real w = b.x2 - b.x1, h = b.y2 - b.y1;
    const Real dx = rng.uniform(-0.4, 0.4) * w, dy = rng.uniform(-0.4, 0.4) * h;
    return geometry::BBox{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
  };
  const std::size_t num_gt = 1 + rng.below(5);
  for (std::size_t k = 0; k < num_gt; ++k) {
    const std::size_t action = rng.below(2);
    f.ground_truth.push_back(
        {images[rng.below(3)], box(), action, action == 0 ? std::optional<geometry::BBox>(box()) : std::nullopt});
  }
  const std::size_t num_pred = rng.below(8);
  for (std::size_t k = 0; k < num_pred; ++k) {
    const auto& g = f.ground_truth[rng.below(f.ground_truth.size())];
    eval::PredictionTriplet p{g.image_id, near(g.human), g.action, std::nullopt,
                              static_cast<Real>(rng.below(4)) / 4 + 0.1};
    if (g.object) p.object = near(*g.object);
    if (rng.below(6) == 0) p.image_id = images[rng.below(3)];
    if (rng.below(6) == 0 && p.object) p.action = 1, p.object.reset();
    f.predictions.push_back(p);
  }
  return f;
}

}  // namespace drg::oracle
