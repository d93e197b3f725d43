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
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   drg_acceptance --cli build/tools/drg_hoi --workdir /tmp/drg_acceptance
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "drg/drg.hpp"
#include "drg/inference.hpp"
#include "drg/spatial_semantic.hpp"
#include "drg/training.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr Real kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60;
constexpr Real kOracleTolerance = 1e-10;
constexpr Real kAttentionSumTolerance = 1e-12;
constexpr Real kMapTolerance = 1e-12;
constexpr double kSynthMap = 0.95;
constexpr double kContextGap = 0.05;
constexpr double kTrainSeconds = 600;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(double v, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// BCE on the fused six-factor scores of every pair, backpropagated through
// fusion, heads, both DRG subgraphs and the spatial ConvNet.
Real fused_loss(const model::ModelParams& params, const drg::testing::TinyScene& s, const model::GraphOptions& options,
                model::ModelParams* grads) {
  const auto& in = s.image.input;
  const std::size_t H = in.humans.size(), O = in.objects.size(), A = s.catalog.size();
  std::map<std::pair<std::size_t, std::size_t>, Tensor> labels;
  for (const auto* group : {&s.labels.positives, &s.labels.negatives}) {
    for (const auto& e : *group) labels[{e.human_index, e.object_index}] = e.labels;
  }
  std::vector<bool> mask(A);
  for (std::size_t a = 0; a < A; ++a) mask[a] = s.catalog[a].requires_object;

  model::ImageCache cache;
  const auto scores = model::forward(params, s.dims, s.table, in, options, grads ? &cache : nullptr);
  model::ScoreGrads sg;
  sg.human.assign(H, Tensor({A}));
  sg.object.assign(O, Tensor({A}));
  sg.spatial_human.assign(H * O, Tensor({A}));
  sg.spatial_object.assign(H * O, Tensor({A}));
  Real loss = 0;
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < O; ++j) {
      const std::size_t t = i * O + j;
      const Tensor fused = streams::fuse(in.humans[i].score, in.objects[j].score, scores.human[i], scores.object[j],
                                         scores.spatial_human[t], scores.spatial_object[t], s.catalog);
      const Tensor& y = labels.at({i, j});
      loss += training::multilabel_loss(fused, y, &mask);
      if (!grads) continue;
      const auto fg = streams::fuse_backward(in.humans[i].score, in.objects[j].score, scores.human[i], scores.object[j],
                                             scores.spatial_human[t], scores.spatial_object[t], s.catalog,
                                             training::multilabel_loss_grad(fused, y, &mask));
      sg.human[i].add_scaled(fg.human_actions);
      sg.object[j].add_scaled(fg.object_actions);
      sg.spatial_human[t].add_scaled(fg.spatial_human_actions);
      sg.spatial_object[t].add_scaled(fg.spatial_object_actions);
    }
  }
  if (grads) model::backward(cache, params, options, sg, *grads);
  return loss;
}

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  const auto scene = drg::testing::tiny_scene(6);
  const model::ModelParams base = drg::testing::jittered_params(scene.dims, 3, 0.2);
  const model::GraphOptions options;  // 2 iterations, both subgraphs
  std::vector<training::TrainingExample> batch = scene.labels.positives;
  batch.insert(batch.end(), scene.labels.negatives.begin(), scene.labels.negatives.end());

  auto check = [&](const std::function<Real(const model::ModelParams&, model::ModelParams*)>& loss) {
    model::ModelParams grads = model::ModelParams::zeros(scene.dims);
    loss(base, &grads);
    return numkernel::finite_diff_check(
               [&](const Tensor& flat) {
                 model::ModelParams p = base;
                 p.assign_flat(flat);
                 return loss(p, nullptr);
               },
               [&](const Tensor&) { return grads.flatten(); }, base.flatten())
        .max_relative_error;
  };
  const Real stream_err = check([&](const model::ModelParams& p, model::ModelParams* g) {
    return training::image_loss(p, scene.dims, scene.table, scene.image.input, batch, scene.labels.human_object_free,
                                scene.catalog, options, g);
  });
  const Real fused_err =
      check([&](const model::ModelParams& p, model::ModelParams* g) { return fused_loss(p, scene, options, g); });
  const double elapsed = seconds_since(start);
  const Real worst = std::max(stream_err, fused_err);
  return {worst < kGradTolerance && elapsed < kGradSeconds,
          "max rel err " + fmt(worst) + " (stream sum " + fmt(stream_err) + ", fused " + fmt(fused_err) + ") < " +
              fmt(kGradTolerance) + ", " + fmt(elapsed, "%.2f") + " s < " + fmt(kGradSeconds, "%.0f") + " s, " +
              std::to_string(base.parameter_count()) + " parameters"};
}

Outcome aggregation_oracle() {
  Rng rng(2024);
  Real worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t H = 1 + rng.below(4), O = 1 + rng.below(4), d = 1 + rng.below(8), dk = 1 + rng.below(8);
    const auto f = drg::testing::random_nodes(H, O, d, rng);
    graph::SubgraphParams p = graph::SubgraphParams::random(d, dk, rng);
    p.ln_gain = drg::testing::random_tensor({d}, rng);
    p.ln_bias = drg::testing::random_tensor({d}, rng);
    const auto kind = trial % 2 ? graph::SubgraphKind::ObjectCentric : graph::SubgraphKind::HumanCentric;
    worst = std::max(
        worst, drg::testing::max_abs_diff(graph::aggregate_once(f, kind, p).values, oracle::aggregate(f, kind, p)));
  }
  return {worst <= kOracleTolerance, "200 graphs, max abs diff " + fmt(worst) + " <= " + fmt(kOracleTolerance)};
}

Outcome structural_invariants() {
  Rng rng(7);
  Real worst_sum = 0;
  std::size_t perm_fail = 0, empty_fail = 0, zero_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + rng.below(4), O = 1 + rng.below(4), d = 1 + rng.below(8);
    graph::DRGParams p{graph::SubgraphParams::random(d, 4, rng), graph::SubgraphParams::random(d, 4, rng)};
    graph::HOIGraph g{{}, {}, drg::testing::random_nodes(H, O, d, rng)};

    for (auto kind : {graph::SubgraphKind::HumanCentric, graph::SubgraphKind::ObjectCentric}) {
      std::vector<graph::AggregateCache> caches;
      graph::run_subgraph(g.nodes, kind, p.of(kind), 2, &caches);
      for (const auto& c : caches) {
        for (const auto& a : c.attention) {
          if (a.empty()) continue;
          const Real sum = std::accumulate(a.values().begin(), a.values().end(), Real{0});
          worst_sum = std::max(worst_sum, std::abs(sum - 1));
        }
      }
    }

    std::vector<std::size_t> ph(H), po(O);
    std::iota(ph.begin(), ph.end(), 0);
    std::iota(po.begin(), po.end(), 0);
    for (std::size_t k = H; k > 1; --k) std::swap(ph[k - 1], ph[rng.below(k)]);
    for (std::size_t k = O; k > 1; --k) std::swap(po[k - 1], po[rng.below(k)]);
    auto relabel = [&](const graph::NodeFeatures& f) {
      graph::NodeFeatures out{H, O, Tensor(f.values.shape())};
      for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < O; ++j) {
          const auto src = f.at(i, j);
          std::copy(src.begin(), src.end(), out.values.row(out.index(ph[i], po[j])).begin());
        }
      }
      return out;
    };
    const auto [h, o] = graph::run_drg(g, p, 2, 2);
    const auto [hp, op] = graph::run_drg({{}, {}, relabel(g.nodes)}, p, 2, 2);
    perm_fail += !(hp == relabel(h) && op == relabel(o));

    const graph::NodeFeatures single = drg::testing::random_nodes(1, O, d, rng);
    empty_fail += !(graph::run_subgraph(single, graph::SubgraphKind::ObjectCentric, p.object, 2) == single);
    const auto [h0, o0] = graph::run_drg(g, p, 0, 0);
    zero_fail += !(h0 == g.nodes && o0 == g.nodes);
  }
  const bool pass = worst_sum <= kAttentionSumTolerance && perm_fail == 0 && empty_fail == 0 && zero_fail == 0;
  return {pass, "100 graphs: |sum(alpha) - 1| max " + fmt(worst_sum) + " <= " + fmt(kAttentionSumTolerance) +
                    ", permutation mismatches " + std::to_string(perm_fail) + ", empty-neighborhood changes " +
                    std::to_string(empty_fail) + ", 0-iteration changes " + std::to_string(zero_fail)};
}

Outcome dimension_contract() {
  Rng rng(11);
  const features::SpatialConvConfig conv;
  const auto params = features::SpatialConvParams::random(conv, rng);
  const auto table = drg::testing::random_table(features::kEmbeddingDim, {"person", "cup", "baseball bat"}, rng);
  const geometry::Detection h{{40, 30, 210, 400}, "person", 0.9};
  std::size_t bad = 0, size = 0;
  for (const char* cat : {"cup", "baseball bat"}) {
    const geometry::Detection o{{180, 120, 260, 190}, cat, 0.7};
    const auto f = features::build_feature(h, o, table, params, conv);
    size = f.values.numel();
    const Tensor e = table.lookup(cat);
    const auto sem = f.semantic();
    bad += size != 5708 || f.spatial_dim != 5408 ||
           !std::equal(sem.begin(), sem.end(), e.values().begin(), e.values().end());
  }
  return {bad == 0, std::to_string(size) + " values (5408 spatial + 300 embedding), embedding slice " +
                        (bad == 0 ? "bit-identical" : "differs")};
}

Outcome evaluator_correctness() {
  using eval::GroundTruthTriplet;
  using eval::PredictionTriplet;
  std::vector<oracle::Fixture> suite;
  const geometry::BBox hb{0, 0, 10, 10}, ob{20, 20, 30, 30};
  const geometry::BBox h06{2.5, 0, 12.5, 10};
  const Real s = 10.0 * 0.6 / 1.4;
  const geometry::BBox o04{20 + s, 20, 30 + s, 30};
  // Hand cases: exact TP, duplicate FP, IoU 0.6 / 0.4 FP, [FP, TP], a 3-image mixture.
  suite.push_back({{{"x", hb, 0, ob, 0.9}}, {{"x", hb, 0, ob}}, 1});
  suite.push_back({{{"x", hb, 0, ob, 0.9}, {"x", hb, 0, ob, 0.5}}, {{"x", hb, 0, ob}}, 1});
  suite.push_back({{{"x", h06, 0, o04, 0.9}}, {{"x", hb, 0, ob}}, 1});
  suite.push_back({{{"y", hb, 0, ob, 0.9}, {"x", hb, 0, ob, 0.5}}, {{"x", hb, 0, ob}}, 1});
  suite.push_back({{{"a", hb, 0, ob, 0.9},
                    {"b", h06, 0, ob, 0.8},
                    {"c", hb, 1, std::nullopt, 0.7},
                    {"a", hb, 0, o04, 0.6},
                    {"c", h06, 1, std::nullopt, 0.6}},
                   {{"a", hb, 0, ob}, {"b", hb, 0, ob}, {"c", hb, 1, std::nullopt}, {"c", h06, 1, std::nullopt}},
                   2});
  Rng rng(99);
  while (suite.size() < 30) suite.push_back(oracle::random_fixture(rng));

  std::size_t mismatches = 0;
  Real worst = 0;
  for (const auto& f : suite) {
    for (std::size_t a = 0; a < f.num_actions; ++a) {
      std::vector<PredictionTriplet> pa;
      std::vector<GroundTruthTriplet> ga;
      for (const auto& p : f.predictions) {
        if (p.action == a) pa.push_back(p);
      }
      for (const auto& g : f.ground_truth) {
        if (g.action == a) ga.push_back(g);
      }
      const auto m = eval::match(pa, ga);
      const auto o = oracle::brute_force_match(pa, ga);
      mismatches += m.true_positive != o.true_positive || m.matched_gt != o.claimed;
    }
    const Real got = eval::role_map(f.predictions, f.ground_truth, f.num_actions).mean_ap;
    worst = std::max(worst, std::abs(got - oracle::role_map(f.predictions, f.ground_truth, f.num_actions)));
  }

  std::size_t variant = 0;
  Rng fuzz(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto f = oracle::random_fixture(fuzz);
    for (auto& p : f.predictions) p.score += fuzz.uniform(-0.05, 0.05);
    const auto before = eval::role_map(f.predictions, f.ground_truth, f.num_actions);
    const int kind = trial % 3;
    for (auto& p : f.predictions) {
      p.score = kind == 0 ? std::exp(4 * p.score) : kind == 1 ? 3 * p.score - 10 : std::atan(p.score) + p.score;
    }
    const auto after = eval::role_map(f.predictions, f.ground_truth, f.num_actions);
    for (std::size_t a = 0; a < f.num_actions; ++a) variant += before.per_action[a].ap != after.per_action[a].ap;
  }
  const bool pass = mismatches == 0 && worst <= kMapTolerance && variant == 0;
  return {pass, std::to_string(suite.size()) + " fixtures: match disagreements " + std::to_string(mismatches) +
                    ", max mAP diff " + fmt(worst) + "; 500 fuzzed monotone transforms, AP changes " +
                    std::to_string(variant)};
}

// Runs a shell command with single-threaded, quiet settings.
bool run(const std::string& cmd) {
  const std::string full = "DRG_WORKERS=1 DRG_LOG_LEVEL=error " + cmd;
  return std::system(full.c_str()) == 0;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double mean_ap(const fs::path& report) { return nlohmann::json::parse(slurp(report)).at("mean_ap").get<double>(); }

Outcome synthetic_end_to_end(const std::string& cli, const fs::path& dir) {
  const fs::path corpus = dir / "synth";
  if (!run(q(cli) + " gen-synth --seed 7 --output " + q(corpus))) return {false, "gen-synth failed"};
  const std::string data = " --config " + q(corpus / "config.json") + " --embeddings " + q(corpus / "embeddings.txt");
  const std::string train_files = " --detections " + q(corpus / "train/detections.json") + " --appearance " +
                                  q(corpus / "train/appearance.json") + " --annotations " +
                                  q(corpus / "train/annotations.json");
  const std::string test_files =
      " --detections " + q(corpus / "test/detections.json") + " --appearance " + q(corpus / "test/appearance.json");

  struct Variant {
    const char* name;
    const char* flags;
    double seconds = 0;
    double overall = 0;
    double context = 0;
  };
  Variant variants[] = {{"drg2", ""}, {"drg0", " --iters-human 0 --iters-object 0"}};
  for (auto& v : variants) {
    const fs::path ckpt = dir / (std::string(v.name) + ".ckpt");
    const fs::path preds = dir / (std::string(v.name) + ".pred.json");
    const auto start = Clock::now();
    if (!run(q(cli) + " train" + data + train_files + v.flags + " --output " + q(ckpt))) {
      return {false, std::string(v.name) + " training failed"};
    }
    v.seconds = seconds_since(start);
    if (!run(q(cli) + " infer" + data + test_files + v.flags + " --checkpoint " + q(ckpt) + " --output " + q(preds))) {
      return {false, std::string(v.name) + " inference failed"};
    }
    const fs::path all = dir / (std::string(v.name) + ".eval.json"), ctx = dir / (std::string(v.name) + ".ctx.json");
    const std::string eval = q(cli) + " eval --config " + q(corpus / "config.json") + " --predictions " + q(preds) +
                             " --annotations " + q(corpus / "test/annotations.json");
    if (!run(eval + " --output " + q(all) + " > /dev/null") ||
        !run(eval + " --tag context --output " + q(ctx) + " > /dev/null")) {
      return {false, std::string(v.name) + " evaluation failed"};
    }
    v.overall = mean_ap(all);
    v.context = mean_ap(ctx);
  }
  const auto& full = variants[0];
  const auto& base = variants[1];
  const double gap = full.context - base.context;
  const bool pass =
      full.overall >= kSynthMap && gap >= kContextGap && full.seconds < kTrainSeconds && base.seconds < kTrainSeconds;
  return {pass, "2-iteration mAP " + fmt(full.overall, "%.4f") + " >= " + fmt(kSynthMap, "%.2f") + "; context subset " +
                    fmt(full.context, "%.4f") + " vs 0-iteration " + fmt(base.context, "%.4f") + ", gap " +
                    fmt(100 * gap, "%.2f") + " >= " + fmt(100 * kContextGap, "%.0f") + " points; training " +
                    fmt(full.seconds, "%.1f") + " s / " + fmt(base.seconds, "%.1f") + " s < " +
                    fmt(kTrainSeconds, "%.0f") + " s"};
}

Outcome determinism(const std::string& cli, const fs::path& dir) {
  const fs::path corpus = dir / "small";
  if (!run(q(cli) + " gen-synth --seed 3 --train-images 24 --test-images 8 --output " + q(corpus))) {
    return {false, "gen-synth failed"};
  }
  const std::string data = " --config " + q(corpus / "config.json") + " --embeddings " + q(corpus / "embeddings.txt");
  std::vector<std::string> differing;
  auto twice = [&](const std::string& name, const std::function<std::string(const fs::path&)>& cmd,
                   const std::vector<std::string>& suffixes) {
    for (int k : {1, 2}) {
      const fs::path out = dir / (name + std::to_string(k));
      if (!run(cmd(out))) {
        differing.push_back(name + " (failed)");
        return;
      }
    }
    for (const auto& suffix : suffixes) {
      if (slurp(dir / (name + "1" + suffix)) != slurp(dir / (name + "2" + suffix))) differing.push_back(name + suffix);
    }
  };
  twice("train",
        [&](const fs::path& out) {
          return q(cli) + " train" + data + " --max-epochs 3 --detections " + q(corpus / "train/detections.json") +
                 " --appearance " + q(corpus / "train/appearance.json") + " --annotations " +
                 q(corpus / "train/annotations.json") + " --output " + q(out);
        },
        {"", ".loss.csv"});
  twice("features",
        [&](const fs::path& out) {
          return q(cli) + " featurize" + data + " --checkpoint " + q(dir / "train1") + " --detections " +
                 q(corpus / "test/detections.json") + " --output " + q(out);
        },
        {""});
  twice("pred",
        [&](const fs::path& out) {
          return q(cli) + " infer" + data + " --checkpoint " + q(dir / "train1") + " --detections " +
                 q(corpus / "test/detections.json") + " --appearance " + q(corpus / "test/appearance.json") +
                 " --features " + q(dir / "features1") + " --output " + q(out);
        },
        {""});
  std::string detail = "featurize, infer, train (checkpoint and loss log) repeated at DRG_WORKERS=1: ";
  if (differing.empty()) return {true, detail + "byte-identical"};
  for (const auto& d : differing) detail += d + " ";
  return {false, detail + "differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::string workdir = (fs::temp_directory_path() / "drg_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the drg_hoi executable")->required()->check(CLI::ExistingFile);
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::err);
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"aggregation oracle", aggregation_oracle},
      {"structural invariants", structural_invariants},
      {"dimension contract", dimension_contract},
      {"evaluator correctness", evaluator_correctness},
      {"synthetic end-to-end", [&] { return synthetic_end_to_end(cli, workdir); }},
      {"determinism", [&] { return determinism(cli, workdir); }},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", number, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
