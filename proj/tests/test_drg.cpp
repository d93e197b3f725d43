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
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "drg/drg.hpp"
#include "drg/error.hpp"
#include "drg/numkernel.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drg;
using namespace drg::graph;
using drg::testing::random_nodes;
using drg::testing::random_tensor;

namespace {

constexpr SubgraphKind kKinds[] = {SubgraphKind::HumanCentric, SubgraphKind::ObjectCentric};

geometry::Detection det(Real x, const char* category) { return {{x, 0, x + 10, 10}, category, 0.9}; }

SubgraphParams random_params(std::size_t d, std::size_t dk, Rng& rng) {
  SubgraphParams p = SubgraphParams::random(d, dk, rng);
  p.ln_gain = random_tensor({d}, rng);
  p.ln_bias = random_tensor({d}, rng);
  return p;
}

// Relabels humans by `ph` and objects by `po`: new node (ph[i], po[j]) holds old (i, j).
NodeFeatures relabel(const NodeFeatures& f, const std::vector<std::size_t>& ph, const std::vector<std::size_t>& po) {
  NodeFeatures out{f.num_humans, f.num_objects, Tensor(f.values.shape())};
  for (std::size_t i = 0; i < f.num_humans; ++i) {
    for (std::size_t j = 0; j < f.num_objects; ++j) {
      const auto src = f.values.row(f.index(i, j));
      std::copy(src.begin(), src.end(), out.values.row(out.index(ph[i], po[j])).begin());
    }
  }
  return out;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t k = n; k > 1; --k) std::swap(p[k - 1], p[rng.below(k)]);
  return p;
}

}  // namespace

TEST_CASE("build_graph pairs every human with every object") {
  const Featurizer f = [](const geometry::Detection& h, const geometry::Detection& o) {
    return Tensor::vector({h.box.x1, o.box.x1});
  };
  const auto g = build_graph({det(0, "person"), det(20, "person")}, {det(1, "cup"), det(2, "cup"), det(3, "cup")}, f);
  REQUIRE(g);
  CHECK(g->nodes.num_nodes() == 6);
  CHECK(g->nodes.at(1, 2)[0] == 20);
  CHECK(g->nodes.at(1, 2)[1] == 3);
  CHECK(!build_graph({}, {det(1, "cup")}, f));
  CHECK(!build_graph({det(0, "person")}, {}, f));
}

TEST_CASE("neighborhoods") {
  for (std::size_t node = 0; node < 3; ++node) {
    CHECK(neighbors(SubgraphKind::ObjectCentric, 1, 3, node).empty());
    CHECK(neighbors(SubgraphKind::HumanCentric, 1, 3, node).size() == 2);
    CHECK(neighbors(SubgraphKind::HumanCentric, 3, 1, node).empty());
  }
  // Never an edge between nodes sharing neither human nor object.
  const std::size_t H = 3, O = 4;
  for (std::size_t t = 0; t < H * O; ++t) {
    for (std::size_t m : neighbors(SubgraphKind::HumanCentric, H, O, t)) {
      CHECK(m / O == t / O);
      CHECK(m != t);
    }
    for (std::size_t m : neighbors(SubgraphKind::ObjectCentric, H, O, t)) {
      CHECK(m % O == t % O);
      CHECK(m != t);
    }
    CHECK(neighbors(SubgraphKind::HumanCentric, H, O, t).size() == O - 1);
    CHECK(neighbors(SubgraphKind::ObjectCentric, H, O, t).size() == H - 1);
  }
}

TEST_CASE("attention_weights examples") {
  Rng rng(1);
  const SubgraphParams p = random_params(4, 3, rng);
  const Tensor c = random_tensor({4}, rng), n1 = random_tensor({4}, rng);
  CHECK(attention_weights(c.values(), {n1.values()}, p) == Tensor::vector({1.0}));

  const Tensor a = attention_weights(c.values(), {n1.values(), n1.values(), n1.values()}, p);
  for (std::size_t m = 0; m < 3; ++m) CHECK(a[m] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  SubgraphParams s = SubgraphParams::zeros(1, 1);
  s.query = Tensor({1, 1}, {1});
  s.key = Tensor({1, 1}, {1});
  const Tensor one = Tensor::vector({1}), zero = Tensor::vector({0}), l4 = Tensor::vector({std::log(4.0)});
  const Tensor toy = attention_weights(one.values(), {zero.values(), l4.values()}, s);
  CHECK(toy[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(toy[1] == doctest::Approx(0.8).epsilon(1e-15));

  CHECK_THROWS_AS(attention_weights(c.values(), {}, p), DimensionError);
}

TEST_CASE("aggregate_once two-node toy") {
  SubgraphParams p = SubgraphParams::zeros(2, 1);
  p.value = Tensor({2, 2}, {1, 0, 0, 1});
  p.ln_gain = Tensor::filled({2}, 1.0);
  const NodeFeatures f{1, 2, Tensor({2, 2}, {1, -1, 2, 0})};
  const NodeFeatures out = aggregate_once(f, SubgraphKind::HumanCentric, p);
  CHECK(out.values.at(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(out.values.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("aggregate_once matches the per-node oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t H = 1 + rng.below(4), O = 1 + rng.below(4), d = 1 + rng.below(8), dk = 1 + rng.below(6);
    const NodeFeatures f = random_nodes(H, O, d, rng);
    const SubgraphParams p = random_params(d, dk, rng);
    for (SubgraphKind kind : kKinds) {
      const NodeFeatures out = aggregate_once(f, kind, p);
      CHECK(drg::testing::max_abs_diff(out.values, oracle::aggregate(f, kind, p)) <= 1e-10);
    }
  }
}

TEST_CASE("attention rows are distributions") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t H = 1 + rng.below(4), O = 1 + rng.below(4), d = 1 + rng.below(8);
    const SubgraphParams p = random_params(d, 3, rng);
    for (SubgraphKind kind : kKinds) {
      std::vector<AggregateCache> caches;
      run_subgraph(random_nodes(H, O, d, rng), kind, p, 3, &caches);
      for (const auto& c : caches) {
        for (const Tensor& a : c.attention) {
          if (a.empty()) continue;
          Real sum = 0;
          for (Real v : a.values()) {
            CHECK(v >= 0);
            sum += v;
          }
          CHECK(std::abs(sum - 1) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("empty neighborhoods leave features bitwise unchanged") {
  Rng rng(4);
  const SubgraphParams p = random_params(5, 3, rng);
  const NodeFeatures one_human = random_nodes(1, 4, 5, rng);
  CHECK(run_subgraph(one_human, SubgraphKind::ObjectCentric, p, 5) == one_human);
  const NodeFeatures one_object = random_nodes(3, 1, 5, rng);
  CHECK(run_subgraph(one_object, SubgraphKind::HumanCentric, p, 5) == one_object);
  CHECK(run_subgraph(one_human, SubgraphKind::HumanCentric, p, 1) != one_human);
}

TEST_CASE("run_drg iterations") {
  Rng rng(5);
  HOIGraph g{{}, {}, random_nodes(3, 2, 6, rng)};
  const DRGParams p{random_params(6, 4, rng), random_params(6, 4, rng)};
  const auto [h0, o0] = run_drg(g, p, 0, 0);
  CHECK(h0 == g.nodes);
  CHECK(o0 == g.nodes);
  CHECK(kDefaultIterations == 2);
  const auto [h2, o2] = run_drg(g, p, 2, 2);
  CHECK(h2 == run_subgraph(run_subgraph(g.nodes, SubgraphKind::HumanCentric, p.human, 1), SubgraphKind::HumanCentric,
                           p.human, 1));
  // The subgraphs share nothing, so running them in either order agrees.
  const NodeFeatures o_first = run_subgraph(g.nodes, SubgraphKind::ObjectCentric, p.object, 2);
  const NodeFeatures h_second = run_subgraph(g.nodes, SubgraphKind::HumanCentric, p.human, 2);
  CHECK(o_first == o2);
  CHECK(h_second == h2);
  CHECK_THROWS_AS(run_subgraph(g.nodes, SubgraphKind::HumanCentric, p.human, -1), Error);
}

TEST_CASE("run_drg is exactly permutation equivariant") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + rng.below(4), O = 1 + rng.below(4), d = 1 + rng.below(8);
    const DRGParams p{random_params(d, 3, rng), random_params(d, 3, rng)};
    HOIGraph g{{}, {}, random_nodes(H, O, d, rng)};
    const auto ph = shuffled(H, rng), po = shuffled(O, rng);
    HOIGraph moved{{}, {}, relabel(g.nodes, ph, po)};
    const auto [h, o] = run_drg(g, p, 2, 2);
    const auto [hm, om] = run_drg(moved, p, 2, 2);
    CHECK(hm == relabel(h, ph, po));
    CHECK(om == relabel(o, ph, po));
  }
}

TEST_CASE("aggregation backward matches finite differences") {
  Rng rng(7);
  const std::size_t d = 6, dk = 4;
  for (SubgraphKind kind : kKinds) {
    const NodeFeatures f = random_nodes(3, 3, d, rng);
    const SubgraphParams p = random_params(d, dk, rng);
    const Tensor w = random_tensor({9, d}, rng);
    auto loss = [&](const NodeFeatures& x, const SubgraphParams& q) {
      const NodeFeatures y = run_subgraph(x, kind, q, 2);
      Real s = 0;
      for (std::size_t i = 0; i < w.numel(); ++i) s += w[i] * y.values[i];
      return s;
    };
    std::vector<AggregateCache> caches;
    run_subgraph(f, kind, p, 2, &caches);
    const AggregateGrads g = run_subgraph_backward(caches, kind, p, w);

    auto r = numkernel::finite_diff_check([&](const Tensor& t) { return loss({3, 3, t}, p); },
                                          [&](const Tensor&) { return g.input; }, f.values);
    CHECK(r.max_relative_error < 1e-4);
    auto check_param = [&](Tensor SubgraphParams::* member, const Tensor& grad) {
      auto report = numkernel::finite_diff_check(
          [&](const Tensor& t) {
            SubgraphParams q = p;
            q.*member = t;
            return loss(f, q);
          },
          [&](const Tensor&) { return grad; }, p.*member);
      CHECK(report.max_relative_error < 1e-4);
    };
    check_param(&SubgraphParams::value, g.params.value);
    check_param(&SubgraphParams::query, g.params.query);
    check_param(&SubgraphParams::key, g.params.key);
    check_param(&SubgraphParams::ln_gain, g.params.ln_gain);
    check_param(&SubgraphParams::ln_bias, g.params.ln_bias);
  }
}

TEST_CASE("dimension checks") {
  Rng rng(8);
  const SubgraphParams p = random_params(4, 2, rng);
  CHECK_THROWS_AS(aggregate_once(random_nodes(2, 2, 5, rng), SubgraphKind::HumanCentric, p), DimensionError);
}
