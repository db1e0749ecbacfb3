/**
 * Copyright 2026 The nextcell Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nextcell/error.hpp"
#include "nextcell/graph.hpp"
#include "support.hpp"

using namespace nextcell;

namespace {

// Dense D^-1/2 (A + I) D^-1/2 computed entry by entry.
std::vector<std::vector<double>> dense_normalized(std::size_t n, const std::vector<NodePair>& edges) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges) a[e.src][e.dst] = a[e.dst][e.src] = 1.0;
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i]) * std::sqrt(deg[j]);
  return a;
}

}  // namespace

TEST_CASE("homogenize places UEs first, then cells") {
  std::vector<RawNode> ues, cells;
  for (int i = 0; i < 70; ++i) ues.push_back({1000 + i, {0.5}});
  for (int i = 0; i < 31; ++i) cells.push_back({i, {0.25}});
  std::vector<RawEdge> edges;
  for (int i = 0; i < 70; ++i) edges.push_back({i, 1000 + i, i % 31, {0.1}, std::nullopt});
  const auto g = homogenize(ues, cells, edges);
  CHECK(g.num_nodes() == 101);
  CHECK(g.num_ues() == 70);
  CHECK(g.num_cells() == 31);
  CHECK(g.node(0).raw_id == 1000);
  CHECK(g.node(70).kind == NodeKind::Cell);
  CHECK(g.find_node(NodeKind::Cell, 30) == std::optional<std::size_t>(100));
  CHECK(connected_components(g) >= 1);
}

TEST_CASE("homogenize with no edges gives zero density") {
  std::vector<RawNode> ues{{0, {0.1}}, {1, {0.2}}}, cells{{0, {0.3}}};
  const auto g = homogenize(ues, cells, {});
  CHECK(g.num_edges() == 0);
  CHECK(density(g) == 0.0);
}

TEST_CASE("homogenize zero-pads to the wider kind") {
  std::vector<RawNode> ues{{0, {1, 2, 3}}, {1, {4, 5, 6}}}, cells{{0, {1, 1, 1, 1, 1}}};
  const auto g = homogenize(ues, cells, std::vector<RawEdge>{{0, 0, 0, {}, std::nullopt}});
  REQUIRE(g.node_feature_width() == 5);
  for (const auto& n : g.nodes()) CHECK(n.features.size() == 5);
  CHECK(g.node(0).features == std::vector<double>{1, 2, 3, 0, 0});
  CHECK(g.node(1).features == std::vector<double>{4, 5, 6, 0, 0});
}

TEST_CASE("homogenize rejects dangling references and repeated ids") {
  std::vector<RawNode> ues{{0, {}}}, cells{{5, {}}};
  try {
    homogenize(ues, cells, std::vector<RawEdge>{{0, 0, 77, {}, std::nullopt}});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("77") != std::string::npos);
  }
  CHECK_THROWS_AS(homogenize(ues, cells, std::vector<RawEdge>{{0, 9, 5, {}, std::nullopt}}), DataError);
  std::vector<RawNode> twice{{0, {}}, {0, {}}};
  CHECK_THROWS_AS(homogenize(twice, cells, {}), DataError);
}

TEST_CASE("dedup keeps the lowest edge id and survivor order") {
  std::vector<EdgeRecord> edges{{7, 0, 2, {}, {}}, {3, 0, 2, {}, {}}, {4, 1, 2, {}, {}}, {9, 0, 2, {}, {}}};
  const auto out = dedup_edges(edges);
  REQUIRE(out.size() == 2);
  CHECK(out[0].edge_id == 3);
  CHECK(out[1].edge_id == 4);
  CHECK(dedup_edges(out).size() == out.size());
  const auto again = dedup_edges(out);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].edge_id == out[i].edge_id);
}

TEST_CASE("dedup leaves unique pairs untouched") {
  std::vector<EdgeRecord> edges{{5, 0, 3, {}, {}}, {1, 1, 3, {}, {}}, {2, 0, 4, {}, {}}};
  const auto out = dedup_edges(edges);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i].edge_id == edges[i].edge_id);
}

TEST_CASE("density follows the undirected simple-graph formula") {
  const auto g = testing::bipartite(1, 1, {{0, 0}});
  CHECK(density(g) == doctest::Approx(1.0));
  const auto r = testing::ring(6, 3);
  CHECK(density(r) == doctest::Approx(static_cast<double>(r.num_edges()) / (9.0 * 8.0 / 2.0)));
  std::vector<RawNode> one{{0, {}}};
  CHECK_THROWS_AS(density(homogenize(one, {}, {})), DataError);
}

TEST_CASE("density is invariant under reindexing") {
  std::vector<std::pair<std::int64_t, std::int64_t>> links{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {3, 2}};
  auto reversed = links;
  std::reverse(reversed.begin(), reversed.end());
  for (auto& l : reversed) l.first = 3 - l.first;
  CHECK(density(testing::bipartite(4, 3, links)) == density(testing::bipartite(4, 3, reversed)));
}

TEST_CASE("normalized adjacency of tiny graphs") {
  const auto single = normalized_adjacency(1, {});
  CHECK(single.to_dense() == Tensor(1, 1, 1.0));
  const std::vector<NodePair> one_edge{{0, 1}};
  const auto two = normalized_adjacency(2, one_edge).to_dense();
  for (double v : two.data()) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("normalized adjacency of a 3-node path matches the dense oracle") {
  const std::vector<NodePair> path{{0, 1}, {1, 2}};
  const auto oracle = dense_normalized(3, path);
  const auto a = normalized_adjacency(3, path).to_dense();
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0, oracle_row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(a(i, j) == doctest::Approx(oracle[i][j]).epsilon(1e-14));
      row += a(i, j);
      oracle_row += oracle[i][j];
    }
    CHECK(row == doctest::Approx(oracle_row).epsilon(1e-14));
  }
  // Outer rows: 1/2 + 1/sqrt(6).
  CHECK(a(0, 0) + a(0, 1) == doctest::Approx(0.9082).epsilon(1e-4));
}

TEST_CASE("normalized adjacency is symmetric with entries in (0, 1]") {
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::int64_t, std::int64_t>> links;
  for (int u = 0; u < 12; ++u)
    for (int c = 0; c < 5; ++c)
      if (rng() % 3 == 0) links.emplace_back(u, c);
  const auto g = testing::bipartite(12, 5, links);
  const auto a = normalized_adjacency(g).to_dense();
  const auto oracle = dense_normalized(g.num_nodes(), g.edge_pairs());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    CHECK(a(i, i) > 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      CHECK(std::abs(a(i, j) - a(j, i)) <= 1e-12);
      CHECK(a(i, j) <= 1.0);
      CHECK(a(i, j) == doctest::Approx(oracle[i][j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("graph construction enforces its invariants") {
  std::vector<NodeRecord> nodes{{0, NodeKind::UE, 0, {0.0}}, {1, NodeKind::Cell, 0, {0.0}}};
  CHECK_NOTHROW(AttributedGraph(nodes, {{0, 0, 1, {}, {}}}));
  CHECK_THROWS_AS(AttributedGraph(nodes, {{0, 1, 0, {}, {}}}), DataError);
  CHECK_THROWS_AS(AttributedGraph(nodes, {{0, 0, 1, {}, {}}, {1, 0, 1, {}, {}}}), DataError);
  CHECK_THROWS_AS(AttributedGraph(nodes, {{0, 0, 0, {}, {}}}), DataError);
  auto bad = nodes;
  bad[1].features[0] = std::nan("");
  CHECK_THROWS_AS(AttributedGraph(bad, {}), DataError);
  auto gap = nodes;
  gap[1].node_id = 5;
  CHECK_THROWS_AS(AttributedGraph(gap, {}), DataError);
}

TEST_CASE("adjacency is the symmetric closure of the edge list") {
  const auto g = testing::ring(5, 3);
  const auto a = g.adjacency().to_dense();
  for (const auto& e : g.edges()) {
    CHECK(a(e.src, e.dst) == 1.0);
    CHECK(a(e.dst, e.src) == 1.0);
  }
  double total = 0.0;
  for (double v : a.data()) total += v;
  CHECK(total == 2.0 * static_cast<double>(g.num_edges()));
  for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(a(i, i) == 0.0);
}

TEST_CASE("standardize_columns gives zero mean and unit variance") {
  const auto x = Tensor::from_rows({{1, 5}, {2, 5}, {3, 5}, {6, 5}});
  const auto z = standardize_columns(x);
  double mean = 0.0, var = 0.0;
  for (std::size_t r = 0; r < 4; ++r) mean += z(r, 0) / 4.0;
  for (std::size_t r = 0; r < 4; ++r) var += (z(r, 0) - mean) * (z(r, 0) - mean) / 4.0;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.0));
  for (std::size_t r = 0; r < 4; ++r) CHECK(z(r, 1) == 0.0);
}
