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

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "nextcell/error.hpp"
#include "nextcell/ingest.hpp"
#include "support.hpp"

using namespace nextcell;

namespace {

std::string error_of(const std::string& nodes, const std::string& edges) {
  std::istringstream n(nodes), e(edges);
  try {
    load_edge_list(n, e);
  } catch (const DataError& err) {
    return err.what();
  }
  return "";
}

const char* kNodes =
    "node_id,kind,f1,f2\n"
    "10,ue,0.1,0.2\n"
    "11,UE,0.3,0.4\n"
    "20,cell,0.5\n";

}  // namespace

TEST_CASE("three-line toy edge list") {
  std::istringstream nodes(kNodes);
  std::istringstream edges("edge_id,src,dst,w\n0,10,20,0.5\n1,11,20,0.25\n2,10,20,0.9\n");
  const auto g = load_edge_list(nodes, edges);
  CHECK(g.num_ues() == 2);
  CHECK(g.num_cells() == 1);
  CHECK(g.num_edges() == 2);
  CHECK(g.node_feature_width() == 2);
  CHECK(g.edge_feature_width() == 1);
  // The cell row is zero-padded to the common width.
  CHECK(g.node(2).features == std::vector<double>{0.5, 0.0});
  CHECK(density(g) == doctest::Approx(2.0 * 2.0 / (3.0 * 2.0)));
}

TEST_CASE("duplicate rows keep the lowest edge id") {
  std::istringstream nodes(kNodes);
  std::istringstream edges("edge_id,src,dst,w\n5,10,20,0.5\n2,10,20,0.9\n7,10,20,0.1\n");
  const auto g = load_edge_list(nodes, edges);
  REQUIRE(g.num_edges() == 1);
  CHECK(g.edges()[0].edge_id == 2);
  CHECK(g.edges()[0].features[0] == 0.9);
}

TEST_CASE("out-of-range features are clamped with a warning") {
  std::istringstream nodes("node_id,kind,f1\n1,ue,1.5\n2,cell,-0.2\n");
  std::istringstream edges("edge_id,src,dst,w\n0,1,2,0.5\n");
  IngestWarnings warnings;
  const auto g = load_edge_list(nodes, edges, &warnings);
  CHECK(warnings.size() == 2);
  CHECK(warnings[0].find("line 2") != std::string::npos);
  CHECK(g.node(0).features[0] == 1.0);
  CHECK(g.node(1).features[0] == 0.0);
}

TEST_CASE("parse errors name the file and line") {
  CHECK(error_of(kNodes, "edge_id,src,dst\n0,10,20\n1,10,abc\n").find("edge file line 3") != std::string::npos);
  CHECK(error_of("node_id,kind\n1,ue\n2,router\n", "edge_id,src,dst\n").find("node file line 3") != std::string::npos);
  CHECK(error_of(kNodes, "edge_id,src,dst,w\n0,10,20\n").find("edge file line 2") != std::string::npos);
  CHECK(error_of("id,kind\n", "edge_id,src,dst\n").find("header") != std::string::npos);
  CHECK(error_of(kNodes, "").find("missing header") != std::string::npos);
  CHECK(error_of(kNodes, "edge_id,src,dst,w\n0,10,20,nan\n").find("non-finite") != std::string::npos);
  CHECK_FALSE(error_of("node_id,kind,f1\n1,ue,0.1\n2,ue\n3,cell,0.2\n", "edge_id,src,dst\n0,1,3\n").empty());
}

TEST_CASE("edges to unknown nodes are rejected") {
  std::istringstream nodes(kNodes);
  std::istringstream edges("edge_id,src,dst\n0,10,99\n");
  CHECK_THROWS_AS(load_edge_list(nodes, edges), DataError);
}

TEST_CASE("missing files raise DataError") {
  CHECK_THROWS_AS(load_edge_list("/nonexistent/nodes.csv", "/nonexistent/edges.csv"), DataError);
}

TEST_CASE("write then load reproduces the graph") {
  const auto g = min_max_scaled(testing::ring(5, 3));
  std::stringstream nodes, edges;
  write_edge_list(g, nodes, edges);
  const auto back = load_edge_list(nodes, edges);
  REQUIRE(back.num_nodes() == g.num_nodes());
  REQUIRE(back.num_edges() == g.num_edges());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(back.node(i).features == g.node(i).features);
  CHECK(back.edge_pairs() == g.edge_pairs());

  const auto dir = std::filesystem::temp_directory_path() / "nextcell_ingest_test";
  std::filesystem::create_directories(dir);
  write_edge_list(g, (dir / "n.csv").string(), (dir / "e.csv").string());
  CHECK(load_edge_list((dir / "n.csv").string(), (dir / "e.csv").string()).edge_pairs() == g.edge_pairs());
  std::filesystem::remove_all(dir);
}

TEST_CASE("full-size subset is the identity") {
  const auto g = testing::ring(8, 4);
  const auto s = extract_subset(g, {4, 8, 3});
  CHECK(s.num_nodes() == g.num_nodes());
  CHECK(s.edge_pairs() == g.edge_pairs());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(s.node(i).raw_id == g.node(i).raw_id);
}

TEST_CASE("star subset has the closed-form density") {
  // One cell with k UEs: 2k / ((k + 1) k) = 2 / (k + 1).
  std::vector<std::pair<std::int64_t, std::int64_t>> links;
  for (std::int64_t u = 0; u < 9; ++u) links.emplace_back(u, 0);
  for (std::int64_t u = 9; u < 14; ++u) links.emplace_back(u, 1);
  const auto g = testing::bipartite(14, 2, links);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = extract_subset(g, {1, 4, seed});
    CHECK(s.num_nodes() == 5);
    CHECK(s.num_cells() == 1);
    // UEs attached to the chosen cell are preferred, so the star is complete.
    CHECK(density(s) == doctest::Approx(2.0 / 5.0));
  }
}

TEST_CASE("subset is seed deterministic and bounded") {
  const auto g = testing::ring(20, 6);
  CHECK(extract_subset(g, {3, 7, 5}).edge_pairs() == extract_subset(g, {3, 7, 5}).edge_pairs());
  CHECK_THROWS_AS(extract_subset(g, {7, 5, 1}), BoundsError);
  CHECK_THROWS_AS(extract_subset(g, {3, 21, 1}), BoundsError);
  CHECK_THROWS_AS(extract_subset(g, {0, 5, 1}), BoundsError);
}
