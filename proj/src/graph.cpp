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
#include "nextcell/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "nextcell/error.hpp"

namespace nextcell {

std::string_view to_string(NodeKind kind) { return kind == NodeKind::UE ? "ue" : "cell"; }

AttributedGraph::AttributedGraph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  // UEs first, then cells, ids contiguous.
  bool seen_cell = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.node_id != i) throw DataError("node ids must be contiguous from 0; found " + std::to_string(n.node_id) + " at position " + std::to_string(i));
    if (n.kind == NodeKind::Cell) {
      seen_cell = true;
    } else if (seen_cell) {
      throw DataError("UE node " + std::to_string(i) + " follows a cell node");
    } else {
      ++num_ues_;
    }
    if (i == 0) node_width_ = n.features.size();
    if (n.features.size() != node_width_) throw DataError("node " + std::to_string(i) + " has feature width " + std::to_string(n.features.size()) + ", expected " + std::to_string(node_width_));
    for (double f : n.features)
      if (!std::isfinite(f)) throw DataError("non-finite feature on node " + std::to_string(i));
    auto& lookup = n.kind == NodeKind::UE ? ue_lookup_ : cell_lookup_;
    if (!lookup.emplace(n.raw_id, i).second) {
      throw DataError("duplicate raw " + std::string(to_string(n.kind)) + " id " + std::to_string(n.raw_id));
    }
  }

  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(2 * edges_.size());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    if (e.src >= nodes_.size() || e.dst >= nodes_.size()) {
      throw DataError("edge " + std::to_string(e.edge_id) + " references a missing node");
    }
    if (nodes_[e.src].kind != NodeKind::UE || nodes_[e.dst].kind != NodeKind::Cell) {
      throw DataError("edge " + std::to_string(e.edge_id) + " does not join a UE to a cell");
    }
    if (k == 0) edge_width_ = e.features.size();
    if (e.features.size() != edge_width_) throw DataError("edge " + std::to_string(e.edge_id) + " has feature width " + std::to_string(e.features.size()) + ", expected " + std::to_string(edge_width_));
    for (double f : e.features)
      if (!std::isfinite(f)) throw DataError("non-finite feature on edge " + std::to_string(e.edge_id));
    if (!edge_lookup_.emplace(NodePair{e.src, e.dst}, k).second) {
      throw DataError("duplicate edge between nodes " + std::to_string(e.src) + " and " + std::to_string(e.dst));
    }
    triplets.push_back({e.src, e.dst, 1.0});
    triplets.push_back({e.dst, e.src, 1.0});
  }
  adjacency_ = SparseMatrix::from_triplets(nodes_.size(), nodes_.size(), std::move(triplets));
}

std::span<const std::size_t> AttributedGraph::neighbors(std::size_t id) const {
  if (id >= nodes_.size()) throw BoundsError("node " + std::to_string(id) + " out of range");
  return {adjacency_.col_idx.data() + adjacency_.row_ptr[id], adjacency_.row_ptr[id + 1] - adjacency_.row_ptr[id]};
}

std::size_t AttributedGraph::degree(std::size_t id) const { return neighbors(id).size(); }

std::vector<NodePair> AttributedGraph::edge_pairs() const {
  std::vector<NodePair> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back({e.src, e.dst});
  return out;
}

bool AttributedGraph::has_edge(std::size_t ue, std::size_t cell) const { return edge_lookup_.contains({ue, cell}); }

std::optional<std::size_t> AttributedGraph::edge_index(std::size_t ue, std::size_t cell) const {
  auto it = edge_lookup_.find({ue, cell});
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> AttributedGraph::find_node(NodeKind kind, std::int64_t raw_id) const {
  const auto& lookup = kind == NodeKind::UE ? ue_lookup_ : cell_lookup_;
  auto it = lookup.find(raw_id);
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

Tensor AttributedGraph::node_feature_matrix() const {
  Tensor x(nodes_.size(), node_width_);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    std::copy(nodes_[i].features.begin(), nodes_[i].features.end(), x.row(i).begin());
  return x;
}

std::vector<EdgeRecord> dedup_edges(std::span<const EdgeRecord> edges) {
  std::unordered_map<NodePair, std::size_t, NodePairHash> survivor;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    auto [it, inserted] = survivor.try_emplace(NodePair{edges[k].src, edges[k].dst}, k);
    if (!inserted && edges[k].edge_id < edges[it->second].edge_id) it->second = k;
  }
  std::vector<char> keep(edges.size(), 0);
  for (const auto& [pair, k] : survivor) keep[k] = 1;
  std::vector<EdgeRecord> out;
  out.reserve(survivor.size());
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (keep[k]) out.push_back(edges[k]);
  return out;
}

AttributedGraph homogenize(std::span<const RawNode> ue_table, std::span<const RawNode> cell_table,
                           std::span<const RawEdge> edge_table) {
  std::size_t width = 0;
  for (const auto& n : ue_table) width = std::max(width, n.features.size());
  for (const auto& n : cell_table) width = std::max(width, n.features.size());

  std::vector<NodeRecord> nodes;
  nodes.reserve(ue_table.size() + cell_table.size());
  std::unordered_map<std::int64_t, std::size_t> ue_index, cell_index;
  auto append = [&](const RawNode& raw, NodeKind kind, std::unordered_map<std::int64_t, std::size_t>& index) {
    const std::size_t id = nodes.size();
    if (!index.emplace(raw.id, id).second) {
      throw DataError("duplicate raw " + std::string(to_string(kind)) + " id " + std::to_string(raw.id));
    }
    NodeRecord rec{id, kind, raw.id, raw.features};
    rec.features.resize(width, 0.0);
    nodes.push_back(std::move(rec));
  };
  for (const auto& n : ue_table) append(n, NodeKind::UE, ue_index);
  for (const auto& n : cell_table) append(n, NodeKind::Cell, cell_index);

  std::vector<EdgeRecord> edges;
  edges.reserve(edge_table.size());
  for (const auto& e : edge_table) {
    auto u = ue_index.find(e.ue);
    if (u == ue_index.end()) {
      throw DataError("edge " + std::to_string(e.edge_id) + " references unknown UE id " + std::to_string(e.ue));
    }
    auto c = cell_index.find(e.cell);
    if (c == cell_index.end()) {
      throw DataError("edge " + std::to_string(e.edge_id) + " references unknown cell id " + std::to_string(e.cell));
    }
    edges.push_back(EdgeRecord{e.edge_id, u->second, c->second, e.features, e.timestamp});
  }
  return AttributedGraph(std::move(nodes), dedup_edges(edges));
}

double density(const AttributedGraph& g) {
  const double n = static_cast<double>(g.num_nodes());
  if (g.num_nodes() < 2) throw DataError("density is undefined for fewer than 2 nodes");
  return static_cast<double>(g.num_edges()) / (n * (n - 1.0) / 2.0);
}

SparseMatrix symmetric_adjacency(std::size_t num_nodes, std::span<const NodePair> edges) {
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(2 * edges.size());
  std::unordered_set<NodePair, NodePairHash> seen;
  for (const auto& e : edges) {
    if (e.src == e.dst) continue;
    const NodePair key{std::min(e.src, e.dst), std::max(e.src, e.dst)};
    if (!seen.insert(key).second) continue;
    triplets.push_back({e.src, e.dst, 1.0});
    triplets.push_back({e.dst, e.src, 1.0});
  }
  return SparseMatrix::from_triplets(num_nodes, num_nodes, std::move(triplets));
}

SparseMatrix normalized_adjacency(std::size_t num_nodes, std::span<const NodePair> edges) {
  SparseMatrix a = symmetric_adjacency(num_nodes, edges);
  std::vector<double> inv_sqrt(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const double deg = static_cast<double>(a.row_ptr[i + 1] - a.row_ptr[i]) + 1.0;
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(a.nnz() + num_nodes);
  for (std::size_t r = 0; r < num_nodes; ++r) {
    triplets.push_back({r, r, inv_sqrt[r] * inv_sqrt[r]});
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const std::size_t c = a.col_idx[k];
      triplets.push_back({r, c, inv_sqrt[r] * inv_sqrt[c]});
    }
  }
  return SparseMatrix::from_triplets(num_nodes, num_nodes, std::move(triplets));
}

SparseMatrix normalized_adjacency(const AttributedGraph& g) {
  const auto pairs = g.edge_pairs();
  return normalized_adjacency(g.num_nodes(), pairs);
}

Tensor standardize_columns(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  if (x.rows() == 0) return out;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(var / n);
    if (sd < 1e-12) continue;
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) = (x(r, c) - mean) / sd;
  }
  return out;
}

namespace {

template <class Rows>
void scale_rows(Rows& rows) {
  if (rows.empty()) return;
  const std::size_t width = rows.front()->size();
  for (std::size_t c = 0; c < width; ++c) {
    double lo = (*rows.front())[c], hi = lo;
    for (auto* r : rows) {
      lo = std::min(lo, (*r)[c]);
      hi = std::max(hi, (*r)[c]);
    }
    const double span = hi - lo;
    for (auto* r : rows) (*r)[c] = span > 0.0 ? ((*r)[c] - lo) / span : 0.0;
  }
}

}  // namespace

AttributedGraph min_max_scaled(const AttributedGraph& g) {
  std::vector<NodeRecord> nodes = g.nodes();
  std::vector<EdgeRecord> edges = g.edges();
  std::vector<std::vector<double>*> node_rows, edge_rows;
  for (auto& n : nodes) node_rows.push_back(&n.features);
  for (auto& e : edges) edge_rows.push_back(&e.features);
  scale_rows(node_rows);
  scale_rows(edge_rows);
  return AttributedGraph(std::move(nodes), std::move(edges));
}

std::size_t connected_components(const AttributedGraph& g) {
  std::vector<std::size_t> parent(g.num_nodes());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = g.num_nodes();
  for (const auto& e : g.edges()) {
    const auto a = find(e.src), b = find(e.dst);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

}  // namespace nextcell
