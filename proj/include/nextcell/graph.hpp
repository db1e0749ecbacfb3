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
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nextcell/node_pair.hpp"
#include "nextcell/tensor.hpp"

namespace nextcell {

enum class NodeKind { UE, Cell };

std::string_view to_string(NodeKind kind);

struct NodeRecord {
  std::size_t node_id = 0;
  NodeKind kind = NodeKind::UE;
  /// Identifier in the source table.
  std::int64_t raw_id = 0;
  std::vector<double> features;
};

/// Directed UE -> Cell association.
struct EdgeRecord {
  std::int64_t edge_id = 0;
  std::size_t src = 0;
  std::size_t dst = 0;
  std::vector<double> features;
  std::optional<double> timestamp;
};

// Raw tables as they arrive from a trace or a file, before homogenization.
struct RawNode {
  std::int64_t id = 0;
  std::vector<double> features;
};

struct RawEdge {
  std::int64_t edge_id = 0;
  std::int64_t ue = 0;
  std::int64_t cell = 0;
  std::vector<double> features;
  std::optional<double> timestamp;
};

/// Homogeneous attributed graph over UEs and cells. Immutable once built.
///
/// UEs occupy node ids [0, num_ues) and cells [num_ues, num_nodes). Edges are
/// stored directed UE -> Cell, at most one per pair, while the adjacency used
/// for message passing is the symmetric 0/1 closure.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  /// Validates every invariant (contiguous ids, bipartite edges, no
  /// duplicate pairs, finite features) and builds the adjacency.
  AttributedGraph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_ues() const { return num_ues_; }
  std::size_t num_cells() const { return nodes_.size() - num_ues_; }
  std::size_t node_feature_width() const { return node_width_; }
  std::size_t edge_feature_width() const { return edge_width_; }

  const std::vector<NodeRecord>& nodes() const { return nodes_; }
  const std::vector<EdgeRecord>& edges() const { return edges_; }
  const NodeRecord& node(std::size_t id) const { return nodes_.at(id); }
  bool is_ue(std::size_t id) const { return id < num_ues_; }

  /// Symmetric 0/1 adjacency in CSR form.
  const SparseMatrix& adjacency() const { return adjacency_; }
  std::span<const std::size_t> neighbors(std::size_t id) const;
  std::size_t degree(std::size_t id) const;

  /// Edges as (ue, cell) node pairs, in edge order.
  std::vector<NodePair> edge_pairs() const;
  bool has_edge(std::size_t ue, std::size_t cell) const;
  /// Index into edges() for the (ue, cell) pair, if present.
  std::optional<std::size_t> edge_index(std::size_t ue, std::size_t cell) const;

  std::optional<std::size_t> find_node(NodeKind kind, std::int64_t raw_id) const;

  /// Node features as an n x width tensor.
  Tensor node_feature_matrix() const;

 private:
  std::vector<NodeRecord> nodes_;
  std::vector<EdgeRecord> edges_;
  std::size_t num_ues_ = 0;
  std::size_t node_width_ = 0;
  std::size_t edge_width_ = 0;
  SparseMatrix adjacency_;
  std::unordered_map<NodePair, std::size_t, NodePairHash> edge_lookup_;
  std::unordered_map<std::int64_t, std::size_t> ue_lookup_;
  std::unordered_map<std::int64_t, std::size_t> cell_lookup_;
};

/// Maps raw UE and cell tables onto one node space and deduplicates edges.
/// UEs keep their table order in [0, n_ue), cells follow; node features are
/// zero-padded to the wider of the two kinds. Throws DataError on a repeated
/// raw id or an edge referencing an unknown UE or cell.
AttributedGraph homogenize(std::span<const RawNode> ue_table, std::span<const RawNode> cell_table,
                           std::span<const RawEdge> edge_table);

/// One edge per (src, dst): the survivor has the smallest edge_id of its
/// group and survivors keep their relative order.
std::vector<EdgeRecord> dedup_edges(std::span<const EdgeRecord> edges);

/// |E| / (|V| (|V| - 1) / 2). Throws DataError when there are fewer than two nodes.
double density(const AttributedGraph& g);

/// D^-1/2 (A + I) D^-1/2 where D is the degree matrix of A + I.
SparseMatrix normalized_adjacency(const AttributedGraph& g);
/// Same, for the undirected graph on `num_nodes` nodes given by `edges`.
SparseMatrix normalized_adjacency(std::size_t num_nodes, std::span<const NodePair> edges);
/// Symmetric 0/1 adjacency without self-loops.
SparseMatrix symmetric_adjacency(std::size_t num_nodes, std::span<const NodePair> edges);

/// Per-column z-score of a feature matrix; constant columns map to zero.
Tensor standardize_columns(const Tensor& x);

/// Copy of g with node and edge feature columns min-max scaled into [0, 1]
/// (constant columns map to 0). Used when writing graphs to disk.
AttributedGraph min_max_scaled(const AttributedGraph& g);

/// Number of connected components of the undirected graph.
std::size_t connected_components(const AttributedGraph& g);

}  // namespace nextcell
