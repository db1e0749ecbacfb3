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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/nn.hpp"
#include "nextcell/splitter.hpp"
#include "nextcell/training.hpp"
#include "nextcell/vgae.hpp"

namespace nextcell {

/// Undirected adjacency lists, neighbours sorted ascending.
struct AdjacencyLists {
  std::vector<std::vector<std::size_t>> neighbors;

  static AdjacencyLists build(std::size_t num_nodes, std::span<const NodePair> edges);
  std::size_t num_nodes() const { return neighbors.size(); }
};

/// Neighbourhood of a target pair. nodes[0] and nodes[1] are the targets;
/// the rest follow in ascending global id. Edges use local indices with
/// src < dst and never contain the target pair.
struct EnclosingSubgraph {
  NodePair target;
  std::vector<std::size_t> nodes;
  std::vector<NodePair> edges;
  std::vector<int> labels;
};

/// Nodes within `hops` of either target, with the target edge removed.
EnclosingSubgraph extract_subgraph(const AdjacencyLists& adj, NodePair target, int hops);

/// Double-radius labels: targets get 1, nodes that cannot reach one of the
/// targets get 0, others 1 + min(du, dv) + (d/2)((d/2) + (d%2) - 1) with
/// d = du + dv. Distances to u are taken with v removed and vice versa.
std::vector<int> label_nodes(const EnclosingSubgraph& sg);

/// Shared per-graph state for building subgraph inputs.
struct SealInputs {
  AdjacencyLists adjacency;
  Tensor node_features;
  Tensor edge_features;
  /// (min id, max id) -> row of edge_features.
  std::unordered_map<NodePair, std::size_t, NodePairHash> edge_row;
  std::size_t label_dim = 8;
  int hops = 1;
};

SealInputs prepare_seal_inputs(const AttributedGraph& g, std::span<const NodePair> message_edges,
                               std::size_t label_dim, int hops);

/// Row per subgraph node: node features, one-hot label, mean of the
/// subgraph edges' features at that node.
Tensor subgraph_features(const EnclosingSubgraph& sg, const SealInputs& inputs);

/// Block-diagonal batch of labelled subgraphs.
struct SealBatch {
  SparseMatrix propagation;
  Tensor features;
  /// Mean-pooling matrix, one row per subgraph.
  SparseMatrix pool;
  std::size_t size() const { return pool.rows; }
};

SealBatch build_batch(std::span<const EnclosingSubgraph> subgraphs, const SealInputs& inputs, bool normalized);

/// Parameters: "gcn0.W" ... "gcn{L-1}.W", "cls.W", "cls.b".
struct SealParams {
  ModelState state;
  std::size_t in_width = 0;
  std::size_t hidden = 0;
  int layers = 2;
  std::size_t label_dim = 8;
  int hops = 1;
  bool normalized = false;

  static SealParams init(std::size_t in_width, std::size_t hidden, int layers, std::uint64_t seed);
  Checkpoint to_checkpoint() const;
  static SealParams from_checkpoint(const Checkpoint& ckpt);
};

/// Stacked ReLU(P H W) layers, mean-pool readout, linear classifier -> one
/// logit per subgraph.
Var forward_seal_on_tape(Tape& tape, const std::map<std::string, Var>& params, const SealBatch& batch,
                         int layers);

/// Logit for one labelled subgraph.
double forward_seal(const SealParams& params, const EnclosingSubgraph& sg, const SealInputs& inputs);

/// Link probabilities; subgraphs are built on the fly.
std::vector<double> predict_seal(const SealParams& params, const SealInputs& inputs,
                                 std::span<const NodePair> pairs);

struct SealTrainResult : TrainResult {
  SealParams params;
  double mean_subgraph_nodes = 0.0;
};

/// Minibatch training with cross-entropy, decoupled L2 and early stopping on
/// validation AUC.
SealTrainResult train_seal(const AttributedGraph& g, const SplitBundle& bundle, const TrainConfig& cfg);

/// Nodes touched when extracting subgraphs for `pairs` (a cost proxy).
double estimate_subgraph_cost(const AttributedGraph& g, std::size_t pair_count, int hops);

}  // namespace nextcell
