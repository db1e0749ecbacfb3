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

// Small graphs shared by the unit tests.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/nn.hpp"
#include "nextcell/seal.hpp"
#include "nextcell/splitter.hpp"
#include "nextcell/training.hpp"
#include "nextcell/vgae.hpp"

namespace nextcell::testing {

/// Bipartite graph with `ues` UEs and `cells` cells; links are (ue, cell)
/// raw ids. Features are deterministic but distinct per node and edge.
inline AttributedGraph bipartite(std::int64_t ues, std::int64_t cells,
                                 const std::vector<std::pair<std::int64_t, std::int64_t>>& links,
                                 std::size_t node_width = 2, std::size_t edge_width = 2) {
  std::vector<RawNode> ue_table, cell_table;
  for (std::int64_t u = 0; u < ues; ++u) {
    RawNode n{u, {}};
    for (std::size_t k = 0; k < node_width; ++k) n.features.push_back(0.1 * static_cast<double>(u + 1) + 0.01 * k);
    ue_table.push_back(n);
  }
  for (std::int64_t c = 0; c < cells; ++c) {
    RawNode n{c, {}};
    for (std::size_t k = 0; k < node_width; ++k) n.features.push_back(0.3 + 0.07 * static_cast<double>(c) - 0.02 * k);
    cell_table.push_back(n);
  }
  std::vector<RawEdge> edges;
  std::int64_t id = 0;
  for (const auto& [u, c] : links) {
    RawEdge e{id, u, c, {}, std::nullopt};
    for (std::size_t k = 0; k < edge_width; ++k)
      e.features.push_back(0.05 * static_cast<double>((id * 7 + static_cast<std::int64_t>(k) * 3) % 11));
    edges.push_back(e);
    ++id;
  }
  return homogenize(ue_table, cell_table, edges);
}

/// Every UE linked to every cell.
inline AttributedGraph complete_bipartite(std::int64_t ues, std::int64_t cells) {
  std::vector<std::pair<std::int64_t, std::int64_t>> links;
  for (std::int64_t u = 0; u < ues; ++u)
    for (std::int64_t c = 0; c < cells; ++c) links.emplace_back(u, c);
  return bipartite(ues, cells, links);
}

/// Ring-like bipartite graph: UE u links to cells u % cells and (u + 1) % cells.
inline AttributedGraph ring(std::int64_t ues, std::int64_t cells) {
  std::vector<std::pair<std::int64_t, std::int64_t>> links;
  for (std::int64_t u = 0; u < ues; ++u) {
    links.emplace_back(u, u % cells);
    if (cells > 1) links.emplace_back(u, (u + 1) % cells);
  }
  return bipartite(ues, cells, links);
}

/// Counts violations of split hygiene: overlaps between any two of the six
/// pair sets, positives that are not graph edges, negatives that are graph
/// edges or not UE-cell pairs, and message edges outside the training set.
inline std::size_t split_violations(const AttributedGraph& g, const SplitBundle& b) {
  auto key = [](NodePair p) { return NodePair{std::min(p.src, p.dst), std::max(p.src, p.dst)}; };
  const std::vector<const std::vector<NodePair>*> sets{&b.train_pos, &b.val_pos, &b.test_pos,
                                                       &b.train_neg, &b.val_neg, &b.test_neg};
  std::map<NodePair, int> owner;
  std::size_t bad = 0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const NodePair& p : *sets[s]) {
      const auto [it, fresh] = owner.emplace(key(p), static_cast<int>(s));
      if (!fresh) ++bad;
      const bool edge = g.has_edge(std::min(p.src, p.dst), std::max(p.src, p.dst));
      const bool ue_cell = g.is_ue(p.src) != g.is_ue(p.dst);
      if (s < 3 && !edge) ++bad;
      if (s >= 3 && (edge || !ue_cell)) ++bad;
    }
  }
  for (const NodePair& p : b.message_edges) {
    const auto it = owner.find(key(p));
    if (it == owner.end() || it->second != 0) ++bad;
  }
  return bad;
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties
/// counting one half.
inline double brute_auc(std::span<const double> scores, std::span<const double> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] < 0.5) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0.5) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

/// Average precision for distinct scores: the mean over positives of the
/// precision among items scored at least as high.
inline double brute_ap(std::span<const double> scores, std::span<const double> labels) {
  double total = 0.0, positives = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] < 0.5) continue;
    positives += 1.0;
    double above = 0.0, hits = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= scores[i]) {
        above += 1.0;
        hits += labels[j] > 0.5 ? 1.0 : 0.0;
      }
    }
    total += hits / above;
  }
  return total / positives;
}

inline Tensor uniform_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

/// Runs grad_check over every parameter of `state`; `loss` receives the
/// parameters bound by name.
template <typename Loss>
double state_grad_error(const ModelState& state, Loss loss) {
  std::vector<std::string> names;
  std::vector<Tensor> point;
  for (const auto& [name, p] : state.params) {
    names.push_back(name);
    point.push_back(p.value);
  }
  const ScalarFunction f = [&](Tape& tape, std::span<const Var> in) {
    std::map<std::string, Var> bound;
    for (std::size_t i = 0; i < names.size(); ++i) bound.emplace(names[i], in[i]);
    return loss(tape, bound);
  };
  return grad_check(f, point, 1e-5).max_relative_error;
}

/// Two-layer GCN on a 5-node path, summed with distinct weights.
inline double gcn_grad_error(std::uint64_t seed) {
  const std::vector<NodePair> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  const SparseMatrix a_hat = normalized_adjacency(5, edges);
  const Tensor x = uniform_tensor(5, 3, seed);
  const Tensor mix = uniform_tensor(5, 2, seed + 1, 0.2, 1.0);
  const ScalarFunction f = [&](Tape& tape, std::span<const Var> in) {
    Var h = gcn_layer(tape.constant(x), a_hat, in[0]);
    return ad::sum(ad::mul(gcn_propagate(h, a_hat, in[1]), tape.constant(mix)));
  };
  return grad_check(f, {uniform_tensor(3, 4, seed + 2), uniform_tensor(4, 2, seed + 3)}, 1e-5).max_relative_error;
}

/// Single GAT layer with edge features on a 6-node graph; checks W, W_e, a
/// and the input features.
inline double gat_grad_error(std::uint64_t seed) {
  AttentionGraph g;
  g.num_nodes = 6;
  for (const NodePair& p : std::vector<NodePair>{{0, 3}, {0, 4}, {1, 4}, {1, 5}, {2, 3}, {2, 5}}) {
    g.edges.push_back(p);
    g.edges.push_back({p.dst, p.src});
  }
  g.edge_features = uniform_tensor(g.edges.size(), 2, seed);
  const Tensor mix = uniform_tensor(6, 3, seed + 1, 0.2, 1.0);
  const ScalarFunction f = [&](Tape& tape, std::span<const Var> in) {
    const auto out = gat_layer(in[0], g, in[1], in[2], in[3]);
    return ad::sum(ad::mul(out.out, tape.constant(mix)));
  };
  return grad_check(f,
                    {uniform_tensor(6, 4, seed + 2), uniform_tensor(4, 3, seed + 3), uniform_tensor(2, 3, seed + 4),
                     uniform_tensor(9, 1, seed + 5)},
                    1e-5)
      .max_relative_error;
}

/// Full VGAE loss (reconstruction plus KL, fixed noise) on a 7-node graph.
inline double vgae_loss_grad_error(std::uint64_t seed) {
  const AttributedGraph g = ring(4, 3);
  const auto pos = g.edge_pairs();
  const std::vector<NodePair> neg{{0, 6}, {1, 4}, {2, 5}, {3, 5}};
  const GraphInputs inputs = prepare_inputs(g, pos);
  const VgaeParams params = VgaeParams::init(inputs.node_features.cols(), g.edge_feature_width(), 4, 3, seed);
  const Tensor noise = uniform_tensor(g.num_nodes(), 3, seed + 1, -0.5, 0.5);
  return state_grad_error(params.state, [&](Tape& tape, const std::map<std::string, Var>& bound) {
    return vgae_loss(tape, bound, inputs, pos, neg, &noise, 0.3);
  });
}

/// SEAL cross-entropy over a batch of three enclosing subgraphs.
inline double seal_loss_grad_error(std::uint64_t seed) {
  const AttributedGraph g = ring(4, 3);
  const auto edges = g.edge_pairs();
  const SealInputs inputs = prepare_seal_inputs(g, edges, 4, 1);
  std::vector<EnclosingSubgraph> sgs;
  for (const NodePair& p : std::vector<NodePair>{edges[0], {0, 6}, edges[3]}) sgs.push_back(extract_subgraph(inputs.adjacency, p, 1));
  const SealBatch batch = build_batch(sgs, inputs, false);
  SealParams params = SealParams::init(batch.features.cols(), 4, 2, seed);
  params.state.params.at("cls.b").value = Tensor(1, 1, 0.1);
  const std::vector<double> labels{1.0, 0.0, 1.0};
  return state_grad_error(params.state, [&](Tape& tape, const std::map<std::string, Var>& bound) {
    return cross_entropy(forward_seal_on_tape(tape, bound, batch, 2), labels);
  });
}

}  // namespace nextcell::testing
