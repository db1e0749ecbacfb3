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
#include "nextcell/seal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "nextcell/error.hpp"
#include "nextcell/metrics.hpp"

namespace nextcell {
namespace {

constexpr int kUnreachable = -1;

// Hop distances from `source` inside the subgraph, never entering `blocked`.
std::vector<int> distances(std::size_t n, const std::vector<std::vector<std::size_t>>& local_adj, std::size_t source,
                           std::size_t blocked) {
  std::vector<int> dist(n, kUnreachable);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    for (std::size_t y : local_adj[x]) {
      if (y == blocked || dist[y] != kUnreachable) continue;
      dist[y] = dist[x] + 1;
      queue.push_back(y);
    }
  }
  return dist;
}

std::map<std::string, Var> bind_constants(Tape& tape, const ModelState& state) {
  std::map<std::string, Var> bound;
  for (const auto& [name, p] : state.params) bound.emplace(name, tape.constant(p.value));
  return bound;
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<EnclosingSubgraph> extract_all(const SealInputs& inputs, std::span<const NodePair> pairs) {
  std::vector<EnclosingSubgraph> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(extract_subgraph(inputs.adjacency, p, inputs.hops));
  return out;
}

std::vector<double> logits_for(const SealParams& params, const SealInputs& inputs,
                               std::span<const EnclosingSubgraph> subgraphs) {
  constexpr std::size_t kChunk = 256;
  std::vector<double> out;
  out.reserve(subgraphs.size());
  for (std::size_t begin = 0; begin < subgraphs.size(); begin += kChunk) {
    const auto chunk = subgraphs.subspan(begin, std::min(kChunk, subgraphs.size() - begin));
    const SealBatch batch = build_batch(chunk, inputs, params.normalized);
    Tape tape;
    const auto bound = bind_constants(tape, params.state);
    Var logits = forward_seal_on_tape(tape, bound, batch, params.layers);
    out.insert(out.end(), logits.value().data().begin(), logits.value().data().end());
  }
  return out;
}

}  // namespace

AdjacencyLists AdjacencyLists::build(std::size_t num_nodes, std::span<const NodePair> edges) {
  AdjacencyLists adj;
  adj.neighbors.resize(num_nodes);
  for (const auto& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) throw BoundsError("adjacency: edge outside node range");
    if (e.src == e.dst) continue;
    adj.neighbors[e.src].push_back(e.dst);
    adj.neighbors[e.dst].push_back(e.src);
  }
  for (auto& n : adj.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return adj;
}

EnclosingSubgraph extract_subgraph(const AdjacencyLists& adj, NodePair target, int hops) {
  const std::size_t u = target.src, v = target.dst;
  if (u >= adj.num_nodes() || v >= adj.num_nodes()) {
    throw BoundsError("subgraph target (" + std::to_string(u) + "," + std::to_string(v) + ") outside graph");
  }
  if (u == v) throw BoundsError("subgraph target must join two distinct nodes");
  auto is_target_edge = [&](std::size_t a, std::size_t b) { return (a == u && b == v) || (a == v && b == u); };

  std::unordered_map<std::size_t, int> depth{{u, 0}, {v, 0}};
  std::vector<std::size_t> frontier{u, v};
  for (int h = 1; h <= hops && !frontier.empty(); ++h) {
    std::vector<std::size_t> next;
    for (std::size_t x : frontier) {
      for (std::size_t y : adj.neighbors[x]) {
        if (is_target_edge(x, y)) continue;
        if (depth.emplace(y, h).second) next.push_back(y);
      }
    }
    frontier = std::move(next);
  }

  EnclosingSubgraph sg;
  sg.target = target;
  sg.nodes = {u, v};
  std::vector<std::size_t> rest;
  for (const auto& [node, d] : depth)
    if (node != u && node != v) rest.push_back(node);
  std::sort(rest.begin(), rest.end());
  sg.nodes.insert(sg.nodes.end(), rest.begin(), rest.end());

  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) local.emplace(sg.nodes[i], i);
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
    for (std::size_t y : adj.neighbors[sg.nodes[i]]) {
      auto it = local.find(y);
      if (it == local.end() || it->second <= i) continue;
      if (is_target_edge(sg.nodes[i], y)) continue;
      sg.edges.push_back({i, it->second});
    }
  }
  sg.labels = label_nodes(sg);
  return sg;
}

std::vector<int> label_nodes(const EnclosingSubgraph& sg) {
  const std::size_t n = sg.nodes.size();
  std::vector<std::vector<std::size_t>> local_adj(n);
  for (const auto& e : sg.edges) {
    // The target edge never takes part in labelling.
    if ((e.src == 0 && e.dst == 1) || (e.src == 1 && e.dst == 0)) continue;
    local_adj[e.src].push_back(e.dst);
    local_adj[e.dst].push_back(e.src);
  }
  const auto du = distances(n, local_adj, 0, 1);
  const auto dv = distances(n, local_adj, 1, 0);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < 2) {
      labels[i] = 1;
      continue;
    }
    if (du[i] == kUnreachable || dv[i] == kUnreachable) continue;
    const int d = du[i] + dv[i];
    const int half = d / 2;
    labels[i] = 1 + std::min(du[i], dv[i]) + half * (half + (d % 2) - 1);
  }
  return labels;
}

SealInputs prepare_seal_inputs(const AttributedGraph& g, std::span<const NodePair> message_edges,
                               std::size_t label_dim, int hops) {
  SealInputs in;
  in.adjacency = AdjacencyLists::build(g.num_nodes(), message_edges);
  in.node_features = standardize_columns(g.node_feature_matrix());
  in.edge_features = standardized_edge_features(g);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edges()[k];
    in.edge_row.emplace(NodePair{std::min(e.src, e.dst), std::max(e.src, e.dst)}, k);
  }
  in.label_dim = label_dim;
  in.hops = hops;
  return in;
}

Tensor subgraph_features(const EnclosingSubgraph& sg, const SealInputs& inputs) {
  const std::size_t fn = inputs.node_features.cols();
  const std::size_t fe = inputs.edge_features.cols();
  const std::size_t width = fn + inputs.label_dim + fe;
  const std::size_t n = sg.nodes.size();
  Tensor x(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = inputs.node_features.row(sg.nodes[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
    const std::size_t label = std::min<std::size_t>(static_cast<std::size_t>(sg.labels.at(i)), inputs.label_dim - 1);
    x(i, fn + label) = 1.0;
  }
  if (fe == 0) return x;
  std::vector<double> count(n, 0.0);
  for (const auto& e : sg.edges) {
    const std::size_t a = sg.nodes[e.src], b = sg.nodes[e.dst];
    auto it = inputs.edge_row.find({std::min(a, b), std::max(a, b)});
    if (it == inputs.edge_row.end()) continue;
    const auto row = inputs.edge_features.row(it->second);
    for (std::size_t end : {e.src, e.dst}) {
      for (std::size_t k = 0; k < fe; ++k) x(end, fn + inputs.label_dim + k) += row[k];
      count[end] += 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0.0)
      for (std::size_t k = 0; k < fe; ++k) x(i, fn + inputs.label_dim + k) /= count[i];
  return x;
}

SealBatch build_batch(std::span<const EnclosingSubgraph> subgraphs, const SealInputs& inputs, bool normalized) {
  std::size_t total = 0;
  for (const auto& sg : subgraphs) total += sg.nodes.size();
  const std::size_t width = inputs.node_features.cols() + inputs.label_dim + inputs.edge_features.cols();

  SealBatch batch;
  batch.features = Tensor(total, width);
  std::vector<SparseMatrix::Triplet> prop, pool;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < subgraphs.size(); ++b) {
    const auto& sg = subgraphs[b];
    const std::size_t n = sg.nodes.size();
    const Tensor x = subgraph_features(sg, inputs);
    std::copy(x.data().begin(), x.data().end(), batch.features.data().begin() + offset * width);
    if (normalized) {
      const SparseMatrix a = normalized_adjacency(n, sg.edges);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
          prop.push_back({offset + r, offset + a.col_idx[k], a.values[k]});
    } else {
      for (const auto& e : sg.edges) {
        prop.push_back({offset + e.src, offset + e.dst, 1.0});
        prop.push_back({offset + e.dst, offset + e.src, 1.0});
      }
    }
    for (std::size_t i = 0; i < n; ++i) pool.push_back({b, offset + i, 1.0 / static_cast<double>(n)});
    offset += n;
  }
  batch.propagation = SparseMatrix::from_triplets(total, total, std::move(prop));
  batch.pool = SparseMatrix::from_triplets(subgraphs.size(), total, std::move(pool));
  return batch;
}

SealParams SealParams::init(std::size_t in_width, std::size_t hidden, int layers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SealParams p;
  p.in_width = in_width;
  p.hidden = hidden;
  p.layers = layers;
  for (int l = 0; l < layers; ++l)
    p.state.add("gcn" + std::to_string(l) + ".W", glorot_uniform(l == 0 ? in_width : hidden, hidden, rng));
  p.state.add("cls.W", glorot_uniform(hidden, 1, rng));
  p.state.add("cls.b", Tensor(1, 1));
  return p;
}

Checkpoint SealParams::to_checkpoint() const {
  Checkpoint c;
  c.meta = {{"model", "seal"},
            {"in_width", std::to_string(in_width)},
            {"hidden", std::to_string(hidden)},
            {"layers", std::to_string(layers)},
            {"label_dim", std::to_string(label_dim)},
            {"hops", std::to_string(hops)},
            {"normalized", normalized ? "1" : "0"}};
  c.state = state;
  return c;
}

SealParams SealParams::from_checkpoint(const Checkpoint& ckpt) {
  auto get = [&](const char* key) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) throw DataError(std::string("checkpoint lacks '") + key + "'");
    return it->second;
  };
  if (get("model") != "seal") throw DataError("checkpoint is not a SEAL checkpoint");
  SealParams p;
  p.in_width = std::stoull(get("in_width"));
  p.hidden = std::stoull(get("hidden"));
  p.layers = std::stoi(get("layers"));
  p.label_dim = std::stoull(get("label_dim"));
  p.hops = std::stoi(get("hops"));
  p.normalized = get("normalized") == "1";
  p.state = ckpt.state;
  for (int l = 0; l < p.layers; ++l) p.state.at("gcn" + std::to_string(l) + ".W");
  p.state.at("cls.W");
  p.state.at("cls.b");
  return p;
}

Var forward_seal_on_tape(Tape& tape, const std::map<std::string, Var>& params, const SealBatch& batch, int layers) {
  Var h = tape.constant(batch.features);
  for (int l = 0; l < layers; ++l) {
    auto it = params.find("gcn" + std::to_string(l) + ".W");
    if (it == params.end()) throw DataError("missing SEAL layer " + std::to_string(l));
    if (h.value().cols() != it->second.value().rows()) {
      throw DimensionError("seal layer " + std::to_string(l) + ": input " + h.value().shape_string() + " with W " +
                           it->second.value().shape_string());
    }
    h = ad::relu(ad::spmm(batch.propagation, ad::matmul(h, it->second)));
  }
  Var pooled = ad::spmm(batch.pool, h);
  return ad::add_row(ad::matmul(pooled, params.at("cls.W")), params.at("cls.b"));
}

double forward_seal(const SealParams& params, const EnclosingSubgraph& sg, const SealInputs& inputs) {
  const std::vector<EnclosingSubgraph> one{sg};
  return logits_for(params, inputs, one).front();
}

std::vector<double> predict_seal(const SealParams& params, const SealInputs& inputs, std::span<const NodePair> pairs) {
  const auto subgraphs = extract_all(inputs, pairs);
  auto logits = logits_for(params, inputs, subgraphs);
  for (auto& v : logits) v = sigmoid(v);
  return logits;
}

SealTrainResult train_seal(const AttributedGraph& g, const SplitBundle& bundle, const TrainConfig& cfg) {
  cfg.validate();
  if (bundle.train_pos.empty() || bundle.train_neg.empty()) throw SplitError("seal: bundle has no training pairs");
  const auto start = std::chrono::steady_clock::now();
  const SealInputs inputs = prepare_seal_inputs(g, bundle.message_edges, cfg.label_dim, cfg.hops);

  std::vector<NodePair> train_pairs = bundle.train_pos;
  train_pairs.insert(train_pairs.end(), bundle.train_neg.begin(), bundle.train_neg.end());
  std::vector<double> train_labels(bundle.train_pos.size(), 1.0);
  train_labels.resize(train_pairs.size(), 0.0);
  const auto train_subgraphs = extract_all(inputs, train_pairs);

  std::vector<NodePair> val_pairs = bundle.val_pos;
  val_pairs.insert(val_pairs.end(), bundle.val_neg.begin(), bundle.val_neg.end());
  std::vector<double> val_labels(bundle.val_pos.size(), 1.0);
  val_labels.resize(val_pairs.size(), 0.0);
  const auto val_subgraphs = extract_all(inputs, val_pairs);
  const bool can_validate = !bundle.val_pos.empty() && !bundle.val_neg.empty();

  SealTrainResult result;
  double nodes = 0.0;
  for (const auto& sg : train_subgraphs) nodes += static_cast<double>(sg.nodes.size());
  result.mean_subgraph_nodes = nodes / static_cast<double>(train_subgraphs.size());

  const std::size_t in_width = inputs.node_features.cols() + cfg.label_dim + inputs.edge_features.cols();
  result.params = SealParams::init(in_width, cfg.seal_hidden, cfg.seal_layers, cfg.seed);
  result.params.label_dim = cfg.label_dim;
  result.params.hops = cfg.hops;
  result.params.normalized = cfg.seal_normalized;
  SealParams best = result.params;

  std::mt19937_64 rng(cfg.seed ^ 0x5EA15EA1ULL);
  std::vector<std::size_t> order(train_subgraphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const AdamOptions adam{cfg.lr, cfg.weight_decay};
  EarlyStopping stopper(cfg.patience);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    CurvePoint point;
    point.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<EnclosingSubgraph> chunk;
      std::vector<double> labels;
      for (std::size_t k = begin; k < end; ++k) {
        chunk.push_back(train_subgraphs[order[k]]);
        labels.push_back(train_labels[order[k]]);
      }
      const SealBatch batch = build_batch(chunk, inputs, cfg.seal_normalized);
      try {
        Tape tape;
        const auto bound = bind_parameters(tape, result.params.state);
        Var loss = cross_entropy(forward_seal_on_tape(tape, bound, batch, cfg.seal_layers), labels);
        loss_sum += loss.value()[0] * static_cast<double>(end - begin);
        tape.backward(loss);
        adam_step(result.params.state, collect_gradients(bound), adam);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, std::string("seal diverged: ") + e.what());
      } catch (const OptimizerError& e) {
        throw TrainingError(epoch, std::string("seal diverged: ") + e.what());
      }
    }
    point.loss = loss_sum / static_cast<double>(order.size());
    if (can_validate) {
      std::vector<double> scores;
      try {
        scores = logits_for(result.params, inputs, val_subgraphs);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, std::string("seal diverged: ") + e.what());
      }
      for (auto& s : scores) s = sigmoid(s);
      point.auc = auc(scores, val_labels);
      point.ap = average_precision(scores, val_labels);
    }
    result.curve.push_back(point);
    result.epochs_run = epoch;
    if (stopper.update(epoch, point.auc)) best = result.params;
    if (stopper.should_stop(epoch)) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_auc = stopper.best_score();
  result.params = std::move(best);
  result.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double estimate_subgraph_cost(const AttributedGraph& g, std::size_t pair_count, int hops) {
  if (g.num_nodes() == 0) return 0.0;
  const double mean_degree = 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes());
  double reach = 0.0, layer = 1.0;
  for (int h = 1; h <= hops; ++h) {
    layer *= mean_degree;
    reach += layer;
  }
  // Every subgraph node scans its full neighbour list to find induced edges.
  const double nodes = 2.0 + 2.0 * reach;
  return static_cast<double>(pair_count) * nodes * std::max(1.0, mean_degree);
}

}  // namespace nextcell
