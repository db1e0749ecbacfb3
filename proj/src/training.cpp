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
#include "nextcell/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <unordered_set>

#include "nextcell/error.hpp"
#include "nextcell/metrics.hpp"

namespace nextcell {

std::vector<double> TrainConfig::default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
  return grid;
}

TrainConfig TrainConfig::vgae_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::seal_defaults() {
  TrainConfig cfg;
  cfg.lr = 0.005;
  cfg.max_epochs = 60;
  cfg.patience = 10;
  cfg.weight_decay = 5e-4;
  return cfg;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* why) {
    if (!ok) throw ConfigError(std::string(field) + ": " + why);
  };
  require(lr > 0.0 && std::isfinite(lr), "lr", "must be positive");
  require(max_epochs >= 1, "max_epochs", "must be at least 1");
  require(patience >= 0 && patience < max_epochs, "patience", "must be in [0, max_epochs)");
  require(weight_decay >= 0.0, "weight_decay", "must be nonnegative");
  require(!threshold_grid.empty(), "threshold_grid", "must not be empty");
  for (double t : threshold_grid) require(t >= 0.0 && t <= 1.0, "threshold_grid", "values must be in [0, 1]");
  require(hidden > 0, "hidden", "must be positive");
  require(latent > 0, "latent", "must be positive");
  require(!kl_weight || *kl_weight >= 0.0, "kl_weight", "must be nonnegative");
  require(hops >= 1, "hops", "must be at least 1");
  require(seal_hidden > 0, "seal_hidden", "must be positive");
  require(seal_layers >= 1, "seal_layers", "must be at least 1");
  require(label_dim >= 2, "label_dim", "must be at least 2");
  require(batch_size >= 1, "batch_size", "must be positive");
}

void write_curve(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "epoch,loss,auc,ap\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : curve) out << p.epoch << ',' << p.loss << ',' << p.auc << ',' << p.ap << '\n';
}

ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const double> labels,
                               std::span<const double> grid, ThresholdObjective objective) {
  if (scores.size() != labels.size()) throw ThresholdError("scores and labels differ in length");
  if (grid.empty()) throw ThresholdError("empty threshold grid");
  const auto n_pos = std::count_if(labels.begin(), labels.end(), [](double y) { return y > 0.5; });
  if (n_pos == 0 || n_pos == static_cast<std::ptrdiff_t>(labels.size())) {
    throw ThresholdError("threshold tuning needs both positive and negative labels");
  }
  ThresholdChoice best;
  best.objective = -std::numeric_limits<double>::infinity();
  double first = 0.0;
  bool all_equal = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = thresholded_metrics(scores, labels, grid[i]);
    const double value = objective == ThresholdObjective::F1 ? m.f1 : m.mcc;
    if (i == 0) first = value;
    if (value != first) all_equal = false;
    const double dist = std::abs(grid[i] - 0.5);
    const double best_dist = std::abs(best.threshold - 0.5);
    if (value > best.objective || (value == best.objective &&
                                   (dist < best_dist || (dist == best_dist && grid[i] < best.threshold)))) {
      best.threshold = grid[i];
      best.objective = value;
    }
  }
  const bool constant_scores = std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores[0]; });
  best.degenerate = all_equal || constant_scores;
  return best;
}

bool EarlyStopping::update(int epoch, double score) {
  if (score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

Tensor standardized_edge_features(const AttributedGraph& g) {
  Tensor x(g.num_edges(), g.edge_feature_width());
  for (std::size_t k = 0; k < g.num_edges(); ++k)
    std::copy(g.edges()[k].features.begin(), g.edges()[k].features.end(), x.row(k).begin());
  return standardize_columns(x);
}

GraphInputs prepare_inputs(const AttributedGraph& g, std::span<const NodePair> message_edges) {
  GraphInputs in;
  in.num_nodes = g.num_nodes();
  in.node_features = standardize_columns(g.node_feature_matrix());
  const Tensor edge_x = standardized_edge_features(g);
  const std::size_t width = g.edge_feature_width();

  in.attention.num_nodes = g.num_nodes();
  std::vector<double> feats;
  feats.reserve(2 * message_edges.size() * width);
  for (const auto& p : message_edges) {
    const auto idx = g.edge_index(p.src, p.dst);
    if (!idx) {
      throw BoundsError("message edge (" + std::to_string(p.src) + "," + std::to_string(p.dst) + ") is not a graph edge");
    }
    in.attention.edges.push_back({p.src, p.dst});
    in.attention.edges.push_back({p.dst, p.src});
    const auto row = edge_x.row(*idx);
    feats.insert(feats.end(), row.begin(), row.end());
    feats.insert(feats.end(), row.begin(), row.end());
  }
  in.attention.edge_features = Tensor(in.attention.edges.size(), width, std::move(feats));
  in.a_hat = normalized_adjacency(g.num_nodes(), message_edges);
  return in;
}

std::vector<NodePair> draw_training_negatives(const AttributedGraph& g, std::span<const NodePair> known,
                                              std::size_t count, std::uint64_t seed) {
  const std::size_t n_ue = g.num_ues(), n_cell = g.num_cells();
  std::unordered_set<NodePair, NodePairHash> taken;
  for (const auto& p : known) taken.insert({std::min(p.src, p.dst), std::max(p.src, p.dst)});
  std::size_t known_pairs = 0;
  for (const auto& p : taken)
    if (p.src < n_ue && p.dst >= n_ue) ++known_pairs;
  const std::size_t available = n_ue * n_cell - known_pairs;
  if (available < count) {
    throw SamplingError("training negatives: need " + std::to_string(count) + ", only " + std::to_string(available) +
                        " available (short by " + std::to_string(count - available) + ")");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_ue(0, n_ue - 1), pick_cell(n_ue, n_ue + n_cell - 1);
  std::vector<NodePair> out;
  out.reserve(count);
  while (out.size() < count) {
    const NodePair p{pick_ue(rng), pick_cell(rng)};
    if (taken.insert(p).second) out.push_back(p);
  }
  return out;
}

}  // namespace nextcell
