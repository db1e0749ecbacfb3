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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/nn.hpp"

namespace nextcell {

enum class ThresholdObjective { F1, MCC };

/// Hyperparameters shared by both link predictors; fields that only one
/// model reads are grouped below.
struct TrainConfig {
  double lr = 0.02;
  int max_epochs = 200;
  /// Epochs without validation-AUC improvement tolerated before stopping.
  int patience = 25;
  std::uint64_t seed = 1;
  double weight_decay = 0.0;
  std::vector<double> threshold_grid = default_threshold_grid();
  ThresholdObjective threshold_objective = ThresholdObjective::F1;

  // VGAE
  std::size_t hidden = 32;
  std::size_t latent = 16;
  /// Defaults to 1 / num_nodes when unset.
  std::optional<double> kl_weight;
  /// Draw fresh training negatives every epoch instead of reusing the
  /// split's fixed train negatives.
  bool resample_negatives = true;

  // SEAL
  int hops = 1;
  std::size_t seal_hidden = 32;
  int seal_layers = 2;
  /// One-hot width of node labels; larger labels share the last slot.
  std::size_t label_dim = 8;
  /// Use D^-1/2 (A+I) D^-1/2 instead of the raw neighbour sum.
  bool seal_normalized = false;
  std::size_t batch_size = 32;

  static std::vector<double> default_threshold_grid();
  static TrainConfig vgae_defaults();
  static TrainConfig seal_defaults();

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct CurvePoint {
  int epoch = 0;
  double loss = 0.0;
  double auc = 0.0;
  double ap = 0.0;
};

/// Rows `epoch,loss,auc,ap` with a header.
void write_curve(std::ostream& out, std::span<const CurvePoint> curve);

struct ThresholdChoice {
  double threshold = 0.5;
  double objective = 0.0;
  /// Every grid point scored the same (e.g. constant scores).
  bool degenerate = false;
};

/// Grid threshold with the best objective on validation scores; ties go to
/// the threshold closest to 0.5, then the smaller one. Throws ThresholdError
/// when labels hold a single class.
ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const double> labels,
                               std::span<const double> grid,
                               ThresholdObjective objective = ThresholdObjective::F1);

/// Early-stopping bookkeeping on a maximised score.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  /// Records the score of `epoch`; returns true when it is a new best.
  bool update(int epoch, double score);
  /// True once more than `patience` epochs passed without improvement.
  bool should_stop(int epoch) const { return epoch - best_epoch_ > patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_score_ = -1.0;
};

/// `count` distinct UE-cell pairs outside `known`, drawn uniformly.
/// Throws SamplingError when fewer exist.
std::vector<NodePair> draw_training_negatives(const AttributedGraph& g, std::span<const NodePair> known,
                                              std::size_t count, std::uint64_t seed);

/// Model view of a graph restricted to a set of message edges.
struct GraphInputs {
  std::size_t num_nodes = 0;
  /// Standardised node features.
  Tensor node_features;
  /// Both directions of every message edge, standardised edge features.
  AttentionGraph attention;
  SparseMatrix a_hat;
};

GraphInputs prepare_inputs(const AttributedGraph& g, std::span<const NodePair> message_edges);

/// Standardised edge-feature rows of g, in edge order.
Tensor standardized_edge_features(const AttributedGraph& g);

}  // namespace nextcell
