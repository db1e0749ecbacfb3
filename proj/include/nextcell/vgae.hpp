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
#include <span>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/metrics.hpp"
#include "nextcell/nn.hpp"
#include "nextcell/splitter.hpp"
#include "nextcell/training.hpp"

namespace nextcell {

inline constexpr double kLogstdMin = -10.0;
inline constexpr double kLogstdMax = 10.0;

/// Parameters: "gat.W", "gat.W_e", "gat.a", "mu.W", "logstd.W".
struct VgaeParams {
  ModelState state;
  std::size_t in_width = 0;
  std::size_t edge_width = 0;
  std::size_t hidden = 0;
  std::size_t latent = 0;

  static VgaeParams init(std::size_t in_width, std::size_t edge_width, std::size_t hidden, std::size_t latent,
                         std::uint64_t seed);
  Checkpoint to_checkpoint() const;
  /// Throws DataError when the checkpoint is not a VGAE checkpoint.
  static VgaeParams from_checkpoint(const Checkpoint& ckpt);
};

struct VgaeTape {
  Var z;
  Var mu;
  Var logstd;
};

/// GAT -> ReLU -> two GCN heads. With `noise` (n x latent) the latent is
/// mu + exp(logstd) * noise, otherwise mu. logstd is clamped to [-10, 10].
VgaeTape encode_on_tape(Tape& tape, const std::map<std::string, Var>& params, const GraphInputs& inputs,
                        const Tensor* noise);

/// bce over positives (label 1) and negatives (label 0) plus kl_weight * KL.
Var vgae_loss(Tape& tape, const std::map<std::string, Var>& params, const GraphInputs& inputs,
              std::span<const NodePair> pos, std::span<const NodePair> neg, const Tensor* noise,
              double kl_weight);

struct Encoding {
  Tensor z;
  Tensor mu;
  Tensor logstd;
};

/// Forward pass. With `sample` the noise is drawn from N(0, I) under `seed`.
Encoding encode(const GraphInputs& inputs, const VgaeParams& params, bool sample, std::uint64_t seed);

/// Mean-path link probabilities. Throws BoundsError for out-of-range pairs.
std::vector<double> predict_links(const VgaeParams& params, const GraphInputs& inputs,
                                  std::span<const NodePair> pairs);
/// Decoder only, from a cached latent matrix.
std::vector<double> decode_pairs(const Tensor& z, std::span<const NodePair> pairs);

struct TrainResult {
  std::vector<CurvePoint> curve;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_val_auc = 0.0;
  double train_time_s = 0.0;
};

struct VgaeTrainResult : TrainResult {
  VgaeParams params;
};

/// Full-batch training with Adam and early stopping on validation AUC;
/// returns the best-on-validation parameters. Throws TrainingError on a
/// non-finite loss.
VgaeTrainResult train_vgae(const AttributedGraph& g, const SplitBundle& bundle, const TrainConfig& cfg);

}  // namespace nextcell
