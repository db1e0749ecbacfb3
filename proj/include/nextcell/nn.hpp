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
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nextcell/autodiff.hpp"
#include "nextcell/node_pair.hpp"
#include "nextcell/tensor.hpp"

namespace nextcell {

// ---------------------------------------------------------------------------
// Layers

/// ReLU(A_hat H W).
Var gcn_layer(Var h, const SparseMatrix& a_hat, Var w);
/// A_hat H W without activation; used for the mean/logstd heads.
Var gcn_propagate(Var h, const SparseMatrix& a_hat, Var w);

/// Directed message edges for attention: messages flow src -> dst and are
/// normalised over each dst's incoming set.
struct AttentionGraph {
  std::size_t num_nodes = 0;
  std::vector<NodePair> edges;
  /// One row per edge, same order as `edges`.
  Tensor edge_features;

  /// Appends a self-loop with zero edge features for every node.
  AttentionGraph with_self_loops() const;
};

struct GatOutput {
  Var out;
  /// Attention coefficient per edge of the self-looped graph (m x 1).
  Var alpha;
  /// The self-looped graph the coefficients refer to.
  AttentionGraph graph;
};

/// Single-head attention layer with edge features. Logits are
/// LeakyReLU(a^T [W h_dst || W h_src || W_e x_edge]) with slope 0.2, softmax
/// over each node's incoming edges, output row i = sum_j alpha_ij W h_j.
/// `a` has 2*cols(W) + cols(W_e) rows. Self-loops are added here.
GatOutput gat_layer(Var h, const AttentionGraph& graph, Var w, Var w_edge, Var a);

inline constexpr double kAttentionSlope = 0.2;

/// sigmoid(z_u . z_v) per pair.
Var inner_product_decode(Var z, std::span<const NodePair> pairs);

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kProbabilityClamp = 1e-12;

/// -mean(y log p + (1-y) log(1-p)); p is clamped to [1e-12, 1-1e-12].
Var bce(Var pred, std::span<const double> labels);
/// -0.5 * mean over rows of sum_d (1 + 2 logstd - mu^2 - exp(2 logstd)).
Var kl_divergence(Var mu, Var logstd);
/// Two-class softmax cross-entropy from a single logit column, the logit
/// being score(class 1) - score(class 0). Labels are 0 or 1.
Var cross_entropy(Var logits, std::span<const double> labels);

// ---------------------------------------------------------------------------
// Parameters and optimisation

struct Parameter {
  Tensor value;
  Tensor first_moment;
  Tensor second_moment;
};

/// Named parameters with Adam state. std::map keeps iteration order stable.
struct ModelState {
  std::map<std::string, Parameter> params;
  std::int64_t step = 0;

  void add(const std::string& name, Tensor value);
  const Tensor& at(const std::string& name) const;
  std::size_t parameter_count() const;
};

struct AdamOptions {
  double lr = 0.01;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam step. weight_decay * theta is added to each gradient before the
/// moment updates. Throws OptimizerError on a non-finite gradient and
/// DimensionError when a gradient is missing or misshaped.
void adam_step(ModelState& state, const std::map<std::string, Tensor>& grads, const AdamOptions& opts);

/// Places every parameter of `state` on `tape`; returns name -> Var.
std::map<std::string, Var> bind_parameters(Tape& tape, const ModelState& state);
/// Reads gradients of bound parameters after tape.backward().
std::map<std::string, Tensor> collect_gradients(const std::map<std::string, Var>& bound);

/// Glorot/Xavier uniform initialisation.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Gradient checking

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Denominator floor of the relative error, so coordinates whose gradient is
/// numerically zero do not dominate.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

/// Compares reverse-mode gradients of f at `point` against central
/// differences (f(x+h) - f(x-h)) / 2h for every coordinate of every input.
GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Tensor>& point, double h);

// ---------------------------------------------------------------------------
// Checkpoints

/// Text checkpoint: header line "nextcell-checkpoint 1", `meta key value`
/// lines, then `param name rows cols` followed by the values on one line.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ModelState state;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nextcell
