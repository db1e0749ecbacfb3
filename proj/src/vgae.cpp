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
#include "nextcell/vgae.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "nextcell/error.hpp"

namespace nextcell {
namespace {

std::map<std::string, Var> bind_constants(Tape& tape, const ModelState& state) {
  std::map<std::string, Var> bound;
  for (const auto& [name, p] : state.params) bound.emplace(name, tape.constant(p.value));
  return bound;
}

const Var& param(const std::map<std::string, Var>& params, const char* name) {
  auto it = params.find(name);
  if (it == params.end()) throw DataError(std::string("missing VGAE parameter '") + name + "'");
  return it->second;
}

Tensor standard_normal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = gauss(rng);
  return t;
}

void check_pairs(std::span<const NodePair> pairs, std::size_t num_nodes) {
  for (const auto& p : pairs) {
    if (p.src >= num_nodes || p.dst >= num_nodes) {
      throw BoundsError("pair (" + std::to_string(p.src) + "," + std::to_string(p.dst) + ") outside " +
                        std::to_string(num_nodes) + " nodes");
    }
  }
}

std::size_t meta_size(const Checkpoint& ckpt, const char* key) {
  auto it = ckpt.meta.find(key);
  if (it == ckpt.meta.end()) throw DataError(std::string("checkpoint lacks '") + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

VgaeParams VgaeParams::init(std::size_t in_width, std::size_t edge_width, std::size_t hidden, std::size_t latent,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VgaeParams p;
  p.in_width = in_width;
  p.edge_width = edge_width;
  p.hidden = hidden;
  p.latent = latent;
  p.state.add("gat.W", glorot_uniform(in_width, hidden, rng));
  p.state.add("gat.W_e", glorot_uniform(edge_width, hidden, rng));
  p.state.add("gat.a", glorot_uniform(3 * hidden, 1, rng));
  p.state.add("mu.W", glorot_uniform(hidden, latent, rng));
  p.state.add("logstd.W", glorot_uniform(hidden, latent, rng));
  return p;
}

Checkpoint VgaeParams::to_checkpoint() const {
  Checkpoint c;
  c.meta = {{"model", "vgae"},
            {"in_width", std::to_string(in_width)},
            {"edge_width", std::to_string(edge_width)},
            {"hidden", std::to_string(hidden)},
            {"latent", std::to_string(latent)}};
  c.state = state;
  return c;
}

VgaeParams VgaeParams::from_checkpoint(const Checkpoint& ckpt) {
  auto it = ckpt.meta.find("model");
  if (it == ckpt.meta.end() || it->second != "vgae") throw DataError("checkpoint is not a VGAE checkpoint");
  VgaeParams p;
  p.in_width = meta_size(ckpt, "in_width");
  p.edge_width = meta_size(ckpt, "edge_width");
  p.hidden = meta_size(ckpt, "hidden");
  p.latent = meta_size(ckpt, "latent");
  p.state = ckpt.state;
  for (const char* name : {"gat.W", "gat.W_e", "gat.a", "mu.W", "logstd.W"}) p.state.at(name);
  return p;
}

VgaeTape encode_on_tape(Tape& tape, const std::map<std::string, Var>& params, const GraphInputs& inputs,
                        const Tensor* noise) {
  Var x = tape.constant(inputs.node_features);
  const auto gat = gat_layer(x, inputs.attention, param(params, "gat.W"), param(params, "gat.W_e"),
                             param(params, "gat.a"));
  Var h = ad::relu(gat.out);
  VgaeTape out;
  out.mu = gcn_propagate(h, inputs.a_hat, param(params, "mu.W"));
  out.logstd = ad::clamp(gcn_propagate(h, inputs.a_hat, param(params, "logstd.W")), kLogstdMin, kLogstdMax);
  if (noise) {
    if (!noise->same_shape(out.mu.value())) {
      throw DimensionError("vgae: noise " + noise->shape_string() + " for latent " + out.mu.value().shape_string());
    }
    out.z = ad::add(out.mu, ad::mul(ad::exp(out.logstd), tape.constant(*noise)));
  } else {
    out.z = out.mu;
  }
  return out;
}

Var vgae_loss(Tape& tape, const std::map<std::string, Var>& params, const GraphInputs& inputs,
              std::span<const NodePair> pos, std::span<const NodePair> neg, const Tensor* noise, double kl_weight) {
  const auto enc = encode_on_tape(tape, params, inputs, noise);
  std::vector<NodePair> pairs(pos.begin(), pos.end());
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  std::vector<double> labels(pos.size(), 1.0);
  labels.resize(pairs.size(), 0.0);
  Var recon = bce(inner_product_decode(enc.z, pairs), labels);
  return ad::add(recon, ad::scale(kl_divergence(enc.mu, enc.logstd), kl_weight));
}

Encoding encode(const GraphInputs& inputs, const VgaeParams& params, bool sample, std::uint64_t seed) {
  if (inputs.node_features.cols() != params.in_width) {
    throw DimensionError("vgae: graph has " + std::to_string(inputs.node_features.cols()) +
                         " node features, model expects " + std::to_string(params.in_width));
  }
  Tape tape;
  const auto bound = bind_constants(tape, params.state);
  Tensor noise;
  if (sample) noise = standard_normal(inputs.num_nodes, params.latent, seed);
  const auto enc = encode_on_tape(tape, bound, inputs, sample ? &noise : nullptr);
  return {enc.z.value(), enc.mu.value(), enc.logstd.value()};
}

std::vector<double> decode_pairs(const Tensor& z, std::span<const NodePair> pairs) {
  check_pairs(pairs, z.rows());
  std::vector<double> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    double dot = 0.0;
    const auto a = z.row(pairs[k].src), b = z.row(pairs[k].dst);
    for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
    out[k] = dot >= 0.0 ? 1.0 / (1.0 + std::exp(-dot)) : std::exp(dot) / (1.0 + std::exp(dot));
  }
  return out;
}

std::vector<double> predict_links(const VgaeParams& params, const GraphInputs& inputs,
                                  std::span<const NodePair> pairs) {
  check_pairs(pairs, inputs.num_nodes);
  return decode_pairs(encode(inputs, params, false, 0).z, pairs);
}

VgaeTrainResult train_vgae(const AttributedGraph& g, const SplitBundle& bundle, const TrainConfig& cfg) {
  cfg.validate();
  if (bundle.train_pos.empty() || bundle.train_neg.empty()) throw SplitError("vgae: bundle has no training pairs");
  const auto start = std::chrono::steady_clock::now();
  const GraphInputs inputs = prepare_inputs(g, bundle.message_edges);
  const double kl_weight = cfg.kl_weight.value_or(1.0 / static_cast<double>(g.num_nodes()));

  VgaeTrainResult result;
  result.params = VgaeParams::init(inputs.node_features.cols(), g.edge_feature_width(), cfg.hidden, cfg.latent, cfg.seed);
  VgaeParams best = result.params;

  std::vector<NodePair> val_pairs = bundle.val_pos;
  val_pairs.insert(val_pairs.end(), bundle.val_neg.begin(), bundle.val_neg.end());
  std::vector<double> val_labels(bundle.val_pos.size(), 1.0);
  val_labels.resize(val_pairs.size(), 0.0);
  const bool can_validate = !bundle.val_pos.empty() && !bundle.val_neg.empty();

  const AdamOptions adam{cfg.lr, cfg.weight_decay};
  EarlyStopping stopper(cfg.patience);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    CurvePoint point;
    point.epoch = epoch;
    try {
      Tape tape;
      const auto bound = bind_parameters(tape, result.params.state);
      const Tensor noise = standard_normal(g.num_nodes(), cfg.latent, cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
      const std::vector<NodePair> negatives =
          cfg.resample_negatives
              ? draw_training_negatives(g, bundle.train_pos, bundle.train_pos.size(),
                                        cfg.seed * 7919ULL + static_cast<std::uint64_t>(epoch))
              : bundle.train_neg;
      Var loss = vgae_loss(tape, bound, inputs, bundle.train_pos, negatives, &noise, kl_weight);
      point.loss = loss.value()[0];
      tape.backward(loss);
      adam_step(result.params.state, collect_gradients(bound), adam);
      if (can_validate) {
        const auto scores = predict_links(result.params, inputs, val_pairs);
        point.auc = auc(scores, val_labels);
        point.ap = average_precision(scores, val_labels);
      }
    } catch (const NumericError& e) {
      throw TrainingError(epoch, std::string("vgae diverged: ") + e.what());
    } catch (const OptimizerError& e) {
      throw TrainingError(epoch, std::string("vgae diverged: ") + e.what());
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

}  // namespace nextcell
