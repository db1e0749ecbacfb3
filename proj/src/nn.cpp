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
#include "nextcell/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nextcell/error.hpp"

namespace nextcell {

// ---------------------------------------------------------------------------
// Layers

Var gcn_propagate(Var h, const SparseMatrix& a_hat, Var w) {
  if (a_hat.rows != a_hat.cols || a_hat.cols != h.value().rows()) {
    throw DimensionError("gcn: adjacency " + std::to_string(a_hat.rows) + "x" + std::to_string(a_hat.cols) +
                         " with features " + h.value().shape_string());
  }
  if (h.value().cols() != w.value().rows()) {
    throw DimensionError("gcn: features " + h.value().shape_string() + " with weights " + w.value().shape_string());
  }
  return ad::spmm(a_hat, ad::matmul(h, w));
}

Var gcn_layer(Var h, const SparseMatrix& a_hat, Var w) { return ad::relu(gcn_propagate(h, a_hat, w)); }

AttentionGraph AttentionGraph::with_self_loops() const {
  AttentionGraph out;
  out.num_nodes = num_nodes;
  out.edges = edges;
  out.edges.reserve(edges.size() + num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) out.edges.push_back({i, i});
  const std::size_t width = edge_features.cols();
  std::vector<double> data(edge_features.data().begin(), edge_features.data().end());
  data.resize(out.edges.size() * width, 0.0);
  out.edge_features = Tensor(out.edges.size(), width, std::move(data));
  return out;
}

GatOutput gat_layer(Var h, const AttentionGraph& graph, Var w, Var w_edge, Var a) {
  Tape& tape = *h.tape;
  const Tensor& hv = h.value();
  if (hv.rows() != graph.num_nodes) {
    throw DimensionError("gat: features " + hv.shape_string() + " for " + std::to_string(graph.num_nodes) + " nodes");
  }
  if (hv.cols() != w.value().rows()) {
    throw DimensionError("gat: features " + hv.shape_string() + " with W " + w.value().shape_string());
  }
  if (graph.edge_features.rows() != graph.edges.size() || graph.edge_features.cols() != w_edge.value().rows()) {
    throw DimensionError("gat: edge features " + graph.edge_features.shape_string() + " for " +
                         std::to_string(graph.edges.size()) + " edges with W_e " + w_edge.value().shape_string());
  }
  const std::size_t hidden = w.value().cols();
  const std::size_t edge_hidden = w_edge.value().cols();
  if (a.value().cols() != 1 || a.value().rows() != 2 * hidden + edge_hidden) {
    throw DimensionError("gat: attention vector " + a.value().shape_string() + ", expected " +
                         std::to_string(2 * hidden + edge_hidden) + "x1");
  }
  for (const auto& e : graph.edges) {
    if (e.src >= graph.num_nodes || e.dst >= graph.num_nodes) {
      throw BoundsError("gat: edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ") outside " +
                        std::to_string(graph.num_nodes) + " nodes");
    }
  }

  GatOutput result;
  result.graph = graph.with_self_loops();
  const auto& edges = result.graph.edges;
  std::vector<std::size_t> src(edges.size()), dst(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    src[k] = edges[k].src;
    dst[k] = edges[k].dst;
  }

  Var wh = ad::matmul(h, w);
  Var we = ad::matmul(tape.constant(result.graph.edge_features), w_edge);
  Var score_dst = ad::matmul(wh, ad::slice_rows(a, 0, hidden));
  Var score_src = ad::matmul(wh, ad::slice_rows(a, hidden, hidden));
  Var score_edge = ad::matmul(we, ad::slice_rows(a, 2 * hidden, edge_hidden));
  Var logits = ad::add(ad::add(ad::gather_rows(score_dst, dst), ad::gather_rows(score_src, src)), score_edge);
  logits = ad::leaky_relu(logits, kAttentionSlope);
  result.alpha = ad::segment_softmax(logits, dst, graph.num_nodes);
  Var messages = ad::mul_col(ad::gather_rows(wh, src), result.alpha);
  result.out = ad::scatter_add_rows(messages, dst, graph.num_nodes);
  return result;
}

Var inner_product_decode(Var z, std::span<const NodePair> pairs) {
  std::vector<std::size_t> u(pairs.size()), v(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    u[k] = pairs[k].src;
    v[k] = pairs[k].dst;
  }
  return ad::sigmoid(ad::row_dot(ad::gather_rows(z, u), ad::gather_rows(z, v)));
}

// ---------------------------------------------------------------------------
// Losses

namespace {

void require_labels(const Tensor& pred, std::span<const double> labels, const char* op) {
  if (pred.cols() != 1 || pred.rows() != labels.size()) {
    throw DimensionError(std::string(op) + ": predictions " + pred.shape_string() + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw DimensionError(std::string(op) + ": no samples");
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

Var bce(Var pred, std::span<const double> labels) {
  const Tensor& p = pred.value();
  require_labels(p, labels, "bce");
  const double n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = clamp_probability(p[i]);
    total += labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  std::vector<double> y(labels.begin(), labels.end());
  const std::size_t ip = pred.id;
  return pred.tape->record(Tensor(1, 1, -total / n), {ip}, [ip, y = std::move(y), n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& pv = t.value(ip);
    Tensor gp(pv.rows(), 1);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double q = clamp_probability(pv[i]);
      gp[i] = -g * (y[i] / q - (1.0 - y[i]) / (1.0 - q)) / n;
    }
    Tensor& buf = t.grad_buffer(ip);
    for (std::size_t i = 0; i < gp.size(); ++i) buf[i] += gp[i];
  }, "bce");
}

Var kl_divergence(Var mu, Var logstd) {
  const Tensor& m = mu.value();
  const Tensor& ls = logstd.value();
  if (!m.same_shape(ls)) throw DimensionError("kl: mu " + m.shape_string() + " vs logstd " + ls.shape_string());
  if (m.rows() == 0) throw DimensionError("kl: no rows");
  const double n = static_cast<double>(m.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) total += 1.0 + 2.0 * ls[i] - m[i] * m[i] - std::exp(2.0 * ls[i]);
  const std::size_t im = mu.id, il = logstd.id;
  return mu.tape->record(Tensor(1, 1, -0.5 * total / n), {im, il}, [im, il, n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (t.requires_grad(im)) {
      const Tensor& mv = t.value(im);
      Tensor& buf = t.grad_buffer(im);
      for (std::size_t i = 0; i < mv.size(); ++i) buf[i] += g * mv[i] / n;
    }
    if (t.requires_grad(il)) {
      const Tensor& lv = t.value(il);
      Tensor& buf = t.grad_buffer(il);
      for (std::size_t i = 0; i < lv.size(); ++i) buf[i] += g * (std::exp(2.0 * lv[i]) - 1.0) / n;
    }
  }, "kl_divergence");
}

Var cross_entropy(Var logits, std::span<const double> labels) {
  const Tensor& z = logits.value();
  require_labels(z, labels, "cross_entropy");
  const double n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double softplus = std::max(z[i], 0.0) + std::log1p(std::exp(-std::abs(z[i])));
    total += softplus - labels[i] * z[i];
  }
  std::vector<double> y(labels.begin(), labels.end());
  const std::size_t iz = logits.id;
  return logits.tape->record(Tensor(1, 1, total / n), {iz}, [iz, y = std::move(y), n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& zv = t.value(iz);
    Tensor& buf = t.grad_buffer(iz);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double s = zv[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-zv[i])) : std::exp(zv[i]) / (1.0 + std::exp(zv[i]));
      buf[i] += g * (s - y[i]) / n;
    }
  }, "cross_entropy");
}

// ---------------------------------------------------------------------------
// Parameters and optimisation

void ModelState::add(const std::string& name, Tensor value) {
  Parameter p;
  p.first_moment = Tensor(value.rows(), value.cols());
  p.second_moment = Tensor(value.rows(), value.cols());
  p.value = std::move(value);
  params[name] = std::move(p);
}

const Tensor& ModelState::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second.value;
}

std::size_t ModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params) n += p.value.size();
  return n;
}

void adam_step(ModelState& state, const std::map<std::string, Tensor>& grads, const AdamOptions& opts) {
  for (const auto& [name, p] : state.params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw DimensionError("adam: no gradient for '" + name + "'");
    if (!it->second.same_shape(p.value)) {
      throw DimensionError("adam: gradient " + it->second.shape_string() + " for '" + name + "' of shape " +
                           p.value.shape_string());
    }
    if (!it->second.all_finite()) throw OptimizerError("adam: non-finite gradient for '" + name + "'");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(opts.beta1, t);
  const double bias2 = 1.0 - std::pow(opts.beta2, t);
  for (auto& [name, p] : state.params) {
    const Tensor& g = grads.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = g[i] + opts.weight_decay * p.value[i];
      p.first_moment[i] = opts.beta1 * p.first_moment[i] + (1.0 - opts.beta1) * gi;
      p.second_moment[i] = opts.beta2 * p.second_moment[i] + (1.0 - opts.beta2) * gi * gi;
      const double m_hat = p.first_moment[i] / bias1;
      const double v_hat = p.second_moment[i] / bias2;
      p.value[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
    }
  }
}

std::map<std::string, Var> bind_parameters(Tape& tape, const ModelState& state) {
  std::map<std::string, Var> bound;
  for (const auto& [name, p] : state.params) bound.emplace(name, tape.parameter(p.value));
  return bound;
}

std::map<std::string, Tensor> collect_gradients(const std::map<std::string, Var>& bound) {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, v] : bound) {
    const Tensor& g = v.grad();
    grads.emplace(name, g.empty() ? Tensor(v.value().rows(), v.value().cols()) : g);
  }
  return grads;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Tensor>& point, double h) {
  auto evaluate = [&](const std::vector<Tensor>& at, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> inputs;
    inputs.reserve(at.size());
    for (const auto& t : at) inputs.push_back(tape.parameter(t));
    Var out = f(tape, inputs);
    if (out.value().size() != 1) throw DimensionError("grad_check: function must return a scalar");
    if (grads) {
      tape.backward(out);
      for (const auto& v : inputs) {
        grads->push_back(v.grad().empty() ? Tensor(v.value().rows(), v.value().cols()) : v.grad());
      }
    }
    return out.value()[0];
  };

  std::vector<Tensor> analytic;
  evaluate(point, &analytic);

  GradCheckResult result;
  std::vector<Tensor> probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    for (std::size_t j = 0; j < point[i].size(); ++j) {
      const double x = point[i][j];
      probe[i][j] = x + h;
      const double plus = evaluate(probe, nullptr);
      probe[i][j] = x - h;
      const double minus = evaluate(probe, nullptr);
      probe[i][j] = x;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) result = {err, i, j};
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr const char* kCheckpointMagic = "nextcell-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  for (const auto& [key, value] : ckpt.meta) out << "meta " << key << ' ' << value << '\n';
  out << "step " << ckpt.state.step << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [name, p] : ckpt.state.params) {
    out << "param " << name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (std::size_t i = 0; i < p.value.size(); ++i) out << (i ? " " : "") << p.value[i];
    out << '\n';
  }
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) throw DataError("not a nextcell checkpoint");
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  std::string tag;
  while (in >> tag) {
    if (tag == "end") return ckpt;
    if (tag == "meta") {
      std::string key, value;
      in >> key;
      std::getline(in >> std::ws, value);
      ckpt.meta[key] = value;
    } else if (tag == "step") {
      in >> ckpt.state.step;
    } else if (tag == "param") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(in >> name >> rows >> cols)) throw DataError("checkpoint: truncated parameter header");
      Tensor t(rows, cols);
      for (auto& v : t.data())
        if (!(in >> v)) throw DataError("checkpoint: truncated values for '" + name + "'");
      ckpt.state.add(name, std::move(t));
    } else {
      throw DataError("checkpoint: unexpected token '" + tag + "'");
    }
  }
  throw DataError("checkpoint: missing end marker");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace nextcell
