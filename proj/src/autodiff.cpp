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
#include "nextcell/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nextcell/error.hpp"

namespace nextcell {

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

Var Tape::parameter(Tensor value) {
  require_finite(value, "parameter");
  nodes_.push_back(Node{std::move(value), {}, nullptr, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward, const char* op) {
  require_finite(value, op);
  const bool needs = std::any_of(parents.begin(), parents.end(), [&](std::size_t p) { return nodes_[p].requires_grad; });
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("backward: variable belongs to another tape");
  const Tensor& v = nodes_[loss.id].value;
  if (v.rows() != 1 || v.cols() != 1) throw DimensionError("backward: loss must be 1x1, got " + v.shape_string());
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

namespace ad {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": operand shapes " + a.shape_string() + " and " + b.shape_string());
  }
}

// Accumulates `g` into the gradient of `id` if it needs one.
void accumulate(Tape& tape, std::size_t id, const Tensor& g) {
  if (!tape.requires_grad(id)) return;
  Tensor& buf = tape.grad_buffer(id);
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <class F>
Var unary(Var a, const char* op, F&& f, Tape::BackwardFn backward) {
  Tensor out(a.value().rows(), a.value().cols());
  auto in = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return a.tape->record(std::move(out), {a.id}, std::move(backward), op);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tensor out = nextcell::matmul(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t, ia, nextcell::matmul(g, transpose(t.value(ib))));
    if (t.requires_grad(ib)) accumulate(t, ib, nextcell::matmul(transpose(t.value(ia)), g));
  }, "matmul");
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, t.grad(self));
  }, "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    if (t.requires_grad(ib)) {
      Tensor neg = t.grad(self);
      for (auto& v : neg.data()) v = -v;
      accumulate(t, ib, neg);
    }
  }, "sub");
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor ga = g;
      auto x = t.value(ib).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= x[i];
      accumulate(t, ia, ga);
    }
    if (t.requires_grad(ib)) {
      Tensor gb = g;
      auto x = t.value(ia).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= x[i];
      accumulate(t, ib, gb);
    }
  }, "mul");
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id;
  return unary(a, "scale", [s](double x) { return s * x; }, [ia, s](Tape& t, std::size_t self) {
    Tensor g = t.grad(self);
    for (auto& v : g.data()) v *= s;
    accumulate(t, ia, g);
  });
}

Var add_row(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw DimensionError("add_row: " + av.shape_string() + " + bias " + bv.shape_string());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  const std::size_t ia = a.id, ib = bias.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate(t, ia, g);
    if (t.requires_grad(ib)) {
      Tensor gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      accumulate(t, ib, gb);
    }
  }, "add_row");
}

Var mul_col(Var a, Var w) {
  const Tensor& av = a.value();
  const Tensor& wv = w.value();
  if (wv.cols() != 1 || wv.rows() != av.rows()) {
    throw DimensionError("mul_col: " + av.shape_string() + " by column " + wv.shape_string());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= wv(r, 0);
  const std::size_t ia = a.id, iw = w.id;
  return a.tape->record(std::move(out), {ia, iw}, [ia, iw](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& wc = t.value(iw);
    if (t.requires_grad(ia)) {
      Tensor ga = g;
      for (std::size_t r = 0; r < ga.rows(); ++r)
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) *= wc(r, 0);
      accumulate(t, ia, ga);
    }
    if (t.requires_grad(iw)) {
      Tensor gw(wc.rows(), 1);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gw(r, 0) += g(r, c) * x(r, c);
      accumulate(t, iw, gw);
    }
  }, "mul_col");
}

Var relu(Var a) {
  const std::size_t ia = a.id;
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [ia](Tape& t, std::size_t self) {
    Tensor g = t.grad(self);
    auto x = t.value(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] <= 0.0) g[i] = 0.0;
    accumulate(t, ia, g);
  });
}

Var leaky_relu(Var a, double slope) {
  const std::size_t ia = a.id;
  return unary(a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
               [ia, slope](Tape& t, std::size_t self) {
                 Tensor g = t.grad(self);
                 auto x = t.value(ia).data();
                 for (std::size_t i = 0; i < g.size(); ++i)
                   if (x[i] <= 0.0) g[i] *= slope;
                 accumulate(t, ia, g);
               });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id;
  return unary(a, "sigmoid",
               [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
               [ia](Tape& t, std::size_t self) {
                 // Output node is self; s' = s (1 - s).
                 Tensor g = t.grad(self);
                 auto s = t.value(self).data();
                 for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (1.0 - s[i]);
                 accumulate(t, ia, g);
               });
}

Var exp(Var a) {
  const std::size_t ia = a.id;
  return unary(a, "exp", [](double x) { return std::exp(x); }, [ia](Tape& t, std::size_t self) {
    Tensor g = t.grad(self);
    auto e = t.value(self).data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= e[i];
    accumulate(t, ia, g);
  });
}

Var clamp(Var a, double lo, double hi) {
  const std::size_t ia = a.id;
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); }, [ia, lo, hi](Tape& t, std::size_t self) {
    Tensor g = t.grad(self);
    auto x = t.value(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] < lo || x[i] > hi) g[i] = 0.0;
    accumulate(t, ia, g);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id;
  return a.tape->record(Tensor(1, 1, s), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    accumulate(t, ia, Tensor(x.rows(), x.cols(), t.grad(self)[0]));
  }, "sum");
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (begin + count > av.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                         ") of " + av.shape_string());
  }
  const std::size_t c = av.cols();
  Tensor out(count, c, std::vector<double>(av.data().begin() + begin * c, av.data().begin() + (begin + count) * c));
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor full(x.rows(), x.cols());
    std::copy(g.data().begin(), g.data().end(), full.data().begin() + begin * x.cols());
    accumulate(t, ia, full);
  }, "slice_rows");
}

Var row_dot(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "row_dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += av(r, c) * bv(r, c);
    out(r, 0) = s;
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor ga(x.rows(), x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) ga(r, c) = g(r, 0) * y(r, c);
      accumulate(t, ia, ga);
    }
    if (t.requires_grad(ib)) {
      Tensor gb(y.rows(), y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t c = 0; c < y.cols(); ++c) gb(r, c) = g(r, 0) * x(r, c);
      accumulate(t, ib, gb);
    }
  }, "row_dot");
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Tensor& av = a.value();
  const std::size_t c = av.cols();
  Tensor out(index.size(), c);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= av.rows()) {
      throw BoundsError("gather_rows: index " + std::to_string(index[k]) + " outside " + av.shape_string());
    }
    std::copy_n(av.data().begin() + index[k] * c, c, out.data().begin() + k * c);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& buf = t.grad_buffer(ia);
    const std::size_t cols = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < cols; ++j) buf(idx[k], j) += g(k, j);
  }, "gather_rows");
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t rows) {
  const Tensor& av = a.value();
  if (index.size() != av.rows()) {
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " + av.shape_string());
  }
  const std::size_t c = av.cols();
  Tensor out(rows, c);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= rows) throw BoundsError("scatter_add_rows: index " + std::to_string(index[k]) + " >= " + std::to_string(rows));
    for (std::size_t j = 0; j < c; ++j) out(index[k], j) += av(k, j);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& buf = t.grad_buffer(ia);
    const std::size_t cols = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < cols; ++j) buf(k, j) += g(idx[k], j);
  }, "scatter_add_rows");
}

Var segment_softmax(Var a, std::span<const std::size_t> segment, std::size_t segments) {
  const Tensor& av = a.value();
  if (av.cols() != 1 || av.rows() != segment.size()) {
    throw DimensionError("segment_softmax: " + av.shape_string() + " with " + std::to_string(segment.size()) +
                         " segment ids");
  }
  std::vector<double> max_logit(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment[k] >= segments) throw BoundsError("segment_softmax: segment id out of range");
    max_logit[segment[k]] = std::max(max_logit[segment[k]], av[k]);
  }
  Tensor out(av.rows(), 1);
  std::vector<double> denom(segments, 0.0);
  for (std::size_t k = 0; k < segment.size(); ++k) {
    out[k] = std::exp(av[k] - max_logit[segment[k]]);
    denom[segment[k]] += out[k];
  }
  for (std::size_t k = 0; k < segment.size(); ++k) out[k] /= denom[segment[k]];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, seg = std::move(seg), segments](Tape& t, std::size_t self) {
    // d logit_k = s_k (g_k - sum_{j in seg} s_j g_j)
    const Tensor& g = t.grad(self);
    const Tensor& s = t.value(self);
    std::vector<double> dot(segments, 0.0);
    for (std::size_t k = 0; k < seg.size(); ++k) dot[seg[k]] += s[k] * g[k];
    Tensor ga(s.rows(), 1);
    for (std::size_t k = 0; k < seg.size(); ++k) ga[k] = s[k] * (g[k] - dot[seg[k]]);
    accumulate(t, ia, ga);
  }, "segment_softmax");
}

Var spmm(const SparseMatrix& a, Var x) {
  Tensor out = nextcell::spmm(a, x.value());
  const SparseMatrix* ap = &a;
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {ix}, [ap, ix](Tape& t, std::size_t self) {
    // dX = A^T dY, without materialising the transpose.
    const Tensor& g = t.grad(self);
    Tensor& buf = t.grad_buffer(ix);
    const std::size_t n = g.cols();
    for (std::size_t r = 0; r < ap->rows; ++r)
      for (std::size_t k = ap->row_ptr[r]; k < ap->row_ptr[r + 1]; ++k) {
        const double v = ap->values[k];
        const std::size_t c = ap->col_idx[k];
        for (std::size_t j = 0; j < n; ++j) buf(c, j) += v * g(r, j);
      }
  }, "spmm");
}

}  // namespace ad
}  // namespace nextcell
