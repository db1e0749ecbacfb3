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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nextcell/tensor.hpp"

namespace nextcell {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
};

/// Reverse-mode gradient record. Nodes are appended in evaluation order, so
/// the reverse of insertion order is a valid topological order for backward.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A differentiable input (model parameter or point of a gradient check).
  Var parameter(Tensor value);
  Var constant(Tensor value);

  /// Records the result of a primitive. `parents` are the inputs whose
  /// gradients `backward` accumulates into; if none of them requires a
  /// gradient the closure is dropped.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward, const char* op);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of `id`, allocated with zeros on first access.
  Tensor& grad_buffer(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a (n x c) + bias (1 x c) broadcast over rows.
Var add_row(Var a, Var bias);
/// a (n x c) scaled row-wise by w (n x 1).
Var mul_col(Var a, Var w);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var exp(Var a);
/// Clamps into [lo, hi]; the gradient is zero where the clamp is active.
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);
/// Rows [begin, begin + count) of a.
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// Row-wise dot product of two equally shaped matrices -> n x 1.
Var row_dot(Var a, Var b);
/// out[k] = a[index[k]].
Var gather_rows(Var a, std::span<const std::size_t> index);
/// out[index[k]] += a[k], out has `rows` rows.
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t rows);
/// Softmax of the column vector `a` within each segment `segment[k]`.
Var segment_softmax(Var a, std::span<const std::size_t> segment, std::size_t segments);
/// A x for a constant sparse A. `a` must outlive the backward pass.
Var spmm(const SparseMatrix& a, Var x);

}  // namespace ad

/// Throws NumericError if any entry of t is NaN or Inf.
void require_finite(const Tensor& t, const char* op);

}  // namespace nextcell
