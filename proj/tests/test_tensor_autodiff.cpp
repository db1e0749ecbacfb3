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
#include <doctest.h>

#include <cmath>
#include <random>

#include "nextcell/autodiff.hpp"
#include "nextcell/error.hpp"
#include "nextcell/nn.hpp"

using namespace nextcell;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(r, c);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

// Keeps entries away from the ReLU/LeakyReLU kink.
Tensor away_from_zero(Tensor t) {
  for (auto& v : t.data())
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - std::abs(v) : 0.05 + v;
  return t;
}

double check(const ScalarFunction& f, const std::vector<Tensor>& point) {
  return grad_check(f, point, 1e-5).max_relative_error;
}

}  // namespace

TEST_CASE("tensor shape and indexing") {
  const auto t = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t(1, 2) == 6.0);
  CHECK(t.shape_string() == "2x3");
  CHECK(transpose(t)(2, 1) == 6.0);
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(matmul(t, t), DimensionError);
}

TEST_CASE("matmul matches hand products") {
  const auto a = Tensor::from_rows({{1, 2}, {3, 4}});
  const auto b = Tensor::from_rows({{5, 6}, {7, 8}});
  CHECK(matmul(a, b) == Tensor::from_rows({{19, 22}, {43, 50}}));
  CHECK(matmul(a, Tensor::identity(2)) == a);
}

TEST_CASE("sparse triplets sum duplicates and spmm matches dense") {
  const auto s = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {2, 0, 2.0}, {0, 1, 0.5}, {1, 1, -1.0}});
  CHECK(s.nnz() == 3);
  CHECK(s.at(0, 1) == 1.5);
  CHECK(s.at(2, 2) == 0.0);
  const auto x = random_tensor(3, 4, 1);
  const auto dense = matmul(s.to_dense(), x);
  const auto sparse = spmm(s, x);
  for (std::size_t i = 0; i < dense.size(); ++i) CHECK(sparse[i] == doctest::Approx(dense[i]).epsilon(1e-15));
  CHECK(s.transposed().to_dense() == transpose(s.to_dense()));
}

TEST_CASE("backward of a sum of squares") {
  Tape tape;
  Var x = tape.parameter(Tensor::from_rows({{1.0, 2.0}}));
  Var loss = ad::sum(ad::mul(x, x));
  tape.backward(loss);
  CHECK(loss.value()[0] == 5.0);
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
}

TEST_CASE("grad check of sum of squares at (1, 2)") {
  const ScalarFunction f = [](Tape&, std::span<const Var> in) { return ad::sum(ad::mul(in[0], in[0])); };
  CHECK(check(f, {Tensor::from_rows({{1.0, 2.0}})}) < 1e-8);
}

TEST_CASE("constants receive no gradient") {
  Tape tape;
  Var c = tape.constant(Tensor(1, 1, 3.0));
  Var p = tape.parameter(Tensor(1, 1, 2.0));
  tape.backward(ad::sum(ad::mul(c, p)));
  CHECK_FALSE(tape.requires_grad(c.id));
  CHECK(p.grad()[0] == 3.0);
}

TEST_CASE("every primitive passes a central-difference check") {
  const auto a = away_from_zero(random_tensor(3, 4, 11));
  const auto b = random_tensor(4, 2, 12);
  const auto c = random_tensor(3, 4, 13);
  const auto row = random_tensor(1, 4, 14);
  const auto col = random_tensor(3, 1, 15);
  const std::vector<std::size_t> index{2, 0, 2, 1};
  const std::vector<std::size_t> segment{0, 1, 1, 0};
  const auto sparse = SparseMatrix::from_triplets(2, 3, {{0, 0, 0.5}, {0, 2, -1.5}, {1, 1, 2.0}});

  // Weighted sums so that each output entry contributes a different amount.
  auto reduce = [](Var v) {
    Tensor w(v.value().rows(), v.value().cols());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
    return ad::sum(ad::mul(v, v.tape->constant(w)));
  };
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::matmul(in[0], in[1])); }, {a, b}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::add(in[0], in[1])); }, {a, c}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::sub(in[0], in[1])); }, {a, c}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::mul(in[0], in[1])); }, {a, c}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::scale(in[0], -2.5)); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::add_row(in[0], in[1])); }, {a, row}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::mul_col(in[0], in[1])); }, {a, col}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::relu(in[0])); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::leaky_relu(in[0], 0.2)); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::sigmoid(in[0])); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::exp(in[0])); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::clamp(in[0], -0.5, 0.5)); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return ad::mean(ad::mul(in[0], in[0])); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::slice_rows(in[0], 1, 2)); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::row_dot(in[0], in[1])); }, {a, c}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::gather_rows(in[0], index)); }, {a}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::scatter_add_rows(in[0], index, 3)); },
              {random_tensor(4, 3, 16)}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::segment_softmax(in[0], segment, 2)); },
              {random_tensor(4, 1, 17)}) < 1e-7);
  CHECK(check([&](Tape&, std::span<const Var> in) { return reduce(ad::spmm(sparse, in[0])); }, {c})
        < 1e-7);
}

TEST_CASE("segment softmax sums to one per segment") {
  Tape tape;
  const std::vector<std::size_t> seg{0, 0, 1, 2, 2, 2};
  Var s = ad::segment_softmax(tape.constant(Tensor::column(std::vector<double>{1, 2, 3, -1, 0, 4})), seg, 3);
  double totals[3] = {0, 0, 0};
  for (std::size_t i = 0; i < seg.size(); ++i) totals[seg[i]] += s.value()[i];
  for (double t : totals) CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.value()[2] == 1.0);
}

TEST_CASE("non-finite results raise NumericError") {
  Tape tape;
  Var big = tape.parameter(Tensor(1, 1, 1000.0));
  CHECK_THROWS_AS(ad::exp(big), NumericError);
  CHECK_THROWS_AS(tape.constant(Tensor(1, 1, std::nan(""))), NumericError);
}

TEST_CASE("shape mismatches raise DimensionError naming operands") {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3));
  Var b = tape.constant(Tensor(2, 3));
  try {
    ad::matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(ad::add(a, tape.constant(Tensor(3, 2))), DimensionError);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Var a = tape.parameter(Tensor(2, 2, 1.0));
  CHECK_THROWS_AS(tape.backward(a), DimensionError);
}
