// Copyright 2026 The fbsde-control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <cmath>

#include "fbsde/tensor.hpp"
#include "support.hpp"

using namespace fbsde;
using fbsde::testing::check_gradients;
using fbsde::testing::Gen;

namespace {

// Weighted sum so every output entry reaches the loss with its own slope.
Var weighted(Tape& tape, const Var& out, Gen& g) {
  return sum(mul(out, tape.constant(g.tensor(out.rows(), out.cols()))));
}

constexpr int kTrials = 100;

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul examples") {
  Tape tape;
  Var i2 = tape.constant(Tensor::identity(2));
  Var col = tape.constant(Tensor(2, 1, {3.0, 4.0}));
  const Tensor& a = matmul(i2, col).value();
  CHECK(a(0, 0) == 3.0);
  CHECK(a(1, 0) == 4.0);

  Var row = tape.constant(Tensor(1, 2, {1.0, 2.0}));
  CHECK(matmul(row, col).value().item() == 11.0);

  CHECK_THROWS_AS(matmul(row, row), DimensionError);
}

TEST_CASE("matmul gradient of summed output on random 3x4 by 4x2") {
  Gen g(11);
  for (int trial = 0; trial < kTrials; ++trial) {
    auto rep = check_gradients([](Tape&, const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); },
                               {g.tensor(3, 4), g.tensor(4, 2)});
    CHECK(rep.max_rel < 1e-6);
  }
}

TEST_CASE("elementwise examples") {
  Tape tape;
  CHECK(tanh(tape.constant(Tensor::scalar(0.0))).value().item() == 0.0);
  for (double x : {3.0, 10.0, -10.0}) {
    const double t = tanh(tape.constant(Tensor::scalar(x))).value().item();
    CHECK(std::abs(t) < 1.0);
  }
  // Past |x| ~ 19 the nearest double to tanh(x) is +-1 itself.
  CHECK(std::abs(tanh(tape.constant(Tensor::scalar(1e3))).value().item()) <= 1.0);

  Var a = tape.constant(Tensor(1, 3, {1.0, -2.0, 0.5}));
  Var b = tape.constant(Tensor(1, 3, {4.0, 1.0, -2.0}));
  CHECK(add(a, b).value().values == std::vector<double>{5.0, -1.0, -1.5});
  CHECK(sub(a, b).value().values == std::vector<double>{-3.0, -3.0, 2.5});
  CHECK(mul(a, b).value().values == std::vector<double>{4.0, -2.0, -1.0});
  CHECK(scale(a, 2.0).value().values == std::vector<double>{2.0, -4.0, 1.0});
  CHECK(neg(a).value().values == std::vector<double>{-1.0, 2.0, -0.5});
  CHECK(square(a).value().values == std::vector<double>{1.0, 4.0, 0.25});
  Var s = tape.constant(Tensor::scalar(3.0));
  CHECK(mul(s, a).value().values == std::vector<double>{3.0, -6.0, 1.5});
  CHECK(mul(a, s).value().values == std::vector<double>{3.0, -6.0, 1.5});

  Var wrong = tape.constant(Tensor(3, 1));
  CHECK_THROWS_AS(add(a, wrong), DimensionError);
  CHECK_THROWS_AS(sub(a, wrong), DimensionError);
  CHECK_THROWS_AS(mul(a, wrong), DimensionError);
}

TEST_CASE("tanh backward at 0.5") {
  auto rep = check_gradients([](Tape&, const std::vector<Var>& v) { return sum(tanh(v[0])); },
                             {Tensor::scalar(0.5)});
  CHECK(rep.max_rel < 1e-6);
  Tape tape;
  Var x = tape.parameter(Tensor::scalar(0.5), 0);
  const auto grads = tape.gradients(sum(tanh(x)), 1);
  CHECK(grads[0].item() == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("every differentiable op agrees with central differences") {
  Gen g(12);
  using Unary = Var (*)(const Var&);
  const std::vector<std::pair<const char*, Unary>> unary{
      {"tanh", tanh}, {"square", square}, {"neg", neg}, {"logistic", logistic}, {"sig", sig},
  };
  for (const auto& [name, op] : unary) {
    CAPTURE(name);
    double worst = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
      const std::size_t r = g.index(1, 4), c = g.index(1, 4);
      Gen wg(static_cast<std::uint64_t>(trial));
      auto rep = check_gradients(
          [&, op = op](Tape& t, const std::vector<Var>& v) {
            Gen w = wg;
            return weighted(t, op(v[0]), w);
          },
          {g.tensor(r, c)});
      worst = std::max(worst, rep.max_rel);
    }
    CHECK(worst < 1e-5);
  }

  using Binary = Var (*)(const Var&, const Var&);
  const std::vector<std::pair<const char*, Binary>> binary{{"add", add}, {"sub", sub}, {"mul", mul}};
  for (const auto& [name, op] : binary) {
    CAPTURE(name);
    double worst = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
      const std::size_t r = g.index(1, 4), c = g.index(1, 4);
      Gen wg(static_cast<std::uint64_t>(trial));
      // Every fourth trial broadcasts a 1x1 left operand.
      const bool bcast = trial % 4 == 0 && std::string(name) == "mul";
      auto rep = check_gradients(
          [&, op = op](Tape& t, const std::vector<Var>& v) {
            Gen w = wg;
            return weighted(t, op(v[0], v[1]), w);
          },
          {bcast ? g.tensor(1, 1) : g.tensor(r, c), g.tensor(r, c)});
      worst = std::max(worst, rep.max_rel);
    }
    CHECK(worst < 1e-5);
  }

  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t p = g.index(1, 4), q = g.index(1, 4), r = g.index(1, 4);
    const double k = g.uniform(-2.0, 2.0);
    Gen wg(static_cast<std::uint64_t>(trial));
    auto check = [&](const fbsde::testing::LossBuilder& b, std::vector<Tensor> in) {
      worst = std::max(worst, check_gradients(b, in).max_rel);
    };
    check([&](Tape& t, const std::vector<Var>& v) { Gen w = wg; return weighted(t, scale(v[0], k), w); },
          {g.tensor(p, q)});
    check([&](Tape& t, const std::vector<Var>& v) { Gen w = wg; return weighted(t, matmul(v[0], v[1]), w); },
          {g.tensor(p, q), g.tensor(q, r)});
    check([](Tape&, const std::vector<Var>& v) { return sum_squares(v[0]); }, {g.tensor(p, q)});
    check([&](Tape& t, const std::vector<Var>& v) { Gen w = wg; return weighted(t, add_bias(v[0], v[1]), w); },
          {g.tensor(p, q), g.tensor(1, q)});
    check([&](Tape& t, const std::vector<Var>& v) { Gen w = wg; return weighted(t, repeat_rows(v[0], r), w); },
          {g.tensor(1, q)});
    check([&](Tape& t, const std::vector<Var>& v) {
            Gen w = wg;
            return weighted(t, slice_cols(v[0], q - 1, 1), w);
          },
          {g.tensor(p, q)});
    check([&](Tape& t, const std::vector<Var>& v) { Gen w = wg; return weighted(t, concat_cols(v[0], v[1]), w); },
          {g.tensor(p, q), g.tensor(p, r)});
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("sig examples") {
  CHECK(sig(0.0) == 0.0);
  Gen g(13);
  for (int i = 0; i < 1000; ++i) {
    const double v = g.uniform(-30.0, 30.0);
    CHECK(std::abs(sig(v) + sig(-v)) <= 1e-15);
    CHECK(std::abs(sig(v)) < 1.0);
  }
  CHECK(sig(sig_inverse(0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  Tape tape;
  Var x = tape.parameter(Tensor::scalar(0.7), 0);
  const double s = sig(0.7);
  CHECK(tape.gradients(sum(sig(x)), 1)[0].item() == doctest::Approx(0.5 * (1.0 - s * s)).epsilon(1e-15));
}

TEST_CASE("sum_squares examples") {
  Tape tape;
  CHECK(sum_squares(tape.constant(Tensor(1, 2, {0.0, 0.0}))).value().item() == 0.0);
  Var v = tape.parameter(Tensor(1, 2, {3.0, 4.0}), 0);
  Var l = sum_squares(v);
  CHECK(l.value().item() == 25.0);
  const auto g = tape.gradients(l, 1);
  CHECK(g[0].values == std::vector<double>{6.0, 8.0});
}

TEST_CASE("gradients: unused parameter, W x, non-scalar loss") {
  Tape tape;
  Var used = tape.parameter(Tensor(1, 2, {1.0, 2.0}), 0);
  Var unused = tape.parameter(Tensor(2, 2, 5.0), 1);
  const auto g = tape.gradients(sum_squares(used), 2);
  CHECK(g[1].same_shape(Tensor(2, 2)));
  for (double x : g[1].values) CHECK(x == 0.0);
  (void)unused;

  CHECK_THROWS_AS(tape.gradients(used, 2), ContractError);
  CHECK_THROWS_AS(tape.backward(used), ContractError);

  Gen gen(14);
  for (int trial = 0; trial < kTrials; ++trial) {
    auto rep = check_gradients(
        [](Tape&, const std::vector<Var>& v) { return sum_squares(matmul(v[0], v[1])); },
        {gen.tensor(3, 4), gen.tensor(4, 2)});
    CHECK(rep.max_rel < 1e-5);
  }
}

TEST_CASE("ten unrolled matmul + tanh steps (BPTT)") {
  Gen g(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto rep = check_gradients(
        [](Tape&, const std::vector<Var>& v) {
          Var h = v[0];
          for (int step = 0; step < 10; ++step) h = tanh(matmul(matmul(h, v[1]), v[2]));
          return sum_squares(h);
        },
        {g.tensor(2, 3, -1.0, 1.0), g.tensor(3, 3, -1.0, 1.0), g.tensor(3, 3, -1.0, 1.0)});
    CHECK(rep.max_rel < 1e-5);
  }
}

TEST_CASE("row_map Jacobians match central differences") {
  Gen g(16);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t rows = g.index(1, 5);
    Gen wg(static_cast<std::uint64_t>(trial));
    auto rep = check_gradients(
        [&](Tape& t, const std::vector<Var>& v) {
          Var out = t.row_map(std::span<const Var>(v), 2, [](std::size_t, auto in, auto o) {
            using std::exp;
            using std::sin;
            o[0] = sin(in[0]) * in[2] + exp(in[1] * 0.5);
            o[1] = in[0] * in[1] * in[2] - in[3] / (in[2] * in[2] + 1.0);
          });
          Gen w = wg;
          return weighted(t, out, w);
        },
        {g.tensor(rows, 2), g.tensor(rows, 2)});
    CHECK(rep.max_rel < 1e-5);
  }
  Tape tape;
  Var wide = tape.constant(Tensor(1, 33));
  const Var in[] = {wide};
  CHECK_THROWS_AS(tape.row_map(std::span<const Var>(in), 1, [](std::size_t, auto, auto o) { o[0] = 0.0; }),
                  DimensionError);
}

TEST_CASE("tape is topologically ordered and replay is deterministic") {
  auto run = [](std::vector<Tensor>* grads) {
    Gen g(17);
    Tape tape;
    Var w = tape.parameter(g.tensor(3, 3), 0);
    Var x = tape.constant(g.tensor(4, 3));
    Var h = x;
    for (int k = 0; k < 5; ++k) h = tanh(matmul(h, w));
    Var l = sum_squares(h);
    for (std::size_t id = 0; id < tape.size(); ++id) {
      for (int in : tape.node(static_cast<int>(id)).inputs) CHECK(in < static_cast<int>(id));
    }
    *grads = tape.gradients(l, 1);
    return l.value().item();
  };
  std::vector<Tensor> g1, g2;
  const double l1 = run(&g1);
  const double l2 = run(&g2);
  CHECK(l1 == l2);
  CHECK(g1[0].values == g2[0].values);
}

TEST_CASE("gradient of a sum of losses is the sum of gradients") {
  Gen g(18);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor w0 = g.tensor(3, 2), x0 = g.tensor(4, 3);
    auto grad = [&](int which) {
      Tape tape;
      Var w = tape.parameter(w0, 0);
      Var x = tape.constant(x0);
      Var a = sum_squares(tanh(matmul(x, w)));
      Var b = sum(square(matmul(x, w)));
      Var l = which == 0 ? a : which == 1 ? b : add(a, b);
      return tape.gradients(l, 1)[0];
    };
    const Tensor ga = grad(0), gb = grad(1), gab = grad(2);
    for (std::size_t i = 0; i < gab.size(); ++i) {
      CHECK(gab.values[i] == doctest::Approx(ga.values[i] + gb.values[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("structural ops: shapes and values") {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = tape.constant(Tensor(1, 3, {10, 20, 30}));
  CHECK(add_bias(a, b).value().values == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK(repeat_rows(b, 2).value().values == std::vector<double>{10, 20, 30, 10, 20, 30});
  CHECK(slice_cols(a, 1, 2).value().values == std::vector<double>{2, 3, 5, 6});
  CHECK(concat_cols(a, slice_cols(a, 0, 1)).value().values ==
        std::vector<double>{1, 2, 3, 1, 4, 5, 6, 4});
  CHECK(sum(a).value().item() == 21.0);
  CHECK_THROWS_AS(add_bias(a, a), DimensionError);
  CHECK_THROWS_AS(slice_cols(a, 2, 2), DimensionError);
  CHECK_THROWS_AS(concat_cols(a, b), DimensionError);
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1.0}), DimensionError);
}

}  // TEST_SUITE
