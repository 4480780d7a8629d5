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

#include "fbsde/policy.hpp"
#include "support.hpp"

using namespace fbsde;
using fbsde::testing::Gen;
using fbsde::testing::rel_err;

namespace {

// Counts written out from the architecture description.
std::size_t fc_formula(std::size_t n, std::size_t v, std::size_t h, std::size_t steps) {
  return (steps - 1) * ((n * h + h) + (h * h + h) + (h * v + v)) + 1 + v;
}

std::size_t lstm_formula(std::size_t n, std::size_t v, std::size_t h) {
  const std::size_t cell1 = 4 * h * (n + 1) + 4 * h * h + 4 * h;
  const std::size_t cell2 = 4 * h * h + 4 * h * h + 4 * h;
  return cell1 + cell2 + h * v + v + 1 + v;
}

// z for steps 1..N-1 along a fixed list of state batches.
std::vector<Tensor> predict_all(const PolicyParams& p, const std::vector<Tensor>& xs) {
  Tape tape;
  BoundPolicy policy(p, tape);
  auto state = policy.initial_state(xs.front().rows);
  std::vector<Tensor> out;
  for (std::size_t t = 1; t < p.shape.steps; ++t) {
    out.push_back(policy.predict_z(tape.constant(xs[t - 1]), t, state ? &*state : nullptr).value());
  }
  return out;
}

std::vector<double> flatten(const PolicyParams& p) {
  std::vector<double> v;
  for (const auto& item : p.items) v.insert(v.end(), item.value.values.begin(), item.value.values.end());
  return v;
}

void unflatten(PolicyParams& p, std::span<const double> v) {
  std::size_t k = 0;
  for (auto& item : p.items) {
    for (double& x : item.value.values) x = v[k++];
  }
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("parameter counts follow the architecture") {
  CHECK(param_count({PolicyKind::kFcStack, 2, 1, 16, 75}) == 74 * ((2 * 16 + 16) + (16 * 16 + 16) + (16 * 1 + 1)) + 2);
  Gen g(51);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = g.index(1, 12), v = g.index(1, 4), h = g.index(1, 40), steps = g.index(1, 120);
    const PolicyShape fc{PolicyKind::kFcStack, n, v, h, steps};
    const PolicyShape rc{PolicyKind::kRecurrent, n, v, h, steps};
    CHECK(param_count(fc) == fc_formula(n, v, h, steps));
    CHECK(param_count(rc) == lstm_formula(n, v, h));
    CHECK(init_params(fc, {}, 1).scalar_count() == param_count(fc));
    CHECK(zero_params(rc).scalar_count() == param_count(rc));
  }
  std::size_t prev = 0;
  for (std::size_t steps = 2; steps < 120; ++steps) {
    const std::size_t c = param_count({PolicyKind::kFcStack, 2, 1, 16, steps});
    CHECK(c > prev);
    prev = c;
    CHECK(param_count({PolicyKind::kRecurrent, 2, 1, 16, steps}) == param_count({PolicyKind::kRecurrent, 2, 1, 16, 2}));
  }
  CHECK(param_count({PolicyKind::kRecurrent, 12, 4, 64, 100}) < param_count({PolicyKind::kFcStack, 12, 4, 64, 100}));
  CHECK_THROWS_AS(param_count({PolicyKind::kFcStack, 2, 1, 0, 10}), ParameterError);
}

TEST_CASE("initialization") {
  const PolicyShape shape{PolicyKind::kRecurrent, 3, 2, 5, 10};
  const auto a = init_params(shape, {}, 9), b = init_params(shape, {}, 9), c = init_params(shape, {}, 10);
  CHECK(flatten(a) == flatten(b));
  CHECK(flatten(a) != flatten(c));
  CHECK(a.y0().item() >= 0.0);
  CHECK(a.y0().item() <= 1.0);
  for (double z : a.z0().values) CHECK(std::abs(z) <= 0.1);
  for (const auto& item : a.items) {
    if (item.name == "lstm0.b" || item.name == "lstm1.b") {
      for (std::size_t k = 5; k < 10; ++k) CHECK(item.value.values[k] == 1.0);
    }
    if (item.name == "lstm0.wx") {
      for (double w : item.value.values) CHECK(std::abs(w) <= 1.0 / std::sqrt(4.0));
    }
  }
  CHECK_FALSE(a.items[0].decay);
  CHECK_FALSE(a.items[1].decay);
  for (std::size_t i = 2; i < a.items.size(); ++i) CHECK(a.items[i].decay);

  InitRanges r;
  r.y0_low = 5.0;
  r.y0_high = 6.0;
  const auto d = init_params(shape, r, 1);
  CHECK(d.y0().item() >= 5.0);
  CHECK(parse_policy_kind("fc-stack") == PolicyKind::kFcStack);
  CHECK(parse_policy_kind("recurrent") == PolicyKind::kRecurrent);
  CHECK(to_string(PolicyKind::kRecurrent) == "recurrent");
  CHECK_THROWS_AS(parse_policy_kind("lstm2"), ParameterError);
}

TEST_CASE("zero weights give zero z") {
  Gen g(52);
  for (PolicyKind kind : {PolicyKind::kFcStack, PolicyKind::kRecurrent}) {
    const auto p = zero_params({kind, 3, 2, 4, 6});
    std::vector<Tensor> xs;
    for (int t = 0; t < 5; ++t) xs.push_back(g.tensor(4, 3, -10.0, 10.0));
    for (const auto& z : predict_all(p, xs)) {
      for (double v : z.values) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("fc-stack networks are independent across steps") {
  Gen g(53);
  const PolicyShape shape{PolicyKind::kFcStack, 2, 1, 4, 6};
  const auto base = init_params(shape, {}, 3);
  std::vector<Tensor> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(g.tensor(3, 2));
  const auto ref = predict_all(base, xs);
  for (std::size_t s = 1; s < 6; ++s) {
    auto p = base;
    for (auto& item : p.items) {
      if (item.name.starts_with("fc" + std::to_string(s) + ".")) {
        for (double& w : item.value.values) w += 0.5;
      }
    }
    const auto out = predict_all(p, xs);
    for (std::size_t t = 1; t < 6; ++t) {
      if (t == s) {
        CHECK(out[t - 1].values != ref[t - 1].values);
      } else {
        CHECK(out[t - 1].values == ref[t - 1].values);
      }
    }
  }
}

TEST_CASE("recurrent policy depends on history and is causal") {
  Gen g(54);
  const PolicyShape shape{PolicyKind::kRecurrent, 2, 1, 5, 8};
  const auto p = init_params(shape, {}, 4);
  std::vector<Tensor> xs;
  for (int t = 0; t < 7; ++t) xs.push_back(g.tensor(2, 2));
  const auto ref = predict_all(p, xs);

  // Same x at step 4, different earlier states.
  auto other = xs;
  other[0] = g.tensor(2, 2);
  other[1] = g.tensor(2, 2);
  const auto hist = predict_all(p, other);
  CHECK(hist[3].values != ref[3].values);

  // Changing the state at step 5 leaves steps 1..4 untouched.
  auto future = xs;
  future[4] = g.tensor(2, 2, 5.0, 6.0);
  const auto fut = predict_all(p, future);
  for (std::size_t t = 0; t < 4; ++t) CHECK(fut[t].values == ref[t].values);
  CHECK(fut[4].values != ref[4].values);

  // Rows of the batch do not interact.
  auto rowmix = xs;
  for (auto& x : rowmix) x(1, 0) += 1.0;
  const auto rm = predict_all(p, rowmix);
  for (std::size_t t = 0; t < rm.size(); ++t) CHECK(rm[t](0, 0) == ref[t](0, 0));
}

TEST_CASE("forward pass is deterministic") {
  Gen g(55);
  for (PolicyKind kind : {PolicyKind::kFcStack, PolicyKind::kRecurrent}) {
    const auto p = init_params({kind, 3, 2, 6, 5}, {}, 8);
    std::vector<Tensor> xs;
    for (int t = 0; t < 4; ++t) xs.push_back(g.tensor(5, 3));
    const auto a = predict_all(p, xs), b = predict_all(p, xs);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t].values == b[t].values);
  }
}

TEST_CASE("policy gradients match central differences at H = 3, N = 4") {
  Gen g(56);
  for (PolicyKind kind : {PolicyKind::kFcStack, PolicyKind::kRecurrent}) {
    CAPTURE(to_string(kind));
    for (int trial = 0; trial < 10; ++trial) {
      const PolicyShape shape{kind, 2, 2, 3, 4};
      const auto base = init_params(shape, {}, static_cast<std::uint64_t>(trial));
      std::vector<Tensor> xs, ws;
      for (int t = 0; t < 3; ++t) {
        xs.push_back(g.tensor(2, 2));
        ws.push_back(g.tensor(2, 2));
      }
      auto objective = [&](Tape& tape, BoundPolicy& policy) {
        auto state = policy.initial_state(2);
        Var acc = tape.constant(Tensor::scalar(0.0));
        for (std::size_t t = 1; t < 4; ++t) {
          Var z = policy.predict_z(tape.constant(xs[t - 1]), t, state ? &*state : nullptr);
          acc = add(acc, sum(mul(z, tape.constant(ws[t - 1]))));
        }
        return add(acc, add(sum(mul(policy.y0(), policy.y0())), sum(policy.z0())));
      };
      Tape tape;
      BoundPolicy policy(base, tape);
      const auto grads = tape.gradients(objective(tape, policy), base.items.size());
      const auto fd = oracle::finite_diff_grad(
          [&](std::span<const double> v) {
            auto p = base;
            unflatten(p, v);
            Tape t2;
            BoundPolicy bp(p, t2);
            return objective(t2, bp).value().item();
          },
          flatten(base), 1e-4);
      // h = 1e-4 balances truncation against rounding here; entries below ~1e-6
      // are compared absolutely.
      constexpr double kFloor = 1e-6;
      double worst = 0.0;
      std::size_t k = 0;
      for (const auto& gt : grads) {
        for (double x : gt.values) worst = std::max(worst, rel_err(x, fd[k++], kFloor));
      }
      CHECK(k == param_count(shape));
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("contract errors") {
  Tape tape;
  const auto fc = zero_params({PolicyKind::kFcStack, 2, 1, 3, 5});
  BoundPolicy f(fc, tape);
  Var x = tape.constant(Tensor(1, 2));
  CHECK_THROWS_AS(f.predict_z(x, 0, nullptr), ContractError);
  CHECK_THROWS_AS(f.predict_z(x, 5, nullptr), ContractError);
  CHECK_THROWS_AS(f.predict_z(tape.constant(Tensor(1, 3)), 1, nullptr), DimensionError);
  CHECK_FALSE(f.initial_state(1).has_value());
  RecurrentState dummy;
  CHECK_THROWS_AS(f.predict_z(x, 1, &dummy), ContractError);

  const auto rc = zero_params({PolicyKind::kRecurrent, 2, 1, 3, 5});
  BoundPolicy r(rc, tape);
  CHECK_THROWS_AS(r.predict_z(x, 1, nullptr), ContractError);
  CHECK(r.decayed().size() == rc.items.size() - 2);

  auto broken = rc;
  broken.items[3].value = Tensor(1, 1);
  CHECK_THROWS_AS(BoundPolicy(broken, tape), DimensionError);
}

}  // TEST_SUITE
