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

#include "fbsde/policy.hpp"

#include <cmath>
#include <random>

#include "fbsde/dynamics.hpp"

namespace fbsde {

namespace {

constexpr std::size_t kHead = 2;         // y0, z0
constexpr std::size_t kPerFcNet = 6;     // w1 b1 w2 b2 w3 b3
constexpr std::size_t kLstmLayers = 2;
// Recurrent layout after the head: per layer (wx, wh, b), then (wo, bo).

void check_shape(const PolicyShape& s) {
  if (s.hidden < 1) throw ParameterError("hidden size must be >= 1");
  if (s.state_dim < 1 || s.noise_dim < 1) throw ParameterError("policy dimensions must be >= 1");
  if (s.steps < 1) throw ParameterError("policy needs N >= 1 steps");
}

struct Layout {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool decay;
  std::size_t fan_in;  // uniform init bound 1/sqrt(fan_in)
};

std::vector<Layout> layout(const PolicyShape& s) {
  check_shape(s);
  const std::size_t n = s.state_dim, v = s.noise_dim, h = s.hidden;
  std::vector<Layout> out{{"y0", 1, 1, false, 1}, {"z0", 1, v, false, 1}};
  if (s.kind == PolicyKind::kFcStack) {
    for (std::size_t t = 1; t < s.steps; ++t) {
      const std::string p = "fc" + std::to_string(t) + ".";
      out.push_back({p + "w1", n, h, true, n});
      out.push_back({p + "b1", 1, h, true, n});
      out.push_back({p + "w2", h, h, true, h});
      out.push_back({p + "b2", 1, h, true, h});
      out.push_back({p + "w3", h, v, true, h});
      out.push_back({p + "b3", 1, v, true, h});
    }
  } else {
    std::size_t in = n + 1;  // state plus normalized time
    for (std::size_t l = 0; l < kLstmLayers; ++l) {
      const std::string p = "lstm" + std::to_string(l) + ".";
      out.push_back({p + "wx", in, 4 * h, true, in});
      out.push_back({p + "wh", h, 4 * h, true, h});
      out.push_back({p + "b", 1, 4 * h, true, h});
      in = h;
    }
    out.push_back({"out.w", h, v, true, h});
    out.push_back({"out.b", 1, v, true, h});
  }
  return out;
}

}  // namespace

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::kFcStack ? "fc-stack" : "recurrent";
}

PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "fc-stack" || s == "fc") return PolicyKind::kFcStack;
  if (s == "recurrent" || s == "lstm") return PolicyKind::kRecurrent;
  throw ParameterError("unknown policy kind '" + s + "' (expected fc-stack or recurrent)");
}

std::size_t PolicyParams::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : items) total += p.value.size();
  return total;
}

std::size_t param_count(const PolicyShape& s) {
  check_shape(s);
  const std::size_t n = s.state_dim, v = s.noise_dim, h = s.hidden;
  const std::size_t head = 1 + v;
  if (s.kind == PolicyKind::kFcStack) {
    const std::size_t per_net = (n * h + h) + (h * h + h) + (h * v + v);
    return head + (s.steps - 1) * per_net;
  }
  const std::size_t layer1 = (n + 1) * 4 * h + h * 4 * h + 4 * h;
  const std::size_t layer2 = h * 4 * h + h * 4 * h + 4 * h;
  return head + layer1 + layer2 + h * v + v;
}

PolicyParams init_params(const PolicyShape& shape, const InitRanges& ranges, std::uint64_t seed) {
  PolicyParams params;
  params.shape = shape;
  std::mt19937_64 rng(seed);
  for (const Layout& l : layout(shape)) {
    Tensor t(l.rows, l.cols);
    if (l.name == "y0") {
      std::uniform_real_distribution<double> d(ranges.y0_low, ranges.y0_high);
      t.values[0] = d(rng);
    } else if (l.name == "z0") {
      std::uniform_real_distribution<double> d(ranges.z0_low, ranges.z0_high);
      for (double& x : t.values) x = d(rng);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in));
      std::uniform_real_distribution<double> d(-bound, bound);
      for (double& x : t.values) x = d(rng);
      if (shape.kind == PolicyKind::kRecurrent && l.name.starts_with("lstm") &&
          l.name.ends_with(".b")) {
        for (std::size_t c = shape.hidden; c < 2 * shape.hidden; ++c) t.values[c] = ranges.forget_bias;
      }
    }
    params.items.push_back({l.name, std::move(t), l.decay});
  }
  return params;
}

PolicyParams zero_params(const PolicyShape& shape) {
  PolicyParams params;
  params.shape = shape;
  for (const Layout& l : layout(shape)) params.items.push_back({l.name, Tensor(l.rows, l.cols), l.decay});
  return params;
}

BoundPolicy::BoundPolicy(const PolicyParams& params, Tape& tape)
    : shape_(params.shape), tape_(&tape) {
  const auto expected = layout(shape_);
  if (expected.size() != params.items.size()) {
    throw DimensionError("policy has " + std::to_string(params.items.size()) +
                         " parameter tensors, shape implies " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Tensor& t = params.items[i].value;
    if (t.rows != expected[i].rows || t.cols != expected[i].cols) {
      throw DimensionError("parameter " + expected[i].name + " has shape " + t.shape_str());
    }
    vars_.push_back(tape.parameter(t, static_cast<int>(i)));
    decay_.push_back(params.items[i].decay);
  }
}

std::vector<Var> BoundPolicy::decayed() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (decay_[i]) out.push_back(vars_[i]);
  }
  return out;
}

std::optional<RecurrentState> BoundPolicy::initial_state(std::size_t batch) const {
  if (shape_.kind != PolicyKind::kRecurrent) return std::nullopt;
  RecurrentState s;
  for (std::size_t l = 0; l < kLstmLayers; ++l) {
    s.h.push_back(tape_->constant(Tensor(batch, shape_.hidden)));
    s.c.push_back(tape_->constant(Tensor(batch, shape_.hidden)));
  }
  return s;
}

Var BoundPolicy::predict_z(const Var& x, std::size_t t, RecurrentState* state) const {
  if (t < 1 || t >= shape_.steps) {
    throw ContractError("predict_z step " + std::to_string(t) + " outside [1, " +
                        std::to_string(shape_.steps - 1) + "]");
  }
  if (x.cols() != shape_.state_dim) {
    throw DimensionError("predict_z expects " + std::to_string(shape_.state_dim) +
                         " state columns, got " + std::to_string(x.cols()));
  }
  if (shape_.kind == PolicyKind::kFcStack) {
    if (state != nullptr) throw ContractError("fc-stack policy takes no recurrent state");
    return fc_forward(x, t);
  }
  if (state == nullptr) throw ContractError("recurrent policy needs its recurrent state");
  return recurrent_forward(x, t, *state);
}

Var BoundPolicy::fc_forward(const Var& x, std::size_t t) const {
  const std::size_t base = kHead + (t - 1) * kPerFcNet;
  Var h = tanh(add_bias(matmul(x, vars_[base]), vars_[base + 1]));
  h = tanh(add_bias(matmul(h, vars_[base + 2]), vars_[base + 3]));
  return add_bias(matmul(h, vars_[base + 4]), vars_[base + 5]);
}

Var BoundPolicy::recurrent_forward(const Var& x, std::size_t t, RecurrentState& state) const {
  const std::size_t batch = x.rows();
  const std::size_t h = shape_.hidden;
  const double tau = static_cast<double>(t) / static_cast<double>(shape_.steps);
  Var input = concat_cols(x, tape_->constant(Tensor(batch, 1, tau)));
  for (std::size_t l = 0; l < kLstmLayers; ++l) {
    const std::size_t base = kHead + 3 * l;
    Var pre = add_bias(add(matmul(input, vars_[base]), matmul(state.h[l], vars_[base + 1])),
                       vars_[base + 2]);
    Var in_gate = logistic(slice_cols(pre, 0, h));
    Var forget = logistic(slice_cols(pre, h, h));
    Var cand = tanh(slice_cols(pre, 2 * h, h));
    Var out_gate = logistic(slice_cols(pre, 3 * h, h));
    state.c[l] = add(mul(forget, state.c[l]), mul(in_gate, cand));
    state.h[l] = mul(out_gate, tanh(state.c[l]));
    input = state.h[l];
  }
  const std::size_t out = kHead + 3 * kLstmLayers;
  return add_bias(matmul(input, vars_[out]), vars_[out + 1]);
}

}  // namespace fbsde
