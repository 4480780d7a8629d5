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

// Trainable approximators of the value gradient z_t = Sigma^T V_x(x_t, t).
//
// Two architectures share one parameter container:
//   * fc-stack: one independent tanh MLP (n -> H -> H -> v) per step t = 1..N-1.
//   * recurrent: two stacked LSTM cells of width H shared over all steps, fed
//     [x_t, t/N], with a linear read-out to v.
// Both carry the initial-value head (y0, z0) as parameters 0 and 1.

#ifndef FBSDE_POLICY_HPP_
#define FBSDE_POLICY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbsde/tensor.hpp"

namespace fbsde {

enum class PolicyKind { kFcStack, kRecurrent };

std::string to_string(PolicyKind kind);
// Accepts "fc-stack" / "recurrent" (also "fc" / "lstm"). Throws ParameterError.
PolicyKind parse_policy_kind(const std::string& s);

struct PolicyShape {
  PolicyKind kind = PolicyKind::kFcStack;
  std::size_t state_dim = 0;   // n
  std::size_t noise_dim = 0;   // v
  std::size_t hidden = 16;     // H
  std::size_t steps = 0;       // N
};

struct InitRanges {
  double y0_low = 0.0;
  double y0_high = 1.0;
  double z0_low = -0.1;
  double z0_high = 0.1;
  double forget_bias = 1.0;
};

struct Parameter {
  std::string name;
  Tensor value;
  bool decay = true;  // included in the weight-decay penalty
};

struct PolicyParams {
  PolicyShape shape;
  std::vector<Parameter> items;

  std::size_t scalar_count() const;
  const Tensor& y0() const { return items.at(0).value; }
  const Tensor& z0() const { return items.at(1).value; }
};

// Exact number of trainable scalars including y0 and z0, by formula.
std::size_t param_count(const PolicyShape& shape);

PolicyParams init_params(const PolicyShape& shape, const InitRanges& ranges, std::uint64_t seed);
// All parameters zero (y0 and z0 included).
PolicyParams zero_params(const PolicyShape& shape);

// Per-trajectory recurrent state: hidden and cell for each of the two layers.
struct RecurrentState {
  std::vector<Var> h;
  std::vector<Var> c;
};

// Parameters registered on one tape for one forward/backward pass.
class BoundPolicy {
 public:
  BoundPolicy(const PolicyParams& params, Tape& tape);

  const PolicyShape& shape() const { return shape_; }
  Tape& tape() const { return *tape_; }
  const Var& y0() const { return vars_.at(0); }
  const Var& z0() const { return vars_.at(1); }
  const std::vector<Var>& vars() const { return vars_; }
  // Parameters subject to weight decay (network weights and biases).
  std::vector<Var> decayed() const;

  // Zero recurrent state for a batch of `batch` trajectories; nullopt for fc-stack.
  std::optional<RecurrentState> initial_state(std::size_t batch) const;

  // z for states x (batch x n) at step t in [1, N-1]. The recurrent policy
  // needs `state` and advances it; the fc-stack policy requires nullptr.
  Var predict_z(const Var& x, std::size_t t, RecurrentState* state) const;

 private:
  Var fc_forward(const Var& x, std::size_t t) const;
  Var recurrent_forward(const Var& x, std::size_t t, RecurrentState& state) const;

  PolicyShape shape_;
  Tape* tape_;
  std::vector<Var> vars_;
  std::vector<bool> decay_;
};

}  // namespace fbsde

#endif  // FBSDE_POLICY_HPP_
