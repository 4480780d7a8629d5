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

// Forward integration of the importance-sampled FBSDE pair on a tape.
//
// Per step (Euler-Maruyama, dw ~ N(0, dt I)):
//   u  = optimal control from z (saturated when the cost is constrained)
//   y' = y - h(x, z) dt + z^T Gamma u dt + z^T dw
//   x' = x + f(x) dt + Sigma (Gamma u dt + dw)
// The whole update is one differentiable tape node per step.

#ifndef FBSDE_PROPAGATOR_HPP_
#define FBSDE_PROPAGATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/cost.hpp"
#include "fbsde/dynamics.hpp"
#include "fbsde/policy.hpp"
#include "fbsde/tensor.hpp"

namespace fbsde {

// States beyond this magnitude abort the batch.
inline constexpr double kDivergenceLimit = 1e6;

struct RolloutConfig {
  std::size_t steps = 0;   // N
  double dt = 0.0;         // N * dt = horizon
  std::size_t batch = 1;   // M
  std::uint64_t seed = 0;  // noise seed for this rollout
};

class RolloutError : public std::runtime_error {
 public:
  RolloutError(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Independent noise stream for trajectory `index` of a rollout seeded with `seed`.
std::mt19937_64 trajectory_stream(std::uint64_t seed, std::size_t index);

// One Brownian increment: i.i.d. N(0, dt) entries.
std::vector<double> sample_noise(std::mt19937_64& rng, std::size_t v, double dt);

struct StepOutput {
  Var x;  // M x n
  Var y;  // M x 1
  Var u;  // M x m
};

// Advances a batch by one step. `dw` is M x v; `time` is t * dt.
StepOutput step(const Var& x, const Var& y, const Var& z, const Tensor& dw, double time,
                const ControlAffineSystem& system, const CostSpec& cost, double dt);

struct RolloutBatch {
  std::size_t batch = 0, steps = 0, n = 0, v = 0, m = 0;
  std::vector<double> states;    // batch x (steps + 1) x n
  std::vector<double> values;    // batch x (steps + 1)
  std::vector<double> z;         // batch x steps x v
  std::vector<double> controls;  // batch x steps x m
  std::vector<double> targets;   // batch, g(x_N)
  std::vector<double> noise;     // batch x steps x v

  Var y_terminal;  // M x 1, live on the tape
  Var target;      // M x 1, g(x_N) on the tape

  double state(std::size_t i, std::size_t t, std::size_t k) const {
    return states[(i * (steps + 1) + t) * n + k];
  }
  double value(std::size_t i, std::size_t t) const { return values[i * (steps + 1) + t]; }
  double control(std::size_t i, std::size_t t, std::size_t j) const {
    return controls[(i * steps + t) * m + j];
  }
  double z_at(std::size_t i, std::size_t t, std::size_t k) const {
    return z[(i * steps + t) * v + k];
  }
};

// Supplies z_t (M x v) for t = 1..N-1 given the states at step t.
using ZPredictor = std::function<Var(const Var& x, std::size_t t)>;

RolloutBatch rollout(const Var& y0, const Var& z0, const ZPredictor& predict,
                     const ControlAffineSystem& system, const CostSpec& cost,
                     const RolloutConfig& config);

// Rollout driven by a bound policy (resets recurrent state for the batch).
RolloutBatch rollout(const BoundPolicy& policy, const ControlAffineSystem& system,
                     const CostSpec& cost, const RolloutConfig& config);

// (1/M) sum_i (y*_N - y_N)^2 + lambda * sum of squares of `decayed`.
Var loss(const RolloutBatch& batch, std::span<const Var> decayed, double lambda);

// CSV with header traj,step,time,x0..x{n-1},y,u0..u{m-1}; the control columns
// are empty on the terminal row.
void write_trajectories_csv(std::ostream& os, const RolloutBatch& batch, double dt);

}  // namespace fbsde

#endif  // FBSDE_PROPAGATOR_HPP_
