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

#ifndef FBSDE_TRAINER_HPP_
#define FBSDE_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fbsde/cost.hpp"
#include "fbsde/dynamics.hpp"
#include "fbsde/policy.hpp"
#include "fbsde/propagator.hpp"

namespace fbsde {

// Piecewise-constant learning rate: (first iteration, rate) pairs, sorted.
struct LrSchedule {
  std::vector<std::pair<std::size_t, double>> pieces{{1, 1e-3}};

  double rate_at(std::size_t iteration) const;
  void validate() const;
  // "1:1e-3, 2101:1e-4"
  static LrSchedule parse(const std::string& text);
  std::string to_string() const;
  // 1e-3, dropping to 1e-4 after 70% of the iterations.
  static LrSchedule standard(std::size_t iterations);
};

struct TrainConfig {
  std::size_t iterations = 3000;  // K
  std::size_t batch = 128;        // M
  double weight_decay = 1e-4;     // lambda
  LrSchedule schedule = LrSchedule::standard(3000);
  std::uint64_t seed = 1;
  std::size_t checkpoint_interval = 0;  // 0 disables periodic checkpoints
  double grad_clip = 0.0;               // global-norm clip, 0 disables

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of every parameter. `grads[i]` must match
// `params.items[i]`; moment buffers are created on the first call.
void adam_step(PolicyParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double rate);

struct IterationMetrics {
  std::size_t iter = 0;
  double loss = 0.0;
  double y0 = 0.0;
  double mean_terminal_cost = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

// One JSON object per line.
std::string to_json_line(const IterationMetrics& m);
IterationMetrics metrics_from_json_line(const std::string& line);

struct TrainResult {
  PolicyParams params;
  std::vector<IterationMetrics> history;
  bool diverged = false;
  std::string diagnostic;
};

struct TrainHooks {
  // Called after every completed iteration.
  std::function<void(const IterationMetrics&)> on_iteration;
  // Called every checkpoint_interval iterations with the current parameters.
  std::function<void(const PolicyParams&, std::size_t iteration)> on_checkpoint;
};

// Seed of the noise used in iteration `iteration` (1-based) of a run.
std::uint64_t iteration_seed(std::uint64_t run_seed, std::size_t iteration);

// K iterations of rollout, loss, backward pass and Adam. On divergence the
// run stops, keeping the last good parameters, and reports a diagnostic.
TrainResult train(const ControlAffineSystem& system, const CostSpec& cost, PolicyParams initial,
                  std::size_t steps, double dt, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace fbsde

#endif  // FBSDE_TRAINER_HPP_
