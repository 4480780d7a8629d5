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

// Run configuration: sectioned key = value text.
//
//   [system]   name = pendulum | cartpole | quadcopter | scalar_linear, physical constants
//   [cost]     q, q_terminal, r (comma lists), constrained, u_max
//   [policy]   kind, hidden, seed, init ranges
//   [horizon]  T, dt, optional N
//   [train]    iterations, batch, weight_decay, lr_schedule, seed, checkpoint_interval, grad_clip
//   [eval]     trials, seed
//   [output]   dir
//
// '#' and ';' start comments. Scalars given where a list is expected are
// broadcast to every channel.

#ifndef FBSDE_CONFIG_HPP_
#define FBSDE_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/cost.hpp"
#include "fbsde/dynamics.hpp"
#include "fbsde/policy.hpp"
#include "fbsde/trainer.hpp"

namespace fbsde {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& origin, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  std::string system = "";
  PendulumParams pendulum;
  CartPoleParams cartpole;
  QuadcopterParams quadcopter;
  ScalarLinearParams scalar;

  // For scalar_linear these are the Riccati coefficients q, r, g_T.
  std::vector<double> q;
  std::vector<double> q_terminal;
  std::vector<double> r;
  bool constrained = false;
  std::vector<double> u_max;

  PolicyKind policy = PolicyKind::kFcStack;
  std::size_t hidden = 16;
  InitRanges init;
  std::uint64_t init_seed = 1;

  double horizon = 0.0;  // T
  double dt = 0.0;
  std::size_t steps = 0;  // N

  TrainConfig train;

  std::size_t eval_trials = 128;
  std::uint64_t eval_seed = 12345;

  std::string output_dir = "runs/default";

  ControlAffineSystem make_system() const;
  CostSpec make_cost() const;
  PolicyShape shape() const;
  // Every field, defaults included; parses back to an identical config.
  std::string to_text() const;
};

// Throws ConfigError with the offending line for unknown sections or keys,
// malformed values, a missing system, or T, dt and N that disagree.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace fbsde

#endif  // FBSDE_CONFIG_HPP_
