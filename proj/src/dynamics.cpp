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

#include "fbsde/dynamics.hpp"

#include <numbers>
#include <utility>

namespace fbsde {

namespace {

void require_positive(const char* what, double v) {
  if (!(v > 0.0)) throw ParameterError(std::string(what) + " must be positive");
}

}  // namespace

Pendulum::Pendulum(PendulumParams p) : p_(p) {
  require_positive("pendulum mass", p_.mass);
  require_positive("pendulum length", p_.length);
  require_positive("pendulum gravity", p_.gravity);
  require_positive("pendulum sigma", p_.sigma);
  if (p_.damping < 0.0) throw ParameterError("pendulum damping must be non-negative");
}

CartPole::CartPole(CartPoleParams p) : p_(p) {
  require_positive("cart-pole sigma", p_.sigma);
}

Quadcopter::Quadcopter(QuadcopterParams p) : p_(p) {
  require_positive("quadcopter mass", p_.mass);
  require_positive("quadcopter arm", p_.arm);
  for (double j : p_.inertia) require_positive("quadcopter inertia", j);
  require_positive("quadcopter gravity", p_.gravity);
  require_positive("quadcopter sigma", p_.sigma);
  if (p_.yaw_coefficient < 0.0) throw ParameterError("quadcopter yaw coefficient must be >= 0");
}

ScalarLinear::ScalarLinear(ScalarLinearParams p) : p_(p) {
  if (p_.b == 0.0) throw ParameterError("scalar-linear b must be non-zero");
  require_positive("scalar-linear sigma", p_.sigma);
}

ControlAffineSystem::ControlAffineSystem(std::string name, Model model, std::vector<double> x_init,
                                         std::vector<double> x_goal,
                                         std::vector<std::size_t> angle_indices,
                                         std::vector<std::string> state_names,
                                         std::vector<std::string> control_names)
    : name_(std::move(name)),
      model_(std::move(model)),
      x_init_(std::move(x_init)),
      x_goal_(std::move(x_goal)),
      angle_indices_(std::move(angle_indices)),
      state_names_(std::move(state_names)),
      control_names_(std::move(control_names)) {
  std::visit(
      [this](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        n_ = M::kStates;
        m_ = M::kControls;
      },
      model_);
  if (x_init_.size() != n_ || x_goal_.size() != n_ || state_names_.size() != n_) {
    throw ParameterError(name_ + ": state vectors must have dimension " + std::to_string(n_));
  }
  if (control_names_.size() != m_) {
    throw ParameterError(name_ + ": expected " + std::to_string(m_) + " control names");
  }
  for (std::size_t i : angle_indices_) {
    if (i >= n_) throw ParameterError(name_ + ": angle index out of range");
  }
}

std::vector<double> ControlAffineSystem::drift(std::span<const double> x, double t) const {
  std::vector<double> out(n_);
  visit([&](const auto& m) { m.drift(x, t, std::span<double>(out)); });
  return out;
}

Tensor ControlAffineSystem::control_matrix(std::span<const double> x, double t) const {
  Tensor out(n_, m_);
  visit([&](const auto& m) { m.control_matrix(x, t, std::span<double>(out.values)); });
  return out;
}

Tensor ControlAffineSystem::diffusion(std::span<const double> x, double t) const {
  Tensor out(n_, noise_dim());
  visit([&](const auto& m) { m.diffusion(x, t, std::span<double>(out.values)); });
  return out;
}

Tensor ControlAffineSystem::gamma(std::span<const double> x, double t) const {
  Tensor out(noise_dim(), m_);
  visit([&](const auto& m) { m.gamma(x, t, std::span<double>(out.values)); });
  return out;
}

ControlAffineSystem pendulum(const PendulumParams& params) {
  return ControlAffineSystem("pendulum", Pendulum(params), {0.0, 0.0}, {std::numbers::pi, 0.0},
                             {0}, {"angle", "rate"}, {"torque"});
}

ControlAffineSystem cartpole(const CartPoleParams& params) {
  return ControlAffineSystem("cartpole", CartPole(params), {0.0, 0.0, 0.0, 0.0},
                             {0.0, std::numbers::pi, 0.0, 0.0}, {1},
                             {"cart_position", "pole_angle", "cart_velocity", "pole_rate"},
                             {"force"});
}

ControlAffineSystem quadcopter(const QuadcopterParams& params) {
  std::vector<double> goal(12, 0.0);
  // 1 m forward (+x), to the right (-y with y pointing left) and up (+z).
  goal[0] = 1.0;
  goal[1] = -1.0;
  goal[2] = 1.0;
  return ControlAffineSystem(
      "quadcopter", Quadcopter(params), std::vector<double>(12, 0.0), goal, {6, 7, 8},
      {"x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "roll_rate", "pitch_rate",
       "yaw_rate"},
      {"rotor1", "rotor2", "rotor3", "rotor4"});
}

ControlAffineSystem scalar_linear(const ScalarLinearParams& params) {
  return ControlAffineSystem("scalar_linear", ScalarLinear(params), {params.x0}, {0.0}, {},
                             {"x"}, {"u"});
}

}  // namespace fbsde
