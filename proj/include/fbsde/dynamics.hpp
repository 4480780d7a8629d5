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

// Control-affine stochastic systems dx = (f + G u) dt + Sigma dw with G = Sigma Gamma.
//
// Every model evaluates its coefficients for any scalar type T (double or a
// Dual), so the same code serves plain simulation and exact Jacobians inside
// the rollout tape. Matrices are written row-major into caller buffers.

#ifndef FBSDE_DYNAMICS_HPP_
#define FBSDE_DYNAMICS_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fbsde/dual.hpp"
#include "fbsde/tensor.hpp"

namespace fbsde {

inline constexpr std::size_t kMaxStates = 12;
inline constexpr std::size_t kMaxControls = 4;

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when the model cannot be evaluated at a state (e.g. gimbal lock).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Noise enters through the actuators: Sigma = sigma * G and Gamma = I / sigma.
template <class Derived>
struct ActuatorNoise {
  template <class T>
  void diffusion(std::span<const T> x, double t, std::span<T> out) const {
    const auto& self = static_cast<const Derived&>(*this);
    self.control_matrix(x, t, out);
    const std::size_t count = Derived::kStates * Derived::kControls;
    for (std::size_t i = 0; i < count; ++i) out[i] = out[i] * self.sigma();
  }
  template <class T>
  void gamma(std::span<const T> /*x*/, double /*t*/, std::span<T> out) const {
    const auto& self = static_cast<const Derived&>(*this);
    for (std::size_t i = 0; i < Derived::kControls; ++i) {
      for (std::size_t j = 0; j < Derived::kControls; ++j) {
        out[i * Derived::kControls + j] = T(i == j ? 1.0 / self.sigma() : 0.0);
      }
    }
  }
};

struct PendulumParams {
  double mass = 1.0;      // kg
  double length = 1.0;    // m
  double damping = 0.1;   // N m s / rad
  double gravity = 9.81;  // m / s^2
  double sigma = 1.0;
};

// State (theta, theta_dot); m l^2 theta_dd + m g l sin(theta) + b theta_dot = u.
class Pendulum : public ActuatorNoise<Pendulum> {
 public:
  static constexpr std::size_t kStates = 2;
  static constexpr std::size_t kControls = 1;

  explicit Pendulum(PendulumParams p);
  const PendulumParams& params() const { return p_; }
  double sigma() const { return p_.sigma; }

  template <class T>
  void drift(std::span<const T> x, double /*t*/, std::span<T> out) const {
    using std::sin;
    const double inertia = p_.mass * p_.length * p_.length;
    out[0] = x[1];
    out[1] = (-p_.mass * p_.gravity * p_.length * sin(x[0]) - p_.damping * x[1]) / inertia;
  }
  template <class T>
  void control_matrix(std::span<const T> /*x*/, double /*t*/, std::span<T> out) const {
    out[0] = T(0.0);
    out[1] = T(1.0 / (p_.mass * p_.length * p_.length));
  }

 private:
  PendulumParams p_;
};

struct CartPoleParams {
  double sigma = 1.0;
};

// Nondimensional cart-pole, state (x, theta, x_dot, theta_dot):
//   2 x_dd + theta_dd cos(theta) - theta_dot^2 sin(theta) = u
//   x_dd cos(theta) + theta_dd + sin(theta) = 0
class CartPole : public ActuatorNoise<CartPole> {
 public:
  static constexpr std::size_t kStates = 4;
  static constexpr std::size_t kControls = 1;

  explicit CartPole(CartPoleParams p);
  double sigma() const { return p_.sigma; }

  template <class T>
  void drift(std::span<const T> x, double /*t*/, std::span<T> out) const {
    using std::cos;
    using std::sin;
    const T s = sin(x[1]);
    const T c = cos(x[1]);
    const T denom = 2.0 - c * c;
    const T xdd = (s * c + x[3] * x[3] * s) / denom;
    out[0] = x[2];
    out[1] = x[3];
    out[2] = xdd;
    out[3] = -(xdd * c) - s;
  }
  template <class T>
  void control_matrix(std::span<const T> x, double /*t*/, std::span<T> out) const {
    using std::cos;
    const T c = cos(x[1]);
    const T inv = 1.0 / (2.0 - c * c);
    out[0] = T(0.0);
    out[1] = T(0.0);
    out[2] = inv;
    out[3] = -(c * inv);
  }

 private:
  CartPoleParams p_;
};

struct QuadcopterParams {
  double mass = 1.0;                             // kg
  double arm = 0.2;                              // m, rotor distance from center
  std::array<double, 3> inertia{0.01, 0.01, 0.02};  // kg m^2, body-axis diagonal
  double yaw_coefficient = 0.02;                 // m, reaction torque per unit thrust
  double gravity = 9.81;
  double sigma = 1.0;
};

// 12-state rigid body: position, velocity (world, z up), roll/pitch/yaw (ZYX),
// body rates. Inputs are the four rotor thrusts in "+" layout: front (+x),
// left (+y), back, right; rotors 1 and 3 spin opposite to 2 and 4.
class Quadcopter : public ActuatorNoise<Quadcopter> {
 public:
  static constexpr std::size_t kStates = 12;
  static constexpr std::size_t kControls = 4;

  explicit Quadcopter(QuadcopterParams p);
  const QuadcopterParams& params() const { return p_; }
  double sigma() const { return p_.sigma; }
  double hover_thrust() const { return p_.mass * p_.gravity / 4.0; }

  template <class T>
  void drift(std::span<const T> x, double /*t*/, std::span<T> out) const {
    using std::cos;
    using std::sin;
    using std::tan;
    const T& roll = x[6];
    const T& pitch = x[7];
    const T& p = x[9];
    const T& q = x[10];
    const T& r = x[11];
    const T cr = cos(roll), sr = sin(roll);
    const T cp = cos(pitch);
    if (std::abs(value_of(cp)) < 1e-9) {
      throw IntegrationError("quadcopter Euler-rate singularity at pitch = +-pi/2");
    }
    const T tp = tan(pitch);
    const auto& J = p_.inertia;
    for (std::size_t i = 0; i < 3; ++i) out[i] = x[3 + i];
    out[3] = T(0.0);
    out[4] = T(0.0);
    out[5] = T(-p_.gravity);
    out[6] = p + (sr * tp) * q + (cr * tp) * r;
    out[7] = cr * q - sr * r;
    out[8] = (sr * q + cr * r) / cp;
    out[9] = ((J[1] - J[2]) / J[0]) * (q * r);
    out[10] = ((J[2] - J[0]) / J[1]) * (p * r);
    out[11] = ((J[0] - J[1]) / J[2]) * (p * q);
  }

  template <class T>
  void control_matrix(std::span<const T> x, double /*t*/, std::span<T> out) const {
    using std::cos;
    using std::sin;
    constexpr std::size_t m = kControls;
    for (std::size_t i = 0; i < kStates * m; ++i) out[i] = T(0.0);
    const T cr = cos(x[6]), sr = sin(x[6]);
    const T cp = cos(x[7]), sp = sin(x[7]);
    const T cy = cos(x[8]), sy = sin(x[8]);
    // Body z axis expressed in the world frame.
    const T ax = cr * sp * cy + sr * sy;
    const T ay = cr * sp * sy - sr * cy;
    const T az = cr * cp;
    const double inv_mass = 1.0 / p_.mass;
    for (std::size_t j = 0; j < m; ++j) {
      out[3 * m + j] = ax * inv_mass;
      out[4 * m + j] = ay * inv_mass;
      out[5 * m + j] = az * inv_mass;
    }
    const double l = p_.arm;
    const double k = p_.yaw_coefficient;
    const auto& J = p_.inertia;
    // roll torque l (u2 - u4), pitch torque l (u3 - u1), yaw k (u1 - u2 + u3 - u4)
    const std::array<std::array<double, 4>, 3> mix{{
        {0.0, l, 0.0, -l},
        {-l, 0.0, l, 0.0},
        {k, -k, k, -k},
    }};
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t j = 0; j < m; ++j) out[(9 + a) * m + j] = T(mix[a][j] / J[a]);
    }
  }

 private:
  QuadcopterParams p_;
};

struct ScalarLinearParams {
  double a = 0.0;
  double b = 1.0;
  double sigma = 1.0;
  double x0 = 1.0;
};

// dx = (a x + b u) dt + sigma dw; Sigma = sigma, Gamma = b / sigma.
class ScalarLinear {
 public:
  static constexpr std::size_t kStates = 1;
  static constexpr std::size_t kControls = 1;

  explicit ScalarLinear(ScalarLinearParams p);
  const ScalarLinearParams& params() const { return p_; }
  double sigma() const { return p_.sigma; }

  template <class T>
  void drift(std::span<const T> x, double /*t*/, std::span<T> out) const {
    out[0] = x[0] * p_.a;
  }
  template <class T>
  void control_matrix(std::span<const T> /*x*/, double /*t*/, std::span<T> out) const {
    out[0] = T(p_.b);
  }
  template <class T>
  void diffusion(std::span<const T> /*x*/, double /*t*/, std::span<T> out) const {
    out[0] = T(p_.sigma);
  }
  template <class T>
  void gamma(std::span<const T> /*x*/, double /*t*/, std::span<T> out) const {
    out[0] = T(p_.b / p_.sigma);
  }

 private:
  ScalarLinearParams p_;
};

class ControlAffineSystem {
 public:
  using Model = std::variant<Pendulum, CartPole, Quadcopter, ScalarLinear>;

  ControlAffineSystem(std::string name, Model model, std::vector<double> x_init,
                      std::vector<double> x_goal, std::vector<std::size_t> angle_indices,
                      std::vector<std::string> state_names, std::vector<std::string> control_names);

  const std::string& name() const { return name_; }
  std::size_t state_dim() const { return n_; }
  std::size_t control_dim() const { return m_; }
  // All shipped models use noise of the same dimension as the control.
  std::size_t noise_dim() const { return m_; }
  const std::vector<double>& x_init() const { return x_init_; }
  const std::vector<double>& x_goal() const { return x_goal_; }
  const std::vector<std::size_t>& angle_indices() const { return angle_indices_; }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::string>& control_names() const { return control_names_; }
  const Model& model() const { return model_; }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), model_);
  }

  // Plain double evaluations. Matrices come back as Tensors (rows x cols).
  std::vector<double> drift(std::span<const double> x, double t) const;
  Tensor control_matrix(std::span<const double> x, double t) const;
  Tensor diffusion(std::span<const double> x, double t) const;
  Tensor gamma(std::span<const double> x, double t) const;

 private:
  std::string name_;
  Model model_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> x_init_;
  std::vector<double> x_goal_;
  std::vector<std::size_t> angle_indices_;
  std::vector<std::string> state_names_;
  std::vector<std::string> control_names_;
};

// Factories with the task definitions: start state, goal, angle coordinates.
ControlAffineSystem pendulum(const PendulumParams& params);
ControlAffineSystem cartpole(const CartPoleParams& params);
ControlAffineSystem quadcopter(const QuadcopterParams& params);
ControlAffineSystem scalar_linear(const ScalarLinearParams& params);

}  // namespace fbsde

#endif  // FBSDE_DYNAMICS_HPP_
