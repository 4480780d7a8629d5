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

// Quadratic goal-reaching costs, optimal control laws and BSDE drivers.
//
// z is the value-gradient in noise coordinates (Sigma^T V_x), so every
// G^T V_x product becomes Gamma^T z. Functions are templated on the scalar
// type so the rollout can differentiate through them.

#ifndef FBSDE_COST_HPP_
#define FBSDE_COST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/dual.hpp"
#include "fbsde/dynamics.hpp"
#include "fbsde/tensor.hpp"

namespace fbsde {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CostSpec {
  std::vector<double> goal;           // n
  std::vector<std::size_t> angle_indices;
  std::vector<double> q;              // diagonal of Q, n
  std::vector<double> q_terminal;     // diagonal of Q_T, n
  Tensor r;                           // m x m, symmetric positive definite
  std::vector<double> u_max;          // m, used when constrained
  bool constrained = false;

  // Derived in validate(): R^-1.
  Tensor r_inv;

  std::size_t state_dim() const { return goal.size(); }
  std::size_t control_dim() const { return r.rows; }
  // Checks the invariants and fills r_inv. Throws ParameterError.
  void validate();
};

// Cost over a given system with diagonal R = diag(r_diag).
CostSpec make_cost(const ControlAffineSystem& system, std::vector<double> q,
                   std::vector<double> q_terminal, std::vector<double> r_diag,
                   std::vector<double> u_max, bool constrained);

// Running cost 1/2 q x^2 + 1/2 r u^2 and terminal 1/2 g_T x^2 for the scalar
// linear system, matching the Riccati convention.
CostSpec scalar_linear_cost(const ControlAffineSystem& system, double q, double r, double g_t);

namespace detail {
template <class T>
T goal_quadratic(const CostSpec& cost, const std::vector<double>& weights, std::span<const T> x) {
  T acc(0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    T e = x[i] - cost.goal[i];
    if (std::find(cost.angle_indices.begin(), cost.angle_indices.end(), i) !=
        cost.angle_indices.end()) {
      e = wrap_angle(e);
    }
    acc += e * e * weights[i];
  }
  return acc;
}

// Clamp on the sigmoid argument keeps |u| strictly below u_max in floating
// point: sig(30) = 1 - 1.9e-13.
inline constexpr double kSigArgLimit = 30.0;

template <class T>
T clamp_sig_arg(const T& a) {
  const double v = value_of(a);
  if (v > kSigArgLimit) return T(kSigArgLimit);
  if (v < -kSigArgLimit) return T(-kSigArgLimit);
  return a;
}
}  // namespace detail

// q(x) = (x - goal)^T Q (x - goal), angle errors wrapped to (-pi, pi].
template <class T>
T running_state_cost(const CostSpec& cost, std::span<const T> x) {
  return detail::goal_quadratic(cost, cost.q, x);
}

template <class T>
T terminal_cost(const CostSpec& cost, std::span<const T> x) {
  return detail::goal_quadratic(cost, cost.q_terminal, x);
}

// Gamma^T z for Gamma (v x m) row-major.
template <class T>
void gamma_transpose_z(std::span<const T> gamma, std::size_t v, std::size_t m,
                       std::span<const T> z, std::span<T> out) {
  for (std::size_t j = 0; j < m; ++j) {
    T acc(0.0);
    for (std::size_t i = 0; i < v; ++i) acc += gamma[i * m + j] * z[i];
    out[j] = acc;
  }
}

// u* = -R^-1 Gamma^T z.
template <class T>
void optimal_control_unconstrained(const CostSpec& cost, std::span<const T> z,
                                   std::span<const T> gamma, std::span<T> u) {
  const std::size_t m = cost.control_dim();
  const std::size_t v = z.size();
  std::array<T, kMaxControls> gz;
  gamma_transpose_z(gamma, v, m, z, std::span<T>(gz.data(), m));
  for (std::size_t j = 0; j < m; ++j) {
    T acc(0.0);
    for (std::size_t k = 0; k < m; ++k) acc -= gz[k] * cost.r_inv(j, k);
    u[j] = acc;
  }
}

// u*_j = u_max_j sig(-(R^-1 Gamma^T z)_j); |u*_j| < u_max_j always.
template <class T>
void optimal_control_constrained(const CostSpec& cost, std::span<const T> z,
                                 std::span<const T> gamma, std::span<T> u) {
  optimal_control_unconstrained(cost, z, gamma, u);
  for (std::size_t j = 0; j < cost.control_dim(); ++j) {
    u[j] = sig(detail::clamp_sig_arg(u[j])) * cost.u_max[j];
  }
}

// S(u) = c int_0^u sig^-1(s / u_max) ds
//      = c u_max [(1 + mu) ln(1 + mu) + (1 - mu) ln(1 - mu)],  mu = u / u_max.
template <class T>
T soft_constraint_cost(const T& u, double c, double u_max) {
  using std::log;
  const double mu_v = value_of(u) / u_max;
  if (!(std::abs(mu_v) < 1.0)) {
    throw DomainError("soft constraint cost needs |u| < u_max (u = " +
                      std::to_string(value_of(u)) + ", u_max = " + std::to_string(u_max) + ")");
  }
  const T mu = u / u_max;
  const T plus = 1.0 + mu;
  const T minus = 1.0 - mu;
  return (plus * log(plus) + minus * log(minus)) * (c * u_max);
}

// h = q(x) - 1/2 z^T Gamma R^-1 Gamma^T z.
template <class T>
T driver_unconstrained(const CostSpec& cost, std::span<const T> x, std::span<const T> z,
                       std::span<const T> gamma) {
  const std::size_t m = cost.control_dim();
  std::array<T, kMaxControls> gz;
  gamma_transpose_z(gamma, z.size(), m, z, std::span<T>(gz.data(), m));
  T quad(0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) quad += gz[j] * gz[k] * cost.r_inv(j, k);
  }
  return running_state_cost(cost, x) - quad * 0.5;
}

// h = q(x) + z^T Gamma u + sum_j S_j(u_j), using V_x^T G = z^T Gamma.
template <class T>
T driver_constrained(const CostSpec& cost, std::span<const T> x, std::span<const T> z,
                     std::span<const T> u, std::span<const T> gamma) {
  const std::size_t m = cost.control_dim();
  std::array<T, kMaxControls> gz;
  gamma_transpose_z(gamma, z.size(), m, z, std::span<T>(gz.data(), m));
  T h = running_state_cost(cost, x);
  for (std::size_t j = 0; j < m; ++j) {
    h += gz[j] * u[j];
    h += soft_constraint_cost(u[j], cost.r(j, j), cost.u_max[j]);
  }
  return h;
}

// Tape-level wrappers over a batch: z is M x v, gamma is the (constant) v x m
// matrix shared by all rows. Returns M x m controls.
Var optimal_control(const CostSpec& cost, const Var& z, const Tensor& gamma);

}  // namespace fbsde

#endif  // FBSDE_COST_HPP_
