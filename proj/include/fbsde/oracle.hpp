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

// Reference computations used to check the solver. Nothing here touches the
// tape, the cost module or the propagator; only the dynamics definitions are
// shared.

#ifndef FBSDE_ORACLE_HPP_
#define FBSDE_ORACLE_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsde/dynamics.hpp"

namespace fbsde::oracle {

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scalar LQ value V(x, t) = 1/2 P(t) x^2 + s(t) for
//   dx = (a x + b u) dt + sigma dw,  cost 1/2 q x^2 + 1/2 r u^2,  terminal 1/2 g_T x^2.
struct RiccatiSolution {
  double horizon = 0.0;
  std::size_t grid = 0;          // intervals
  double sigma = 0.0;
  std::vector<double> t;         // grid + 1 nodes, t[0] = 0
  std::vector<double> p;
  std::vector<double> s;
  double max_step_error = 0.0;   // largest step-doubling estimate

  // Linear interpolation between nodes.
  double p_at(double time) const;
  double s_at(double time) const;
  double value(double x, double time) const { return 0.5 * p_at(time) * x * x + s_at(time); }
  // Sigma^T V_x.
  double z(double x, double time) const { return sigma * p_at(time) * x; }
};

// RK4 backward from T. Each step is checked against two half steps; if the
// estimate exceeds `tol` the grid is rejected with ResolutionError.
RiccatiSolution solve_riccati(double a, double b, double sigma, double q, double r, double g_t,
                              double horizon, std::size_t grid, double tol = 1e-10);

// Brute-force backward induction for the same problem on a uniform x grid,
// with three-point Gauss-Hermite expectation over the noise and a ternary
// search over u. Returns V(x_k, 0) for every grid node.
struct DpSolution {
  std::vector<double> x;
  std::vector<double> value;
  double value_at(double x) const;
};
DpSolution dp_scalar_lq(double a, double b, double sigma, double q, double r, double g_t,
                        double horizon, double x_lo, double x_hi, std::size_t points, double dt);

// Classical RK4 on dx = (f + G u(t)) dt with the noise dropped.
// Returns steps + 1 states.
using ControlSignal = std::function<std::vector<double>(double t)>;
std::vector<std::vector<double>> rk4_integrate(const ControlAffineSystem& system,
                                               const ControlSignal& u, std::vector<double> x0,
                                               double horizon, std::size_t steps);

// Adaptive Simpson with Richardson correction; absolute tolerance `tol`.
double quadrature(const std::function<double(double)>& f, double lo, double hi, double tol);

// Central differences, one coordinate at a time. order 2 uses x +- h; order 4
// adds x +- 2h (error O(h^4)).
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::vector<double> x, double h, int order = 2);

}  // namespace fbsde::oracle

#endif  // FBSDE_ORACLE_HPP_
