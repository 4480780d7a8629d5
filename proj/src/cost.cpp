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

#include "fbsde/cost.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace fbsde {

namespace {

// Gauss-Jordan inverse with partial pivoting; m <= 4 here.
Tensor invert(const Tensor& a) {
  const std::size_t n = a.rows;
  Tensor work = a;
  Tensor inv = Tensor::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    }
    if (std::abs(work(pivot, col)) < 1e-300) throw ParameterError("R is singular");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const double d = work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

bool positive_definite(const Tensor& a) {
  // Cholesky attempt.
  const std::size_t n = a.rows;
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return true;
}

}  // namespace

void CostSpec::validate() {
  const std::size_t n = goal.size();
  if (q.size() != n || q_terminal.size() != n) {
    throw ParameterError("cost weights must have state dimension " + std::to_string(n));
  }
  for (double w : q) {
    if (w < 0.0) throw ParameterError("Q must be positive semidefinite");
  }
  for (double w : q_terminal) {
    if (w < 0.0) throw ParameterError("Q_T must be positive semidefinite");
  }
  const std::size_t m = r.rows;
  if (m == 0 || r.cols != m || m > kMaxControls) throw ParameterError("R must be square, m <= 4");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (r(i, j) != r(j, i)) throw ParameterError("R must be symmetric");
    }
  }
  if (!positive_definite(r)) throw ParameterError("R must be positive definite");
  if (constrained) {
    if (u_max.size() != m) throw ParameterError("u_max must have control dimension");
    for (double b : u_max) {
      if (!(b > 0.0)) throw ParameterError("u_max must be strictly positive");
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j && r(i, j) != 0.0) {
          throw ParameterError("constrained control needs diagonal R (weights c_j)");
        }
      }
    }
  }
  for (std::size_t i : angle_indices) {
    if (i >= n) throw ParameterError("angle index out of range");
  }
  r_inv = invert(r);
}

CostSpec make_cost(const ControlAffineSystem& system, std::vector<double> q,
                   std::vector<double> q_terminal, std::vector<double> r_diag,
                   std::vector<double> u_max, bool constrained) {
  CostSpec c;
  c.goal = system.x_goal();
  c.angle_indices = system.angle_indices();
  c.q = std::move(q);
  c.q_terminal = std::move(q_terminal);
  if (r_diag.size() != system.control_dim()) {
    throw ParameterError("R must have " + std::to_string(system.control_dim()) + " entries");
  }
  c.r = Tensor(r_diag.size(), r_diag.size());
  for (std::size_t i = 0; i < r_diag.size(); ++i) c.r(i, i) = r_diag[i];
  c.u_max = std::move(u_max);
  c.constrained = constrained;
  c.validate();
  return c;
}

CostSpec scalar_linear_cost(const ControlAffineSystem& system, double q, double r, double g_t) {
  if (!(r > 0.0)) throw ParameterError("scalar-linear r must be positive");
  return make_cost(system, {0.5 * q}, {0.5 * g_t}, {r}, {}, false);
}

Var optimal_control(const CostSpec& cost, const Var& z, const Tensor& gamma) {
  Tape& tape = *z.tape();
  const std::size_t m = cost.control_dim();
  const std::size_t v = z.cols();
  if (gamma.rows != v || gamma.cols != m) {
    throw DimensionError("optimal_control: Gamma " + gamma.shape_str() + " does not match z " +
                         z.value().shape_str());
  }
  const Var inputs[] = {z};
  return tape.row_map(std::span<const Var>(inputs), m, [&](std::size_t, auto in, auto out) {
    using D = std::remove_cvref_t<decltype(in[0])>;
    std::array<D, kMaxControls * kMaxControls> g;
    for (std::size_t i = 0; i < v * m; ++i) g[i] = D(gamma.values[i]);
    const std::span<const D> gs(g.data(), v * m);
    if (cost.constrained) {
      optimal_control_constrained(cost, in, gs, out);
    } else {
      optimal_control_unconstrained(cost, in, gs, out);
    }
  });
}

}  // namespace fbsde
