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

#include "fbsde/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fbsde::oracle {

namespace {

double interp(const std::vector<double>& t, const std::vector<double>& y, double time) {
  if (time <= t.front()) return y.front();
  if (time >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
  const double w = (time - t[k]) / (t[k + 1] - t[k]);
  return (1.0 - w) * y[k] + w * y[k + 1];
}

struct Ps {
  double p, s;
};

}  // namespace

double RiccatiSolution::p_at(double time) const { return interp(t, p, time); }
double RiccatiSolution::s_at(double time) const { return interp(t, s, time); }

RiccatiSolution solve_riccati(double a, double b, double sigma, double q, double r, double g_t,
                              double horizon, std::size_t grid, double tol) {
  if (!(r > 0.0)) throw std::invalid_argument("solve_riccati needs r > 0");
  if (!(horizon > 0.0) || grid < 1) throw std::invalid_argument("solve_riccati needs T > 0, grid >= 1");
  // Backward time tau = T - t.
  auto rhs = [&](const Ps& y) {
    return Ps{2.0 * a * y.p + q - b * b * y.p * y.p / r, 0.5 * sigma * sigma * y.p};
  };
  auto rk4 = [&](const Ps& y, double h) {
    const Ps k1 = rhs(y);
    const Ps k2 = rhs({y.p + 0.5 * h * k1.p, y.s + 0.5 * h * k1.s});
    const Ps k3 = rhs({y.p + 0.5 * h * k2.p, y.s + 0.5 * h * k2.s});
    const Ps k4 = rhs({y.p + h * k3.p, y.s + h * k3.s});
    return Ps{y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
              y.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s)};
  };

  RiccatiSolution sol;
  sol.horizon = horizon;
  sol.grid = grid;
  sol.sigma = sigma;
  sol.t.resize(grid + 1);
  sol.p.resize(grid + 1);
  sol.s.resize(grid + 1);
  const double h = horizon / static_cast<double>(grid);
  Ps y{g_t, 0.0};
  sol.t[grid] = horizon;
  sol.p[grid] = y.p;
  sol.s[grid] = y.s;
  for (std::size_t k = grid; k-- > 0;) {
    const Ps full = rk4(y, h);
    const Ps half = rk4(rk4(y, 0.5 * h), 0.5 * h);
    // Richardson estimate of the local error of the full step.
    const double err = std::max(std::abs(full.p - half.p), std::abs(full.s - half.s)) * 16.0 / 15.0;
    sol.max_step_error = std::max(sol.max_step_error, err);
    if (!(err <= tol * std::max(1.0, std::abs(half.p)))) {
      throw ResolutionError("Riccati grid of " + std::to_string(grid) +
                            " steps too coarse: local error " + std::to_string(err));
    }
    y = half;
    sol.t[k] = static_cast<double>(k) * h;
    sol.p[k] = y.p;
    sol.s[k] = y.s;
  }
  return sol;
}

double DpSolution::value_at(double xq) const { return interp(x, value, xq); }

DpSolution dp_scalar_lq(double a, double b, double sigma, double q, double r, double g_t,
                        double horizon, double x_lo, double x_hi, std::size_t points, double dt) {
  if (points < 3 || !(x_hi > x_lo) || !(dt > 0.0)) throw std::invalid_argument("dp_scalar_lq: bad grid");
  const double dx = (x_hi - x_lo) / static_cast<double>(points - 1);
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  DpSolution out;
  out.x.resize(points);
  for (std::size_t i = 0; i < points; ++i) out.x[i] = x_lo + static_cast<double>(i) * dx;
  std::vector<double> v(points), next(points);
  for (std::size_t i = 0; i < points; ++i) v[i] = 0.5 * g_t * out.x[i] * out.x[i];

  // Linear interpolation with linear extrapolation past the ends.
  auto lookup = [&](const std::vector<double>& val, double xq) {
    double pos = (xq - x_lo) / dx;
    auto k = static_cast<std::ptrdiff_t>(std::floor(pos));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(points) - 2);
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * val[static_cast<std::size_t>(k)] + w * val[static_cast<std::size_t>(k) + 1];
  };
  // Three-point Gauss-Hermite rule for a standard normal.
  const double spread = sigma * std::sqrt(3.0 * dt);
  const std::array<double, 3> nodes{-spread, 0.0, spread};
  const std::array<double, 3> weights{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);

  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < points; ++i) {
      const double xi = out.x[i];
      auto total = [&](double u) {
        const double mean = xi + (a * xi + b * u) * dt;
        double e = 0.0;
        for (std::size_t j = 0; j < 3; ++j) e += weights[j] * lookup(v, mean + nodes[j]);
        return (0.5 * q * xi * xi + 0.5 * r * u * u) * dt + e;
      };
      double lo = -50.0, hi = 50.0;
      double c = hi - golden * (hi - lo), d = lo + golden * (hi - lo);
      double fc = total(c), fd = total(d);
      for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - golden * (hi - lo);
          fc = total(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + golden * (hi - lo);
          fd = total(d);
        }
      }
      next[i] = total(0.5 * (lo + hi));
    }
    std::swap(v, next);
  }
  out.value = std::move(v);
  return out;
}

std::vector<std::vector<double>> rk4_integrate(const ControlAffineSystem& system,
                                               const ControlSignal& u, std::vector<double> x0,
                                               double horizon, std::size_t steps) {
  const std::size_t n = system.state_dim();
  const std::size_t m = system.control_dim();
  if (x0.size() != n) throw std::invalid_argument("rk4_integrate: x0 has wrong dimension");
  if (steps < 1) throw std::invalid_argument("rk4_integrate needs steps >= 1");
  auto rhs = [&](const std::vector<double>& x, double t) {
    std::vector<double> dx = system.drift(x, t);
    const Tensor g = system.control_matrix(x, t);
    const std::vector<double> ut = u ? u(t) : std::vector<double>(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) dx[i] += g(i, j) * ut[j];
    }
    return dx;
  };
  auto axpy = [&](const std::vector<double>& x, double h, const std::vector<double>& k) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h * k[i];
    return out;
  };
  const double h = horizon / static_cast<double>(steps);
  std::vector<std::vector<double>> traj{x0};
  std::vector<double> x = std::move(x0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const auto k1 = rhs(x, t);
    const auto k2 = rhs(axpy(x, 0.5 * h, k1), t + 0.5 * h);
    const auto k3 = rhs(axpy(x, 0.5 * h, k2), t + 0.5 * h);
    const auto k4 = rhs(axpy(x, h, k3), t + h);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    traj.push_back(x);
  }
  return traj;
}

namespace {

constexpr int kMaxDepth = 50;

double simpson(const std::function<double(double)>& f, double lo, double hi, double flo,
               double fmid, double fhi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
  const double flm = f(lm), frm = f(rm);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  const double diff = left + right - whole;
  if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  if (depth >= kMaxDepth) {
    throw ToleranceError("quadrature did not reach tolerance near x = " + std::to_string(mid));
  }
  return simpson(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1) +
         simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1);
}

}  // namespace

double quadrature(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("quadrature needs tol > 0");
  if (lo == hi) return 0.0;
  if (lo > hi) return -quadrature(f, hi, lo, tol);
  const double mid = 0.5 * (lo + hi);
  const double flo = f(lo), fmid = f(mid), fhi = f(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  const double result = simpson(f, lo, hi, flo, fmid, fhi, whole, tol, 0);
  if (!std::isfinite(result)) throw ToleranceError("quadrature produced a non-finite value");
  return result;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::vector<double> x, double h, int order) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad needs h > 0");
  if (order != 2 && order != 4) throw std::invalid_argument("finite_diff_grad order must be 2 or 4");
  std::vector<double> g(x.size());
  auto at = [&](std::size_t i, double keep, double offset) {
    x[i] = keep + offset;
    const double v = f(x);
    x[i] = keep;
    return v;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    const double d1 = at(i, keep, h) - at(i, keep, -h);
    if (order == 2) {
      g[i] = d1 / (2.0 * h);
    } else {
      const double d2 = at(i, keep, 2.0 * h) - at(i, keep, -2.0 * h);
      g[i] = (8.0 * d1 - d2) / (12.0 * h);
    }
  }
  return g;
}

}  // namespace fbsde::oracle
