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

#ifndef FBSDE_DUAL_HPP_
#define FBSDE_DUAL_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace fbsde {

// Forward-mode dual number carrying up to N directional derivatives.
// Used to obtain exact per-row Jacobians of the fused rollout step, which the
// reverse-mode tape then consumes as a single node.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

  static Dual variable(double value, std::size_t index) {
    Dual r(value);
    r.d[index] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
};

template <std::size_t N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <std::size_t N>
Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }

template <std::size_t N>
Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <std::size_t N>
Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <std::size_t N>
Dual<N> operator-(double a, const Dual<N>& b) {
  Dual<N> r(a);
  return r -= b;
}
template <std::size_t N>
Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <std::size_t N>
Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <std::size_t N>
Dual<N> operator/(double a, const Dual<N>& b) {
  Dual<N> r(a);
  return r /= b;
}
template <std::size_t N>
Dual<N> operator-(Dual<N> a) { return a * -1.0; }

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double value, double slope) {
  Dual<N> r(value);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * x.d[i];
  return r;
}
}  // namespace detail

template <std::size_t N>
Dual<N> sin(const Dual<N>& x) { return detail::chain(x, std::sin(x.v), std::cos(x.v)); }
template <std::size_t N>
Dual<N> cos(const Dual<N>& x) { return detail::chain(x, std::cos(x.v), -std::sin(x.v)); }
template <std::size_t N>
Dual<N> tan(const Dual<N>& x) {
  const double t = std::tan(x.v);
  return detail::chain(x, t, 1.0 + t * t);
}
template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> log(const Dual<N>& x) { return detail::chain(x, std::log(x.v), 1.0 / x.v); }
template <std::size_t N>
Dual<N> tanh(const Dual<N>& x) {
  const double t = std::tanh(x.v);
  return detail::chain(x, t, 1.0 - t * t);
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.v);
  return detail::chain(x, s, 0.5 / s);
}

// Scalar helpers usable with both double and Dual.
inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.v; }

// Wraps an angle difference into (-pi, pi]. The shift is piecewise constant,
// so derivatives pass through unchanged.
template <class T>
T wrap_angle(const T& a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double raw = value_of(a);
  double wrapped = std::remainder(raw, two_pi);
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return a + (wrapped - raw);
}

}  // namespace fbsde

#endif  // FBSDE_DUAL_HPP_
