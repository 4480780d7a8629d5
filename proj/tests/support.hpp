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

// Shared helpers: seeded generators for property tests and a finite
// difference gradient checker built on the oracle library.

#ifndef FBSDE_TESTS_SUPPORT_HPP_
#define FBSDE_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "fbsde/oracle.hpp"
#include "fbsde/tensor.hpp"

namespace fbsde::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  Tensor tensor(std::size_t r, std::size_t c, double lo = -2.0, double hi = 2.0) {
    Tensor t(r, c);
    for (double& x : t.values) x = uniform(lo, hi);
    return t;
  }
  std::vector<double> vec(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// |a - b| / max(|a|, |b|), with `floor` guarding entries that are zero up to
// floating-point cancellation.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradReport {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Registers `inputs` as parameters, differentiates the scalar loss by reverse
// mode and compares every entry with central differences of step h.
inline GradReport check_gradients(const LossBuilder& build, const std::vector<Tensor>& inputs,
                                  double h = 1e-5, double floor = 1e-8) {
  Tape tape;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    leaves.push_back(tape.parameter(inputs[i], static_cast<int>(i)));
  }
  const Var loss = build(tape, leaves);
  const std::vector<Tensor> grads = tape.gradients(loss, inputs.size());

  std::vector<double> flat;
  for (const auto& t : inputs) flat.insert(flat.end(), t.values.begin(), t.values.end());
  auto f = [&](std::span<const double> x) {
    Tape t2;
    std::vector<Var> ls;
    std::size_t off = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Tensor v(inputs[i].rows, inputs[i].cols,
               std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(off),
                                   x.begin() + static_cast<std::ptrdiff_t>(off + inputs[i].size())));
      off += inputs[i].size();
      ls.push_back(t2.parameter(std::move(v), static_cast<int>(i)));
    }
    return build(t2, ls).value().item();
  };
  const std::vector<double> fd = oracle::finite_diff_grad(f, flat, h);

  GradReport rep;
  std::size_t k = 0;
  for (const auto& g : grads) {
    for (double v : g.values) {
      rep.max_rel = std::max(rep.max_rel, rel_err(v, fd[k++], floor));
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace fbsde::testing

#endif  // FBSDE_TESTS_SUPPORT_HPP_
