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

#include "fbsde/propagator.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <type_traits>

namespace fbsde {

RolloutError::RolloutError(std::size_t step, const std::string& what)
    : std::runtime_error("rollout failed at step " + std::to_string(step) + ": " + what),
      step_(step) {}

std::mt19937_64 trajectory_stream(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> sample_noise(std::mt19937_64& rng, std::size_t v, double dt) {
  if (!(dt > 0.0)) throw ContractError("sample_noise needs dt > 0");
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  std::vector<double> out(v);
  for (double& x : out) x = normal(rng);
  return out;
}

namespace {

template <class Model, class D>
void step_row(const Model& model, const CostSpec& cost, std::span<const D> in, std::span<D> out,
              std::span<const double> dw, double time, double dt) {
  constexpr std::size_t n = Model::kStates;
  constexpr std::size_t m = Model::kControls;
  const std::size_t v = dw.size();
  const std::span<const D> x = in.subspan(0, n);
  const D& y = in[n];
  const std::span<const D> z = in.subspan(n + 1, v);

  std::array<D, n> f;
  std::array<D, n * kMaxControls> sigma;
  std::array<D, kMaxControls * m> gamma;
  std::array<D, m> u;
  model.drift(x, time, std::span<D>(f));
  model.diffusion(x, time, std::span<D>(sigma.data(), n * v));
  model.gamma(x, time, std::span<D>(gamma.data(), v * m));
  const std::span<const D> gs(gamma.data(), v * m);

  D h;
  if (cost.constrained) {
    optimal_control_constrained(cost, z, gs, std::span<D>(u));
    h = driver_constrained(cost, x, z, std::span<const D>(u), gs);
  } else {
    optimal_control_unconstrained(cost, z, gs, std::span<D>(u));
    h = driver_unconstrained(cost, x, z, gs);
  }

  // Gamma u dt + dw, in noise coordinates.
  std::array<D, kMaxControls> push;
  for (std::size_t i = 0; i < v; ++i) {
    D acc(0.0);
    for (std::size_t j = 0; j < m; ++j) acc += gamma[i * m + j] * u[j];
    push[i] = acc * dt + dw[i];
  }

  D y_next = y - h * dt;
  for (std::size_t i = 0; i < v; ++i) {
    D gu(0.0);
    for (std::size_t j = 0; j < m; ++j) gu += gamma[i * m + j] * u[j];
    y_next += z[i] * gu * dt + z[i] * dw[i];
  }

  for (std::size_t k = 0; k < n; ++k) {
    D acc = x[k] + f[k] * dt;
    for (std::size_t i = 0; i < v; ++i) acc += sigma[k * v + i] * push[i];
    out[k] = acc;
  }
  out[n] = y_next;
  for (std::size_t j = 0; j < m; ++j) out[n + 1 + j] = u[j];
}

void check_finite_states(const Tensor& x, std::size_t step) {
  for (double s : x.values) {
    if (!std::isfinite(s) || std::abs(s) > kDivergenceLimit) {
      throw RolloutError(step, "state diverged (|x| > " + std::to_string(kDivergenceLimit) + ")");
    }
  }
}

}  // namespace

StepOutput step(const Var& x, const Var& y, const Var& z, const Tensor& dw, double time,
                const ControlAffineSystem& system, const CostSpec& cost, double dt) {
  const std::size_t n = system.state_dim();
  const std::size_t m = system.control_dim();
  const std::size_t v = system.noise_dim();
  if (x.cols() != n || y.cols() != 1 || z.cols() != v || dw.cols != v) {
    throw DimensionError("step: expected x[Mx" + std::to_string(n) + "], y[Mx1], z[Mx" +
                         std::to_string(v) + "], dw[Mx" + std::to_string(v) + "]");
  }
  if (x.rows() != y.rows() || x.rows() != z.rows() || x.rows() != dw.rows) {
    throw DimensionError("step: batch sizes disagree");
  }
  Tape& tape = *x.tape();
  const Var inputs[] = {x, y, z};
  Var out = system.visit([&](const auto& model) {
    return tape.row_map(std::span<const Var>(inputs), n + 1 + m,
                        [&](std::size_t row, auto in, auto o) {
                          const std::span<const double> noise(dw.values.data() + row * v, v);
                          step_row(model, cost, in, o, noise, time, dt);
                        });
  });
  return {slice_cols(out, 0, n), slice_cols(out, n, 1), slice_cols(out, n + 1, m)};
}

RolloutBatch rollout(const Var& y0, const Var& z0, const ZPredictor& predict,
                     const ControlAffineSystem& system, const CostSpec& cost,
                     const RolloutConfig& config) {
  const std::size_t M = config.batch;
  const std::size_t N = config.steps;
  const std::size_t n = system.state_dim();
  const std::size_t m = system.control_dim();
  const std::size_t v = system.noise_dim();
  if (M < 1 || N < 1) throw ContractError("rollout needs M >= 1 and N >= 1");
  if (!(config.dt > 0.0)) throw ContractError("rollout needs dt > 0");
  if (y0.rows() != 1 || y0.cols() != 1 || z0.rows() != 1 || z0.cols() != v) {
    throw DimensionError("rollout: y0 must be 1x1 and z0 1x" + std::to_string(v));
  }
  Tape& tape = *y0.tape();

  RolloutBatch b;
  b.batch = M;
  b.steps = N;
  b.n = n;
  b.v = v;
  b.m = m;
  b.states.resize(M * (N + 1) * n);
  b.values.resize(M * (N + 1));
  b.z.resize(M * N * v);
  b.controls.resize(M * N * m);
  b.noise.resize(M * N * v);
  b.targets.resize(M);

  for (std::size_t i = 0; i < M; ++i) {
    std::mt19937_64 rng = trajectory_stream(config.seed, i);
    for (std::size_t t = 0; t < N; ++t) {
      const auto dw = sample_noise(rng, v, config.dt);
      for (std::size_t k = 0; k < v; ++k) b.noise[(i * N + t) * v + k] = dw[k];
    }
  }

  Tensor x_init(M, n);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t k = 0; k < n; ++k) x_init(i, k) = system.x_init()[k];
  }
  Var x = tape.constant(std::move(x_init));
  Var y = repeat_rows(y0, M);
  Var z = repeat_rows(z0, M);

  auto record = [&](std::size_t t) {
    const Tensor& xv = x.value();
    const Tensor& yv = y.value();
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < n; ++k) b.states[(i * (N + 1) + t) * n + k] = xv(i, k);
      b.values[i * (N + 1) + t] = yv(i, 0);
    }
  };
  record(0);

  for (std::size_t t = 0; t < N; ++t) {
    Tensor dw(M, v);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < v; ++k) dw(i, k) = b.noise[(i * N + t) * v + k];
    }
    const Tensor& zv = z.value();
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < v; ++k) b.z[(i * N + t) * v + k] = zv(i, k);
    }
    StepOutput out;
    try {
      out = step(x, y, z, dw, static_cast<double>(t) * config.dt, system, cost, config.dt);
    } catch (const IntegrationError& e) {
      throw RolloutError(t, e.what());
    } catch (const DomainError& e) {
      throw RolloutError(t, e.what());
    }
    check_finite_states(out.x.value(), t + 1);
    for (double s : out.y.value().values) {
      if (!std::isfinite(s)) throw RolloutError(t + 1, "value process is not finite");
    }
    x = out.x;
    y = out.y;
    const Tensor& uv = out.u.value();
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < m; ++j) b.controls[(i * N + t) * m + j] = uv(i, j);
    }
    record(t + 1);
    if (t + 1 < N) z = predict(x, t + 1);
  }

  const Var xs[] = {x};
  b.target = tape.row_map(std::span<const Var>(xs), 1, [&](std::size_t, auto in, auto o) {
    o[0] = terminal_cost(cost, in);
  });
  b.y_terminal = y;
  for (std::size_t i = 0; i < M; ++i) b.targets[i] = b.target.value()(i, 0);
  return b;
}

RolloutBatch rollout(const BoundPolicy& policy, const ControlAffineSystem& system,
                     const CostSpec& cost, const RolloutConfig& config) {
  const PolicyShape& s = policy.shape();
  if (s.state_dim != system.state_dim() || s.noise_dim != system.noise_dim()) {
    throw DimensionError("policy dimensions (n=" + std::to_string(s.state_dim) +
                         ", v=" + std::to_string(s.noise_dim) + ") do not match system " +
                         system.name());
  }
  if (s.steps != config.steps) {
    throw DimensionError("policy built for N=" + std::to_string(s.steps) + ", rollout uses N=" +
                         std::to_string(config.steps));
  }
  std::optional<RecurrentState> state = policy.initial_state(config.batch);
  ZPredictor predict = [&](const Var& x, std::size_t t) {
    return policy.predict_z(x, t, state ? &*state : nullptr);
  };
  return rollout(policy.y0(), policy.z0(), predict, system, cost, config);
}

Var loss(const RolloutBatch& batch, std::span<const Var> decayed, double lambda) {
  if (!batch.y_terminal.valid()) throw ContractError("loss needs a rollout on a live tape");
  Var mse = scale(sum_squares(sub(batch.target, batch.y_terminal)),
                  1.0 / static_cast<double>(batch.batch));
  if (lambda == 0.0 || decayed.empty()) return mse;
  Var penalty = sum_squares(decayed.front());
  for (std::size_t i = 1; i < decayed.size(); ++i) penalty = add(penalty, sum_squares(decayed[i]));
  return add(mse, scale(penalty, lambda));
}

void write_trajectories_csv(std::ostream& os, const RolloutBatch& b, double dt) {
  os << "traj,step,time";
  for (std::size_t k = 0; k < b.n; ++k) os << ",x" << k;
  os << ",y";
  for (std::size_t j = 0; j < b.m; ++j) os << ",u" << j;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < b.batch; ++i) {
    for (std::size_t t = 0; t <= b.steps; ++t) {
      os << i << ',' << t << ',' << static_cast<double>(t) * dt;
      for (std::size_t k = 0; k < b.n; ++k) os << ',' << b.state(i, t, k);
      os << ',' << b.value(i, t);
      for (std::size_t j = 0; j < b.m; ++j) {
        os << ',';
        if (t < b.steps) os << b.control(i, t, j);
      }
      os << '\n';
    }
  }
}

}  // namespace fbsde
