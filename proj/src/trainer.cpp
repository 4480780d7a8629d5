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

#include "fbsde/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace fbsde {

double LrSchedule::rate_at(std::size_t iteration) const {
  double rate = pieces.front().second;
  for (const auto& [start, r] : pieces) {
    if (iteration >= start) rate = r;
  }
  return rate;
}

void LrSchedule::validate() const {
  if (pieces.empty()) throw ParameterError("learning-rate schedule is empty");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!(pieces[i].second > 0.0)) throw ParameterError("learning rates must be positive");
    if (i > 0 && pieces[i].first <= pieces[i - 1].first) {
      throw ParameterError("learning-rate schedule iterations must increase");
    }
  }
}

LrSchedule LrSchedule::parse(const std::string& text) {
  LrSchedule s;
  s.pieces.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        s.pieces.emplace_back(1, std::stod(item));
      } else {
        s.pieces.emplace_back(std::stoul(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      }
    } catch (const std::logic_error&) {
      throw ParameterError("cannot parse learning-rate piece '" + item + "'");
    }
  }
  s.validate();
  return s;
}

std::string LrSchedule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out += ", ";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, pieces[i].second);
    out += std::to_string(pieces[i].first) + ':' + std::string(buf, res.ptr);
  }
  return out;
}

LrSchedule LrSchedule::standard(std::size_t iterations) {
  LrSchedule s;
  const auto drop = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(iterations)));
  s.pieces = {{1, 1e-3}};
  if (drop >= 1) s.pieces.emplace_back(drop + 1, 1e-4);
  return s;
}

void TrainConfig::validate() const {
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  if (batch < 1) throw ParameterError("batch size must be >= 1");
  if (weight_decay < 0.0) throw ParameterError("weight decay must be >= 0");
  if (grad_clip < 0.0) throw ParameterError("grad_clip must be >= 0");
  schedule.validate();
}

void adam_step(PolicyParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double rate) {
  const std::size_t count = params.items.size();
  if (grads.size() != count) {
    throw ContractError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(count) + " parameters");
  }
  if (state.m.empty()) {
    for (const auto& p : params.items) {
      state.m.emplace_back(p.value.rows, p.value.cols);
      state.v.emplace_back(p.value.rows, p.value.cols);
    }
  }
  if (state.m.size() != count) throw ContractError("adam_step: optimizer state size mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    if (!grads[i].same_shape(params.items[i].value) || !state.m[i].same_shape(grads[i])) {
      throw ContractError("adam_step: shape mismatch for " + params.items[i].name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < count; ++i) {
    auto& w = params.items[i].value.values;
    auto& m = state.m[i].values;
    auto& v = state.v[i].values;
    const auto& g = grads[i].values;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= rate * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

std::string to_json_line(const IterationMetrics& m) {
  nlohmann::ordered_json j;
  j["iter"] = m.iter;
  j["loss"] = m.loss;
  j["y0"] = m.y0;
  j["mean_terminal_cost"] = m.mean_terminal_cost;
  j["grad_norm"] = m.grad_norm;
  j["lr"] = m.lr;
  j["wall_ms"] = m.wall_ms;
  return j.dump();
}

IterationMetrics metrics_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  IterationMetrics m;
  m.iter = j.at("iter").get<std::size_t>();
  m.loss = j.at("loss").get<double>();
  m.y0 = j.at("y0").get<double>();
  m.mean_terminal_cost = j.at("mean_terminal_cost").get<double>();
  m.grad_norm = j.at("grad_norm").get<double>();
  m.lr = j.at("lr").get<double>();
  m.wall_ms = j.at("wall_ms").get<double>();
  return m;
}

std::uint64_t iteration_seed(std::uint64_t run_seed, std::size_t iteration) {
  // splitmix64 of (seed, iteration)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(iteration) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TrainResult train(const ControlAffineSystem& system, const CostSpec& cost, PolicyParams initial,
                  std::size_t steps, double dt, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  TrainResult result;
  result.params = std::move(initial);
  AdamState adam;
  for (std::size_t k = 1; k <= config.iterations; ++k) {
    const auto start = std::chrono::steady_clock::now();
    Tape tape;
    BoundPolicy policy(result.params, tape);
    RolloutConfig rc{steps, dt, config.batch, iteration_seed(config.seed, k)};
    IterationMetrics m;
    m.iter = k;
    m.y0 = result.params.y0().item();
    std::vector<Tensor> grads;
    try {
      RolloutBatch batch = rollout(policy, system, cost, rc);
      const auto decayed = policy.decayed();
      Var l = loss(batch, decayed, config.weight_decay);
      m.loss = l.value().item();
      if (!std::isfinite(m.loss)) throw RolloutError(steps, "loss is not finite");
      double terminal = 0.0;
      for (double g : batch.targets) terminal += g;
      m.mean_terminal_cost = terminal / static_cast<double>(batch.batch);
      grads = tape.gradients(l, result.params.items.size());
    } catch (const RolloutError& e) {
      result.diverged = true;
      result.diagnostic = "iteration " + std::to_string(k) + ": " + e.what();
      return result;
    }
    double sq = 0.0;
    for (const auto& g : grads) {
      for (double x : g.values) sq += x * x;
    }
    m.grad_norm = std::sqrt(sq);
    if (!std::isfinite(m.grad_norm)) {
      result.diverged = true;
      result.diagnostic = "iteration " + std::to_string(k) + ": gradient is not finite";
      return result;
    }
    if (config.grad_clip > 0.0 && m.grad_norm > config.grad_clip) {
      const double s = config.grad_clip / m.grad_norm;
      for (auto& g : grads) {
        for (double& x : g.values) x *= s;
      }
    }
    m.lr = config.schedule.rate_at(k);
    adam_step(result.params, grads, adam, m.lr);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
    result.history.push_back(m);
    if (hooks.on_iteration) hooks.on_iteration(m);
    if (hooks.on_checkpoint && config.checkpoint_interval > 0 &&
        k % config.checkpoint_interval == 0) {
      hooks.on_checkpoint(result.params, k);
    }
  }
  return result;
}

}  // namespace fbsde
