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

#include "fbsde/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

namespace fbsde {

ChannelStats channel_stats(std::string name, const std::vector<double>& samples,
                           std::size_t trials, std::size_t points) {
  if (trials < 2) throw ContractError("channel_stats needs at least two trials");
  if (samples.size() != trials * points) throw DimensionError("channel_stats: sample count");
  ChannelStats c{std::move(name), std::vector<double>(points), std::vector<double>(points)};
  const double count = static_cast<double>(trials);
  for (std::size_t t = 0; t < points; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < trials; ++i) sum += samples[i * points + t];
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      const double d = samples[i * points + t] - mean;
      ss += d * d;
    }
    c.mean[t] = mean;
    c.half_width[t] = 1.96 * std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return c;
}

EvalReport summarize(const RolloutBatch& b, const ControlAffineSystem& system,
                     const CostSpec& cost, double dt) {
  EvalReport r;
  r.system = system.name();
  r.trials = b.batch;
  r.steps = b.steps;
  r.dt = dt;
  r.constrained = cost.constrained;
  std::vector<double> buf(b.batch * (b.steps + 1));
  for (std::size_t k = 0; k < b.n; ++k) {
    for (std::size_t i = 0; i < b.batch; ++i) {
      for (std::size_t t = 0; t <= b.steps; ++t) buf[i * (b.steps + 1) + t] = b.state(i, t, k);
    }
    r.states.push_back(channel_stats(system.state_names()[k], buf, b.batch, b.steps + 1));
  }
  buf.assign(b.batch * b.steps, 0.0);
  for (std::size_t j = 0; j < b.m; ++j) {
    for (std::size_t i = 0; i < b.batch; ++i) {
      for (std::size_t t = 0; t < b.steps; ++t) {
        const double u = b.control(i, t, j);
        buf[i * b.steps + t] = u;
        if (cost.constrained && std::abs(u) >= cost.u_max[j]) ++r.violations;
      }
    }
    r.controls.push_back(channel_stats(system.control_names()[j], buf, b.batch, b.steps));
  }

  const auto& angles = system.angle_indices();
  const double count = static_cast<double>(b.batch);
  for (std::size_t k = 0; k < b.n; ++k) {
    const bool angle = std::find(angles.begin(), angles.end(), k) != angles.end();
    if (angle) {
      double s = 0.0, c = 0.0;
      for (std::size_t i = 0; i < b.batch; ++i) {
        s += std::sin(b.state(i, b.steps, k));
        c += std::cos(b.state(i, b.steps, k));
      }
      const double resultant = std::min(1.0, std::hypot(s, c) / count);
      r.terminal_mean.push_back(std::atan2(s, c));
      r.terminal_std.push_back(std::sqrt(-2.0 * std::log(std::max(resultant, 1e-300))));
    } else {
      double sum = 0.0;
      for (std::size_t i = 0; i < b.batch; ++i) sum += b.state(i, b.steps, k);
      const double mean = sum / count;
      double ss = 0.0;
      for (std::size_t i = 0; i < b.batch; ++i) {
        const double d = b.state(i, b.steps, k) - mean;
        ss += d * d;
      }
      r.terminal_mean.push_back(mean);
      r.terminal_std.push_back(std::sqrt(ss / std::max(1.0, count - 1.0)));
    }
  }
  double g = 0.0;
  for (double x : b.targets) g += x;
  r.mean_terminal_cost = g / count;
  r.mean_y0 = b.value(0, 0);
  return r;
}

EvalReport evaluate(const ControlAffineSystem& system, const CostSpec& cost,
                    const PolicyParams& params, double dt, std::size_t trials,
                    std::uint64_t seed, RolloutBatch* batch_out) {
  if (trials < 2) throw ParameterError("evaluation needs at least two trials");
  Tape tape;
  BoundPolicy policy(params, tape);
  RolloutBatch batch = rollout(policy, system, cost, {params.shape.steps, dt, trials, seed});
  EvalReport r = summarize(batch, system, cost, dt);
  if (batch_out != nullptr) {
    batch.y_terminal = Var();
    batch.target = Var();
    *batch_out = std::move(batch);
  }
  return r;
}

void write_stats_csv(std::ostream& os, const EvalReport& r) {
  os << "channel,step,time,mean,half_width\n" << std::setprecision(17);
  auto emit = [&](const std::vector<ChannelStats>& channels) {
    for (const auto& c : channels) {
      for (std::size_t t = 0; t < c.mean.size(); ++t) {
        os << c.name << ',' << t << ',' << static_cast<double>(t) * r.dt << ',' << c.mean[t] << ','
           << c.half_width[t] << '\n';
      }
    }
  };
  emit(r.states);
  emit(r.controls);
}

namespace {

nlohmann::ordered_json channels_json(const std::vector<ChannelStats>& channels) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : channels) {
    arr.push_back({{"name", c.name}, {"mean", c.mean}, {"half_width", c.half_width}});
  }
  return arr;
}

std::vector<ChannelStats> channels_from(const nlohmann::json& arr) {
  std::vector<ChannelStats> out;
  for (const auto& c : arr) {
    out.push_back({c.at("name").get<std::string>(), c.at("mean").get<std::vector<double>>(),
                   c.at("half_width").get<std::vector<double>>()});
  }
  return out;
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["system"] = r.system;
  j["trials"] = r.trials;
  j["steps"] = r.steps;
  j["dt"] = r.dt;
  j["constrained"] = r.constrained;
  j["violations"] = r.violations;
  j["mean_terminal_cost"] = r.mean_terminal_cost;
  j["mean_y0"] = r.mean_y0;
  j["terminal_mean"] = r.terminal_mean;
  j["terminal_std"] = r.terminal_std;
  j["states"] = channels_json(r.states);
  j["controls"] = channels_json(r.controls);
  return j.dump(1);
}

EvalReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport r;
  r.system = j.value("system", "");
  r.trials = j.value("trials", std::size_t{0});
  r.steps = j.value("steps", std::size_t{0});
  r.dt = j.value("dt", 0.0);
  r.constrained = j.value("constrained", false);
  r.violations = j.value("violations", std::size_t{0});
  r.mean_terminal_cost = j.value("mean_terminal_cost", 0.0);
  r.mean_y0 = j.value("mean_y0", 0.0);
  r.terminal_mean = j.value("terminal_mean", std::vector<double>{});
  r.terminal_std = j.value("terminal_std", std::vector<double>{});
  if (j.contains("states")) r.states = channels_from(j.at("states"));
  if (j.contains("controls")) r.controls = channels_from(j.at("controls"));
  return r;
}

std::vector<std::filesystem::path> export_plots(const EvalReport& r,
                                                const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  if (r.empty()) return written;
  std::filesystem::create_directories(dir);
  auto emit = [&](const std::vector<ChannelStats>& channels) {
    for (const auto& c : channels) {
      const auto path = dir / (c.name + ".csv");
      std::ofstream os(path);
      if (!os) throw std::ios_base::failure("cannot write " + path.string());
      os << "time,mean,lower,upper\n" << std::setprecision(17);
      for (std::size_t t = 0; t < c.mean.size(); ++t) {
        os << static_cast<double>(t) * r.dt << ',' << c.mean[t] << ','
           << c.mean[t] - c.half_width[t] << ',' << c.mean[t] + c.half_width[t] << '\n';
      }
      written.push_back(path);
    }
  };
  emit(r.states);
  emit(r.controls);
  return written;
}

}  // namespace fbsde
