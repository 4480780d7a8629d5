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

// Monte-Carlo evaluation of a trained policy and plot-data export.

#ifndef FBSDE_EVAL_HPP_
#define FBSDE_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbsde/cost.hpp"
#include "fbsde/dynamics.hpp"
#include "fbsde/policy.hpp"
#include "fbsde/propagator.hpp"

namespace fbsde {

struct ChannelStats {
  std::string name;
  std::vector<double> mean;        // per step
  std::vector<double> half_width;  // 1.96 * sample std / sqrt(trials)
};

struct EvalReport {
  std::string system;
  std::size_t trials = 0;
  std::size_t steps = 0;
  double dt = 0.0;
  bool constrained = false;
  std::vector<ChannelStats> states;    // steps + 1 points each
  std::vector<ChannelStats> controls;  // steps points each
  // Final-state statistics; angle coordinates use the circular mean, wrapped
  // to (-pi, pi], and circular standard deviation.
  std::vector<double> terminal_mean;
  std::vector<double> terminal_std;
  double mean_terminal_cost = 0.0;
  double mean_y0 = 0.0;
  std::size_t violations = 0;  // control samples with |u_j| >= u_max_j

  bool empty() const { return trials == 0 || (states.empty() && controls.empty()); }
};

// Per-step mean and 95% half-width of `samples` (trials x points, row-major).
ChannelStats channel_stats(std::string name, const std::vector<double>& samples,
                           std::size_t trials, std::size_t points);

EvalReport summarize(const RolloutBatch& batch, const ControlAffineSystem& system,
                     const CostSpec& cost, double dt);

// Fresh-noise rollouts without training. `batch_out`, when given, receives
// the raw trajectories. Requires trials >= 2.
EvalReport evaluate(const ControlAffineSystem& system, const CostSpec& cost,
                    const PolicyParams& params, double dt, std::size_t trials,
                    std::uint64_t seed, RolloutBatch* batch_out = nullptr);

// Columns: channel,step,time,mean,half_width.
void write_stats_csv(std::ostream& os, const EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// One CSV per channel (time,mean,lower,upper), named <channel>.csv. Returns
// the files written; an empty report writes nothing.
std::vector<std::filesystem::path> export_plots(const EvalReport& report,
                                                const std::filesystem::path& dir);

}  // namespace fbsde

#endif  // FBSDE_EVAL_HPP_
