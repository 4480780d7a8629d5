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

#ifndef FBSDE_TOOLS_COMMANDS_HPP_
#define FBSDE_TOOLS_COMMANDS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace fbsde::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kDivergence = 3,
  kIo = 4,
};

// Artifacts in the output directory: config.resolved.ini, metrics.jsonl,
// checkpoint.json and checkpoints/iter_<k>.json when periodic saving is on.
int cmd_train(const std::filesystem::path& config, const std::optional<std::filesystem::path>& out,
              std::ostream& log);

// Writes config.resolved.ini, eval_stats.csv, trajectories.csv and
// report.json. `config` overrides the configuration stored in the checkpoint.
int cmd_eval(const std::filesystem::path& checkpoint, std::optional<std::size_t> trials,
             std::optional<std::uint64_t> seed, const std::optional<std::filesystem::path>& out,
             const std::optional<std::filesystem::path>& config, std::ostream& log);

int cmd_export_plots(const std::filesystem::path& report,
                     const std::optional<std::filesystem::path>& out, std::ostream& log);

int cmd_param_count(const std::filesystem::path& config, std::ostream& log);

// Full command line; maps exceptions to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fbsde::cli

#endif  // FBSDE_TOOLS_COMMANDS_HPP_
