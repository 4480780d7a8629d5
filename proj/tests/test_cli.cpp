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


#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "fbsde/checkpoint.hpp"
#include "fbsde/config.hpp"
#include "fbsde/eval.hpp"
#include "fbsde/trainer.hpp"

using namespace fbsde;
namespace fs = std::filesystem;

namespace {

const char* kSmoke = R"([system]
name = pendulum
[cost]
q = 1, 0.1
q_terminal = 100, 10
r = 0.1
constrained = true
u_max = 10
[policy]
kind = fc-stack
hidden = 4
[horizon]
T = 1.5
dt = 0.02
[train]
iterations = 5
batch = 8
checkpoint_interval = 2
[eval]
trials = 8
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fbsde_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "fbsde");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::vector<std::string> metrics_without_wall(const fs::path& p) {
  std::vector<std::string> lines;
  std::ifstream is(p);
  std::string line;
  while (std::getline(is, line)) {
    auto m = metrics_from_json_line(line);
    m.wall_ms = 0.0;
    lines.push_back(to_json_line(m));
  }
  return lines;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("smoke train, eval and export") {
  const fs::path dir = scratch("smoke");
  write(dir / "smoke.ini", kSmoke);
  REQUIRE(run_cli({"train", (dir / "smoke.ini").string(), "--out", (dir / "a").string()}) == 0);
  REQUIRE(run_cli({"train", (dir / "smoke.ini").string(), "--out", (dir / "b").string()}) == 0);
  for (const char* f : {"config.resolved.ini", "metrics.jsonl", "checkpoint.json", "checkpoints/iter_000002.json",
                        "checkpoints/iter_000004.json"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  const auto ma = metrics_without_wall(dir / "a" / "metrics.jsonl");
  CHECK(ma.size() == 5);
  CHECK(ma == metrics_without_wall(dir / "b" / "metrics.jsonl"));
  {
    const auto ca = load_checkpoint(dir / "a" / "checkpoint.json");
    const auto cb = load_checkpoint(dir / "b" / "checkpoint.json");
    for (std::size_t i = 0; i < ca.params.items.size(); ++i) {
      CHECK(ca.params.items[i].value.values == cb.params.items[i].value.values);
    }
  }
  // The resolved config reproduces the run.
  CHECK(parse_config(dir / "a" / "config.resolved.ini").to_text() == slurp(dir / "a" / "config.resolved.ini"));

  std::string log;
  REQUIRE(run_cli({"eval", (dir / "a" / "checkpoint.json").string()}, &log) == 0);
  for (const char* f : {"config.resolved.ini", "eval_stats.csv", "trajectories.csv", "report.json"}) {
    CHECK(fs::exists(dir / "a" / "eval" / f));
  }
  const auto report = report_from_json(slurp(dir / "a" / "eval" / "report.json"));
  CHECK(report.trials == 8);
  CHECK(report.violations == 0);
  REQUIRE(run_cli({"eval", (dir / "b" / "checkpoint.json").string()}) == 0);
  CHECK(slurp(dir / "a" / "eval" / "report.json") == slurp(dir / "b" / "eval" / "report.json"));
  CHECK(slurp(dir / "a" / "eval" / "trajectories.csv") == slurp(dir / "b" / "eval" / "trajectories.csv"));

  REQUIRE(run_cli({"eval", (dir / "a" / "checkpoint.json").string(), "--trials", "16", "--seed", "3", "--out",
                   (dir / "e16").string()}) == 0);
  CHECK(report_from_json(slurp(dir / "e16" / "report.json")).trials == 16);

  REQUIRE(run_cli({"export-plots", (dir / "a" / "eval" / "report.json").string()}) == 0);
  CHECK(fs::exists(dir / "a" / "eval" / "plots" / "angle.csv"));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "a" / "eval" / "plots")) ++files;
  CHECK(files == 3);
}

TEST_CASE("param-count") {
  std::string text;
  CHECK(run_cli({"param-count", (fs::path(FBSDE_SOURCE_DIR) / "configs" / "pendulum_unconstrained.ini").string()},
                &text) == 0);
  CHECK(text.find("24940") != std::string::npos);
  CHECK(text.find("3411") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  std::string bad = kSmoke;
  bad += "bogus_key = 1\n";
  write(dir / "bad.ini", bad);
  CHECK(run_cli({"train", (dir / "bad.ini").string()}) == cli::kValidation);
  CHECK(run_cli({"train", (dir / "missing.ini").string()}) == cli::kIo);
  CHECK(run_cli({"eval", (dir / "missing.json").string()}) == cli::kIo);
  CHECK(run_cli({"frobnicate"}) != 0);

  write(dir / "diverge.ini", "[system]\nname = scalar_linear\na = 400\n[cost]\nq = 1\nq_terminal = 1\nr = 1\n"
                             "[horizon]\nT = 5\ndt = 0.1\n[train]\niterations = 3\nbatch = 2\n");
  CHECK(run_cli({"train", (dir / "diverge.ini").string(), "--out", (dir / "div").string()}) == cli::kDivergence);
  CHECK(fs::exists(dir / "div" / "checkpoint.json"));

  // A checkpoint evaluated under a config of a different shape is a load error.
  write(dir / "smoke.ini", kSmoke);
  REQUIRE(run_cli({"train", (dir / "smoke.ini").string(), "--out", (dir / "ok").string()}) == 0);
  std::string other = kSmoke;
  other.replace(other.find("hidden = 4"), 10, "hidden = 5");
  write(dir / "other.ini", other);
  CHECK(run_cli({"eval", (dir / "ok" / "checkpoint.json").string(), "--config", (dir / "other.ini").string()}) ==
        cli::kIo);
  CHECK(run_cli({"eval", (dir / "ok" / "checkpoint.json").string(), "--trials", "1"}) == cli::kValidation);

  write(dir / "empty.json", report_to_json(EvalReport{}));
  std::string log;
  CHECK(run_cli({"export-plots", (dir / "empty.json").string(), "--out", (dir / "none").string()}, &log) == 0);
  CHECK_FALSE(fs::exists(dir / "none"));
  CHECK(log.find("empty") != std::string::npos);
}

}  // TEST_SUITE
