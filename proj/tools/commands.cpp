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

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbsde/checkpoint.hpp"
#include "fbsde/config.hpp"
#include "fbsde/eval.hpp"
#include "fbsde/trainer.hpp"

namespace fbsde::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResolvedConfig = "config.resolved.ini";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::ios_base::failure("cannot write " + path.string());
  os << text;
  if (!os) throw std::ios_base::failure("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::ios_base::failure("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string iter_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%06zu.json", k);
  return buf;
}

}  // namespace

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& out,
              std::ostream& log) {
  RunConfig config = parse_config(config_path);
  if (out) config.output_dir = out->string();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  const std::string resolved = config.to_text();
  write_text(dir / kResolvedConfig, resolved);

  const ControlAffineSystem system = config.make_system();
  const CostSpec cost = config.make_cost();
  PolicyParams init = init_params(config.shape(), config.init, config.init_seed);

  std::ofstream metrics(dir / "metrics.jsonl");
  if (!metrics) throw std::ios_base::failure("cannot write " + (dir / "metrics.jsonl").string());
  const std::size_t report_every = std::max<std::size_t>(1, config.train.iterations / 20);
  TrainHooks hooks;
  hooks.on_iteration = [&](const IterationMetrics& m) {
    metrics << to_json_line(m) << '\n';
    metrics.flush();
    if (!metrics) throw std::ios_base::failure("write failed for metrics.jsonl");
    if (m.iter % report_every == 0 || m.iter == 1) {
      log << "iter " << m.iter << "  loss " << m.loss << "  y0 " << m.y0 << "  terminal "
          << m.mean_terminal_cost << "  lr " << m.lr << '\n';
    }
  };
  if (config.train.checkpoint_interval > 0) {
    fs::create_directories(dir / "checkpoints");
    hooks.on_checkpoint = [&](const PolicyParams& p, std::size_t k) {
      save_checkpoint(dir / "checkpoints" / iter_name(k), {p, k, resolved});
    };
  }

  log << "training " << config.system << " (" << to_string(config.policy)
      << (cost.constrained ? ", constrained" : "") << "), " << param_count(config.shape())
      << " parameters, N=" << config.steps << ", K=" << config.train.iterations << '\n';
  TrainResult result =
      train(system, cost, std::move(init), config.steps, config.dt, config.train, hooks);
  const std::size_t done = result.history.empty() ? 0 : result.history.back().iter;
  save_checkpoint(dir / "checkpoint.json", {result.params, done, resolved});
  if (result.diverged) {
    log << "training diverged: " << result.diagnostic << "\nlast good parameters saved to "
        << (dir / "checkpoint.json").string() << '\n';
    return kDivergence;
  }
  log << "wrote " << (dir / "checkpoint.json").string() << '\n';
  return kOk;
}

int cmd_eval(const fs::path& checkpoint, std::optional<std::size_t> trials,
             std::optional<std::uint64_t> seed, const std::optional<fs::path>& out,
             const std::optional<fs::path>& config_path, std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  RunConfig config = config_path ? parse_config(*config_path)
                                 : parse_config_text(ckpt.config_text, checkpoint.string());
  require_shape(ckpt.params, config.shape());
  if (trials) config.eval_trials = *trials;
  if (seed) config.eval_seed = *seed;
  if (config.eval_trials < 2) throw ParameterError("--trials must be >= 2");
  const fs::path dir = out ? *out : checkpoint.parent_path() / "eval";
  fs::create_directories(dir);
  write_text(dir / kResolvedConfig, config.to_text());

  const ControlAffineSystem system = config.make_system();
  const CostSpec cost = config.make_cost();
  RolloutBatch batch;
  EvalReport report;
  try {
    report = evaluate(system, cost, ckpt.params, config.dt, config.eval_trials, config.eval_seed,
                      &batch);
  } catch (const RolloutError& e) {
    log << "evaluation diverged: " << e.what() << '\n';
    return kDivergence;
  }
  {
    std::ofstream os(dir / "eval_stats.csv");
    if (!os) throw std::ios_base::failure("cannot write eval_stats.csv");
    write_stats_csv(os, report);
  }
  {
    std::ofstream os(dir / "trajectories.csv");
    if (!os) throw std::ios_base::failure("cannot write trajectories.csv");
    write_trajectories_csv(os, batch, config.dt);
  }
  write_text(dir / "report.json", report_to_json(report) + "\n");

  log << std::setprecision(6) << "evaluated " << report.trials << " trials of " << report.system
      << " (seed " << config.eval_seed << ")\n";
  const auto& names = system.state_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    log << "  final " << names[k] << ": " << report.terminal_mean[k] << " +- "
        << report.terminal_std[k] << '\n';
  }
  log << "  mean terminal cost " << report.mean_terminal_cost << '\n';
  if (report.constrained) log << "  bound violations " << report.violations << '\n';
  log << "wrote " << (dir / "report.json").string() << '\n';
  return kOk;
}

int cmd_export_plots(const fs::path& report_path, const std::optional<fs::path>& out,
                     std::ostream& log) {
  const EvalReport report = report_from_json(read_text(report_path));
  if (report.empty()) {
    log << "report " << report_path.string() << " holds no trials; nothing exported\n";
    return kOk;
  }
  const fs::path dir = out ? *out : report_path.parent_path() / "plots";
  const auto files = export_plots(report, dir);
  log << "wrote " << files.size() << " channel files to " << dir.string() << '\n';
  for (const auto& f : files) log << "  " << f.filename().string() << '\n';
  return kOk;
}

int cmd_param_count(const fs::path& config_path, std::ostream& log) {
  const RunConfig config = parse_config(config_path);
  PolicyShape shape = config.shape();
  PolicyShape fc = shape, rec = shape;
  fc.kind = PolicyKind::kFcStack;
  rec.kind = PolicyKind::kRecurrent;
  const std::size_t counted = zero_params(shape).scalar_count();
  log << "system " << config.system << ", n=" << shape.state_dim << ", v=" << shape.noise_dim
      << ", H=" << shape.hidden << ", N=" << shape.steps << '\n';
  log << "fc-stack   " << param_count(fc) << '\n';
  log << "recurrent  " << param_count(rec) << '\n';
  log << "configured " << to_string(shape.kind) << ": " << param_count(shape) << " (counted "
      << counted << ")\n";
  return param_count(shape) == counted ? kOk : kValidation;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"FBSDE stochastic optimal control: train, evaluate and export."};
  app.require_subcommand(1);

  fs::path train_config;
  std::optional<fs::path> train_out;
  auto* train_cmd = app.add_subcommand("train", "Train a policy from a run configuration");
  train_cmd->add_option("config", train_config, "Configuration file")->required();
  train_cmd->add_option("--out", train_out, "Output directory (overrides [output] dir)");

  fs::path eval_ckpt;
  std::optional<std::size_t> eval_trials;
  std::optional<std::uint64_t> eval_seed;
  std::optional<fs::path> eval_out, eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on fresh noise");
  eval_cmd->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--trials", eval_trials, "Number of trials (default from config, 128)");
  eval_cmd->add_option("--seed", eval_seed, "Evaluation noise seed");
  eval_cmd->add_option("--out", eval_out, "Output directory (default <checkpoint dir>/eval)");
  eval_cmd->add_option("--config", eval_config, "Use this configuration instead of the stored one");

  fs::path report_path;
  std::optional<fs::path> plots_out;
  auto* plots_cmd = app.add_subcommand("export-plots", "Write per-channel plot data");
  plots_cmd->add_option("report", report_path, "report.json from eval")->required();
  plots_cmd->add_option("--out", plots_out, "Output directory (default <report dir>/plots)");

  fs::path count_config;
  auto* count_cmd = app.add_subcommand("param-count", "Print policy parameter counts");
  count_cmd->add_option("config", count_config, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train_cmd) return cmd_train(train_config, train_out, out);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_trials, eval_seed, eval_out, eval_config, out);
    if (*plots_cmd) return cmd_export_plots(report_path, plots_out, out);
    if (*count_cmd) return cmd_param_count(count_config, out);
  } catch (const LoadError& e) {
    err << "load error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const RolloutError& e) {
    err << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const nlohmann::json::exception& e) {
    err << "i/o error: malformed file: " << e.what() << '\n';
    return kIo;
  }
  return kValidation;
}

}  // namespace fbsde::cli
