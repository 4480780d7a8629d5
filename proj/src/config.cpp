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

#include "fbsde/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fbsde {

ConfigError::ConfigError(const std::string& origin, std::size_t line, const std::string& what)
    : std::invalid_argument(origin + (line > 0 ? ":" + std::to_string(line) : "") + ": " + what),
      line_(line) {}

namespace {

struct Entry {
  std::string value;
  std::size_t line;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, Section> sections)
      : origin_(std::move(origin)), sections_(std::move(sections)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw ConfigError(origin_, line, what);
  }

  const Entry* find(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  double number(const Entry& e, const std::string& key) const {
    const std::string v = trim(e.value);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
    }
    return out;
  }

  void get(const std::string& section, const std::string& key, double& out) {
    if (const Entry* e = find(section, key)) out = number(*e, key);
  }

  void get(const std::string& section, const std::string& key, std::size_t& out) {
    if (const Entry* e = find(section, key)) {
      const std::string v = trim(e->value);
      unsigned long long x = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
      if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        fail(e->line, "'" + key + "' expects a non-negative integer, got '" + e->value + "'");
      }
      out = static_cast<std::size_t>(x);
    }
  }

  void get(const std::string& section, const std::string& key, bool& out) {
    if (const Entry* e = find(section, key)) {
      std::string v = trim(e->value);
      std::transform(v.begin(), v.end(), v.begin(), ::tolower);
      if (v == "true" || v == "yes" || v == "1") {
        out = true;
      } else if (v == "false" || v == "no" || v == "0") {
        out = false;
      } else {
        fail(e->line, "'" + key + "' expects true or false, got '" + e->value + "'");
      }
    }
  }

  void get(const std::string& section, const std::string& key, std::string& out) {
    if (const Entry* e = find(section, key)) out = trim(e->value);
  }

  // Comma list; a single value broadcasts to `width` entries.
  void get_list(const std::string& section, const std::string& key, std::size_t width,
                std::vector<double>& out) {
    const Entry* e = find(section, key);
    if (e == nullptr) return;
    std::vector<double> vals;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(number({item, e->line}, key));
    if (vals.size() == 1) vals.assign(width, vals[0]);
    if (vals.size() != width) {
      fail(e->line, "'" + key + "' needs " + std::to_string(width) + " values, got " +
                        std::to_string(vals.size()));
    }
    out = std::move(vals);
  }

  std::size_t line_of(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    return e ? e->line : 0;
  }

  void reject_unknown() const {
    for (const auto& [name, section] : sections_) {
      for (const auto& [key, entry] : section) {
        if (!used_.count(name + "." + key)) {
          fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
        }
      }
    }
  }

 private:
  std::string origin_;
  std::map<std::string, Section> sections_;
  std::set<std::string> used_;
};

const std::set<std::string> kSections{"system", "cost", "policy", "horizon", "train", "eval", "output"};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::string current;
  std::size_t lineno = 0;
  std::stringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin, lineno, "malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(current)) {
        throw ConfigError(origin, lineno, "unknown section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, lineno, "expected key = value");
    if (current.empty()) throw ConfigError(origin, lineno, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin, lineno, "empty key");
    auto& sec = sections[current];
    if (sec.count(key)) {
      throw ConfigError(origin, lineno, "duplicate key '" + key + "' (first on line " +
                                            std::to_string(sec[key].line) + ")");
    }
    sec[key] = {trim(line.substr(eq + 1)), lineno};
  }

  Reader rd(origin, std::move(sections));
  RunConfig c;
  rd.get("system", "name", c.system);
  const std::size_t system_line = rd.line_of("system", "name");
  if (c.system.empty()) throw ConfigError(origin, 0, "missing system: set name in [system]");
  std::size_t n = 0, m = 0;
  if (c.system == "pendulum") {
    auto& p = c.pendulum;
    rd.get("system", "mass", p.mass);
    rd.get("system", "length", p.length);
    rd.get("system", "damping", p.damping);
    rd.get("system", "gravity", p.gravity);
    rd.get("system", "sigma", p.sigma);
    n = 2;
    m = 1;
  } else if (c.system == "cartpole") {
    rd.get("system", "sigma", c.cartpole.sigma);
    n = 4;
    m = 1;
  } else if (c.system == "quadcopter") {
    auto& p = c.quadcopter;
    rd.get("system", "mass", p.mass);
    rd.get("system", "arm", p.arm);
    std::vector<double> inertia(p.inertia.begin(), p.inertia.end());
    rd.get_list("system", "inertia", 3, inertia);
    std::copy(inertia.begin(), inertia.end(), p.inertia.begin());
    rd.get("system", "yaw_coefficient", p.yaw_coefficient);
    rd.get("system", "gravity", p.gravity);
    rd.get("system", "sigma", p.sigma);
    n = 12;
    m = 4;
  } else if (c.system == "scalar_linear") {
    auto& p = c.scalar;
    rd.get("system", "a", p.a);
    rd.get("system", "b", p.b);
    rd.get("system", "sigma", p.sigma);
    rd.get("system", "x0", p.x0);
    n = 1;
    m = 1;
  } else {
    throw ConfigError(origin, system_line,
                      "unknown system '" + c.system +
                          "' (expected pendulum, cartpole, quadcopter or scalar_linear)");
  }

  c.q.assign(n, 1.0);
  c.q_terminal.assign(n, 1.0);
  c.r.assign(m, 1.0);
  rd.get_list("cost", "q", n, c.q);
  rd.get_list("cost", "q_terminal", n, c.q_terminal);
  rd.get_list("cost", "r", m, c.r);
  rd.get("cost", "constrained", c.constrained);
  rd.get_list("cost", "u_max", m, c.u_max);
  if (c.constrained && c.u_max.empty()) {
    throw ConfigError(origin, rd.line_of("cost", "constrained"), "constrained cost needs u_max");
  }

  std::string kind = to_string(c.policy);
  rd.get("policy", "kind", kind);
  try {
    c.policy = parse_policy_kind(kind);
  } catch (const ParameterError& e) {
    throw ConfigError(origin, rd.line_of("policy", "kind"), e.what());
  }
  rd.get("policy", "hidden", c.hidden);
  rd.get("policy", "seed", c.init_seed);
  rd.get("policy", "y0_low", c.init.y0_low);
  rd.get("policy", "y0_high", c.init.y0_high);
  rd.get("policy", "z0_low", c.init.z0_low);
  rd.get("policy", "z0_high", c.init.z0_high);
  rd.get("policy", "forget_bias", c.init.forget_bias);
  if (c.hidden < 1) throw ConfigError(origin, rd.line_of("policy", "hidden"), "hidden must be >= 1");
  if (c.init.y0_low > c.init.y0_high || c.init.z0_low > c.init.z0_high) {
    throw ConfigError(origin, rd.line_of("policy", "y0_low"), "initialization ranges are inverted");
  }

  rd.get("horizon", "T", c.horizon);
  rd.get("horizon", "dt", c.dt);
  if (!(c.horizon > 0.0)) throw ConfigError(origin, rd.line_of("horizon", "T"), "T must be > 0");
  if (!(c.dt > 0.0)) throw ConfigError(origin, rd.line_of("horizon", "dt"), "dt must be > 0");
  const auto implied = static_cast<std::size_t>(std::llround(c.horizon / c.dt));
  c.steps = implied;
  rd.get("horizon", "N", c.steps);
  if (c.steps != implied) {
    throw ConfigError(origin, rd.line_of("horizon", "N"),
                      "N = " + std::to_string(c.steps) + " disagrees with T/dt = " +
                          std::to_string(implied));
  }
  if (c.steps < 1 || std::abs(c.horizon - static_cast<double>(c.steps) * c.dt) > 1e-9) {
    throw ConfigError(origin, rd.line_of("horizon", "dt"),
                      "T = " + fmt(c.horizon) + " is not a whole number of dt = " + fmt(c.dt) +
                          " steps");
  }

  rd.get("train", "iterations", c.train.iterations);
  rd.get("train", "batch", c.train.batch);
  rd.get("train", "weight_decay", c.train.weight_decay);
  rd.get("train", "seed", c.train.seed);
  rd.get("train", "checkpoint_interval", c.train.checkpoint_interval);
  rd.get("train", "grad_clip", c.train.grad_clip);
  c.train.schedule = LrSchedule::standard(c.train.iterations);
  std::string schedule;
  rd.get("train", "lr_schedule", schedule);
  try {
    if (!schedule.empty()) c.train.schedule = LrSchedule::parse(schedule);
    c.train.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(origin, rd.line_of("train", schedule.empty() ? "iterations" : "lr_schedule"),
                      e.what());
  }

  rd.get("eval", "trials", c.eval_trials);
  rd.get("eval", "seed", c.eval_seed);
  if (c.eval_trials < 2) throw ConfigError(origin, rd.line_of("eval", "trials"), "trials must be >= 2");

  rd.get("output", "dir", c.output_dir);
  if (c.output_dir.empty()) throw ConfigError(origin, rd.line_of("output", "dir"), "empty output dir");

  rd.reject_unknown();

  try {
    (void)c.make_cost();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin, system_line, e.what());
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::ios_base::failure("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

ControlAffineSystem RunConfig::make_system() const {
  if (system == "pendulum") return fbsde::pendulum(pendulum);
  if (system == "cartpole") return fbsde::cartpole(cartpole);
  if (system == "quadcopter") return fbsde::quadcopter(quadcopter);
  if (system == "scalar_linear") return fbsde::scalar_linear(scalar);
  throw ParameterError("unknown system '" + system + "'");
}

CostSpec RunConfig::make_cost() const {
  const ControlAffineSystem sys = make_system();
  if (system == "scalar_linear") {
    CostSpec c = scalar_linear_cost(sys, q.at(0), r.at(0), q_terminal.at(0));
    if (constrained) {
      c.constrained = true;
      c.u_max = u_max;
      c.validate();
    }
    return c;
  }
  return fbsde::make_cost(sys, q, q_terminal, r, u_max, constrained);
}

PolicyShape RunConfig::shape() const {
  const ControlAffineSystem sys = make_system();
  return {policy, sys.state_dim(), sys.noise_dim(), hidden, steps};
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "[system]\nname = " << system << '\n';
  if (system == "pendulum") {
    os << "mass = " << fmt(pendulum.mass) << "\nlength = " << fmt(pendulum.length)
       << "\ndamping = " << fmt(pendulum.damping) << "\ngravity = " << fmt(pendulum.gravity)
       << "\nsigma = " << fmt(pendulum.sigma) << '\n';
  } else if (system == "cartpole") {
    os << "sigma = " << fmt(cartpole.sigma) << '\n';
  } else if (system == "quadcopter") {
    os << "mass = " << fmt(quadcopter.mass) << "\narm = " << fmt(quadcopter.arm)
       << "\ninertia = "
       << fmt_list({quadcopter.inertia.begin(), quadcopter.inertia.end()})
       << "\nyaw_coefficient = " << fmt(quadcopter.yaw_coefficient)
       << "\ngravity = " << fmt(quadcopter.gravity) << "\nsigma = " << fmt(quadcopter.sigma)
       << '\n';
  } else if (system == "scalar_linear") {
    os << "a = " << fmt(scalar.a) << "\nb = " << fmt(scalar.b) << "\nsigma = " << fmt(scalar.sigma)
       << "\nx0 = " << fmt(scalar.x0) << '\n';
  }
  os << "\n[cost]\nq = " << fmt_list(q) << "\nq_terminal = " << fmt_list(q_terminal)
     << "\nr = " << fmt_list(r) << "\nconstrained = " << (constrained ? "true" : "false") << '\n';
  if (!u_max.empty()) os << "u_max = " << fmt_list(u_max) << '\n';
  os << "\n[policy]\nkind = " << to_string(policy) << "\nhidden = " << hidden
     << "\nseed = " << init_seed << "\ny0_low = " << fmt(init.y0_low)
     << "\ny0_high = " << fmt(init.y0_high) << "\nz0_low = " << fmt(init.z0_low)
     << "\nz0_high = " << fmt(init.z0_high) << "\nforget_bias = " << fmt(init.forget_bias) << '\n';
  os << "\n[horizon]\nT = " << fmt(horizon) << "\ndt = " << fmt(dt) << "\nN = " << steps << '\n';
  os << "\n[train]\niterations = " << train.iterations << "\nbatch = " << train.batch
     << "\nweight_decay = " << fmt(train.weight_decay)
     << "\nlr_schedule = " << train.schedule.to_string() << "\nseed = " << train.seed
     << "\ncheckpoint_interval = " << train.checkpoint_interval
     << "\ngrad_clip = " << fmt(train.grad_clip) << '\n';
  os << "\n[eval]\ntrials = " << eval_trials << "\nseed = " << eval_seed << '\n';
  os << "\n[output]\ndir = " << output_dir << '\n';
  return os.str();
}

}  // namespace fbsde
