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

#include "fbsde/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fbsde {

namespace {
constexpr const char* kFormat = "fbsde-checkpoint";
}

void require_shape(const PolicyParams& params, const PolicyShape& shape) {
  const PolicyParams expected = zero_params(shape);
  if (expected.items.size() != params.items.size()) {
    throw LoadError("checkpoint holds " + std::to_string(params.items.size()) +
                    " parameter tensors, configuration implies " +
                    std::to_string(expected.items.size()));
  }
  for (std::size_t i = 0; i < expected.items.size(); ++i) {
    const auto& e = expected.items[i];
    const auto& p = params.items[i];
    if (e.name != p.name || !e.value.same_shape(p.value)) {
      throw LoadError("parameter " + std::to_string(i) + " is " + p.name + " " +
                      p.value.shape_str() + ", configuration expects " + e.name + " " +
                      e.value.shape_str());
    }
  }
}

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  const PolicyShape& s = ckpt.params.shape;
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["iteration"] = ckpt.iteration;
  j["policy_kind"] = to_string(s.kind);
  j["shape"] = {{"state_dim", s.state_dim},
                {"noise_dim", s.noise_dim},
                {"hidden", s.hidden},
                {"steps", s.steps}};
  j["config"] = ckpt.config_text;
  auto& items = j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : ckpt.params.items) {
    items.push_back({{"name", p.name},
                     {"rows", p.value.rows},
                     {"cols", p.value.cols},
                     {"decay", p.decay},
                     {"values", p.value.values}});
  }
  return j.dump(1);
}

Checkpoint checkpoint_from_string(const std::string& text) {
  Checkpoint c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw LoadError("not an fbsde checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw LoadError("unsupported checkpoint version " + std::to_string(version));
    }
    c.iteration = j.at("iteration").get<std::size_t>();
    c.config_text = j.at("config").get<std::string>();
    PolicyShape& s = c.params.shape;
    s.kind = parse_policy_kind(j.at("policy_kind").get<std::string>());
    const auto& sh = j.at("shape");
    s.state_dim = sh.at("state_dim").get<std::size_t>();
    s.noise_dim = sh.at("noise_dim").get<std::size_t>();
    s.hidden = sh.at("hidden").get<std::size_t>();
    s.steps = sh.at("steps").get<std::size_t>();
    for (const auto& item : j.at("parameters")) {
      const auto rows = item.at("rows").get<std::size_t>();
      const auto cols = item.at("cols").get<std::size_t>();
      auto values = item.at("values").get<std::vector<double>>();
      if (values.size() != rows * cols) {
        throw LoadError("parameter " + item.at("name").get<std::string>() + " has " +
                        std::to_string(values.size()) + " values for shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
      }
      c.params.items.push_back({item.at("name").get<std::string>(),
                                Tensor(rows, cols, std::move(values)),
                                item.at("decay").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LoadError(std::string("invalid checkpoint: ") + e.what());
  }
  require_shape(c.params, c.params.shape);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw std::ios_base::failure("cannot write " + tmp.string());
    os << checkpoint_to_string(ckpt) << '\n';
    if (!os) throw std::ios_base::failure("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::ios_base::failure("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace fbsde
