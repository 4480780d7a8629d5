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

// Versioned JSON checkpoints. Doubles are written in shortest round-trip
// form, so loading restores every parameter bit for bit.

#ifndef FBSDE_CHECKPOINT_HPP_
#define FBSDE_CHECKPOINT_HPP_

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "fbsde/policy.hpp"

namespace fbsde {

inline constexpr int kCheckpointVersion = 1;

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  PolicyParams params;
  std::size_t iteration = 0;
  std::string config_text;  // resolved run configuration
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
// Throws LoadError on malformed input, unknown versions or shape mismatches.
Checkpoint checkpoint_from_string(const std::string& text);

// Writes via a temporary file and rename. Throws std::ios_base::failure.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws LoadError unless `params` has exactly the tensors implied by `shape`.
void require_shape(const PolicyParams& params, const PolicyShape& shape);

}  // namespace fbsde

#endif  // FBSDE_CHECKPOINT_HPP_
