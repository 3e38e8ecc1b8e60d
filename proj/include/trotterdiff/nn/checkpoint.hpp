// Copyright 2026 The trotterdiff Authors
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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trotterdiff/nn/optim.hpp"
#include "trotterdiff/nn/tape.hpp"

namespace trotterdiff::nn {

struct NamedTensor {
  std::string name;
  Matrix value;
};

/**
 * Tensors plus free-form metadata, stored as `<prefix>.manifest.json` and
 * `<prefix>.blob` (little-endian float32, row-major, concatenated).
 */
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  nlohmann::json metadata = nlohmann::json::object();

  bool contains(const std::string& name) const;
  /** Throws FormatError when absent. */
  const Matrix& get(const std::string& name) const;
  void add(std::string name, Matrix value);
};

std::filesystem::path manifest_path(const std::filesystem::path& prefix);
std::filesystem::path blob_path(const std::filesystem::path& prefix);

void save_checkpoint(const std::filesystem::path& prefix, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& prefix);
void remove_checkpoint(const std::filesystem::path& prefix);

/** Add each parameter as `<scope>/<param name>`. */
void add_parameters(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params);
/** Restore parameters; a missing tensor or shape mismatch is a FormatError. */
void load_parameters(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params);

void add_optimizer(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
                   const OptimizerState& state);
void load_optimizer(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
                    OptimizerState& state);
void add_ema(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
             const EmaWeights& ema);
void load_ema(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
              EmaWeights& ema);

}  // namespace trotterdiff::nn
