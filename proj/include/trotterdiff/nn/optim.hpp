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

#include <vector>

#include "trotterdiff/nn/tape.hpp"

namespace trotterdiff::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/** Per-parameter moments aligned with the parameter list they were made for. */
struct OptimizerState {
  AdamWConfig config;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

OptimizerState make_optimizer(const std::vector<ParamPtr>& params, const AdamWConfig& config);

/** Decoupled weight decay Adam step using Parameter::grad. */
void adamw_step(const std::vector<ParamPtr>& params, OptimizerState& state);

void zero_grad(const std::vector<ParamPtr>& params);
double grad_norm(const std::vector<ParamPtr>& params);
/** Scales gradients so their global L2 norm is at most max_norm; returns the norm before clipping. */
double clip_grad_norm(const std::vector<ParamPtr>& params, double max_norm);
bool grads_finite(const std::vector<ParamPtr>& params);

struct EmaWeights {
  double decay = 0.9999;
  std::vector<Matrix> shadow;
};

EmaWeights make_ema(const std::vector<ParamPtr>& params, double decay);
/** shadow <- decay * shadow + (1 - decay) * live */
void ema_update(const std::vector<ParamPtr>& live, EmaWeights& ema);

/** Swaps shadow values into the live parameters for the guard's lifetime. */
class EmaScope {
 public:
  EmaScope(const std::vector<ParamPtr>& params, const EmaWeights& ema);
  ~EmaScope();
  EmaScope(const EmaScope&) = delete;
  EmaScope& operator=(const EmaScope&) = delete;

 private:
  const std::vector<ParamPtr>& params_;
  std::vector<Matrix> saved_;
};

}  // namespace trotterdiff::nn
