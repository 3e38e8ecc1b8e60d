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

#include "trotterdiff/nn/optim.hpp"

#include <cmath>

#include "trotterdiff/errors.hpp"

namespace trotterdiff::nn {

OptimizerState make_optimizer(const std::vector<ParamPtr>& params, const AdamWConfig& config) {
  if (config.lr < 0 || config.weight_decay < 0) throw InputError("negative learning rate or weight decay");
  OptimizerState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    s.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void adamw_step(const std::vector<ParamPtr>& params, OptimizerState& state) {
  if (params.size() != state.m.size()) throw InputError("optimizer state does not match parameter list");
  const AdamWConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw InputError("optimizer moment shape mismatch for " + p.name);
    }
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    if (c.weight_decay != 0.0) p.value *= 1.0 - c.lr * c.weight_decay;
    p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

void zero_grad(const std::vector<ParamPtr>& params) {
  for (const auto& p : params) p->zero_grad();
}

double grad_norm(const std::vector<ParamPtr>& params) {
  double sq = 0;
  for (const auto& p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<ParamPtr>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0) {
    const double f = max_norm / norm;
    for (const auto& p : params) p->grad *= f;
  }
  return norm;
}

bool grads_finite(const std::vector<ParamPtr>& params) {
  for (const auto& p : params) {
    if (!p->grad.allFinite()) return false;
  }
  return true;
}

EmaWeights make_ema(const std::vector<ParamPtr>& params, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw InputError("EMA decay must lie in [0, 1]");
  EmaWeights e;
  e.decay = decay;
  for (const auto& p : params) e.shadow.push_back(p->value);
  return e;
}

void ema_update(const std::vector<ParamPtr>& live, EmaWeights& ema) {
  if (live.size() != ema.shadow.size()) throw InputError("EMA shadow does not match parameter list");
  for (std::size_t i = 0; i < live.size(); ++i) {
    if (ema.decay == 1.0) continue;
    if (ema.decay == 0.0) {
      ema.shadow[i] = live[i]->value;
    } else {
      ema.shadow[i] = ema.decay * ema.shadow[i] + (1.0 - ema.decay) * live[i]->value;
    }
  }
}

EmaScope::EmaScope(const std::vector<ParamPtr>& params, const EmaWeights& ema) : params_(params) {
  if (params.size() != ema.shadow.size()) throw InputError("EMA shadow does not match parameter list");
  saved_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    saved_.push_back(params[i]->value);
    params[i]->value = ema.shadow[i];
  }
}

EmaScope::~EmaScope() {
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->value = std::move(saved_[i]);
}

}  // namespace trotterdiff::nn
