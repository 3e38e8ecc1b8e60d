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

#include "trotterdiff/nn/layers.hpp"

#include <cmath>

#include "trotterdiff/errors.hpp"

namespace trotterdiff::nn {

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

ParamPtr Module::add_param(const std::string& name, Matrix init) {
  params_.push_back(std::make_shared<Parameter>(name, std::move(init)));
  return params_.back();
}

void Module::add_child(const Module& child) {
  params_.insert(params_.end(), child.params_.begin(), child.params_.end());
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng) {
  if (in <= 0 || out <= 0) throw InputError("Linear dimensions must be positive");
  const double sd = std::sqrt(2.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = sd * rng.normal();
  w_ = add_param(name + ".w", std::move(w));
  b_ = add_param(name + ".b", Matrix::Zero(1, out));
}

Var Linear::operator()(Tape& t, const Var& x) const {
  return linear(x, t.param(w_), t.param(b_));
}

LayerNorm::LayerNorm(const std::string& name, Eigen::Index dim) {
  if (dim <= 0) throw InputError("LayerNorm dimension must be positive");
  gamma_ = add_param(name + ".gamma", Matrix::Ones(1, dim));
  beta_ = add_param(name + ".beta", Matrix::Zero(1, dim));
}

Var LayerNorm::operator()(Tape& t, const Var& x) const {
  return layer_norm(x, t.param(gamma_), t.param(beta_));
}

Var activate(Activation act, const Var& x) {
  return act == Activation::Tanh ? tanh(x) : gelu(x);
}

MLP::MLP(const std::string& name, MLPSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.widths.size() < 2) throw InputError("MLP needs at least input and output widths");
  if (spec_.dropout < 0.0 || spec_.dropout >= 1.0) throw InputError("dropout rate must lie in [0, 1)");
  const std::size_t layers = spec_.widths.size() - 1;
  for (std::size_t i = 0; i < layers; ++i) {
    linears_.emplace_back(name + ".l" + std::to_string(i), spec_.widths[i], spec_.widths[i + 1], rng);
    add_child(linears_.back());
    if (spec_.layer_norm && i + 1 < layers) {
      norms_.emplace_back(name + ".ln" + std::to_string(i), spec_.widths[i + 1]);
      add_child(norms_.back());
    }
  }
}

Var MLP::operator()(Tape& t, const Var& x, Rng* rng) const {
  Var h = x;
  const std::size_t layers = linears_.size();
  for (std::size_t i = 0; i < layers; ++i) {
    h = linears_[i](t, h);
    if (i + 1 == layers) break;
    if (spec_.layer_norm) h = norms_[i](t, h);
    h = activate(spec_.activation, h);
    if (spec_.dropout > 0.0 && t.training()) {
      if (rng == nullptr) throw InputError("MLP dropout in training mode needs an Rng");
      h = dropout(h, spec_.dropout, *rng);
    }
  }
  return h;
}

}  // namespace trotterdiff::nn
