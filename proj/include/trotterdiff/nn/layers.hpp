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

#include <string>
#include <vector>

#include "trotterdiff/nn/ops.hpp"
#include "trotterdiff/nn/tape.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff::nn {

/** Owner of a flat, ordered parameter list. Children register into parents. */
class Module {
 public:
  virtual ~Module() = default;
  const std::vector<ParamPtr>& parameters() const { return params_; }
  std::size_t parameter_count() const;

 protected:
  ParamPtr add_param(const std::string& name, Matrix init);
  void add_child(const Module& child);

 private:
  std::vector<ParamPtr> params_;
};

/** Glorot-normal weights, zero bias. */
class Linear : public Module {
 public:
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  Var operator()(Tape& t, const Var& x) const;

  Eigen::Index in_features() const { return w_->value.rows(); }
  Eigen::Index out_features() const { return w_->value.cols(); }
  const ParamPtr& weight() const { return w_; }
  const ParamPtr& bias() const { return b_; }

 private:
  ParamPtr w_, b_;
};

class LayerNorm : public Module {
 public:
  LayerNorm(const std::string& name, Eigen::Index dim);
  Var operator()(Tape& t, const Var& x) const;

  const ParamPtr& gamma() const { return gamma_; }
  const ParamPtr& beta() const { return beta_; }

 private:
  ParamPtr gamma_, beta_;
};

enum class Activation { Tanh, Gelu };

Var activate(Activation act, const Var& x);

struct MLPSpec {
  std::vector<Eigen::Index> widths;  // input, hidden..., output
  Activation activation = Activation::Tanh;
  bool layer_norm = false;           // applied to every hidden layer
  double dropout = 0.0;
};

/** Hidden layers: affine, optional layer norm, activation, dropout. Last layer affine only. */
class MLP : public Module {
 public:
  MLP(const std::string& name, MLPSpec spec, Rng& rng);
  /** `rng` is only consulted for dropout in training mode. */
  Var operator()(Tape& t, const Var& x, Rng* rng = nullptr) const;

  const MLPSpec& spec() const { return spec_; }
  const std::vector<Linear>& linears() const { return linears_; }
  const std::vector<LayerNorm>& norms() const { return norms_; }

 private:
  MLPSpec spec_;
  std::vector<Linear> linears_;
  std::vector<LayerNorm> norms_;
};

}  // namespace trotterdiff::nn
