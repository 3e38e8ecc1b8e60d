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

#include <functional>

#include "trotterdiff/nn/layers.hpp"
#include "trotterdiff/nn/tape.hpp"

namespace trotterdiff::nn {

/**
 * Value and tangent with respect to one scalar input, both recorded on the
 * tape. Because tangents are built from ordinary primitives, backward() on a
 * loss involving `d` yields parameter gradients of the derivative
 * (forward-over-reverse).
 */
struct Dual {
  Var v;
  Var d;
};

Dual linear_dual(Tape& t, const Linear& layer, const Dual& x);
Dual layer_norm_dual(Tape& t, const LayerNorm& norm, const Dual& x);
Dual tanh_dual(const Dual& x);
Dual gelu_dual(const Dual& x);
Dual sin_dual(const Dual& x);
Dual cos_dual(const Dual& x);
Dual activate_dual(Activation act, const Dual& x);
/** Evaluation-mode MLP (no dropout). */
Dual mlp_dual(Tape& t, const MLP& mlp, const Dual& x);

/** Rows [cos(2 pi B s_r), sin(2 pi B s_r)] for s an N-vector and B an m x 1 matrix. */
Matrix fourier_features(const Eigen::VectorXd& s, const Matrix& b);
/** d/ds of fourier_features, row by row. */
Matrix fourier_features_ds(const Eigen::VectorXd& s, const Matrix& b);

using DualNet = std::function<Dual(Tape&, const Dual&)>;

/** Exact d(net)/ds at each entry of s (rows of the result follow s). */
Matrix time_derivative(const DualNet& net, const Eigen::VectorXd& s);

}  // namespace trotterdiff::nn
