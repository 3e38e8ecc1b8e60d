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
#include <vector>

#include "trotterdiff/nn/tape.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff::nn {

// Shapes: "row" means a 1xC tensor broadcast over rows, "col" an Rx1 tensor
// broadcast over columns. All operands must live on the same tape.

Var matmul(const Var& a, const Var& b);
/** x W + b with b a 1xout row. */
Var linear(const Var& x, const Var& w, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var add_col(const Var& a, const Var& col);
Var mul_col(const Var& a, const Var& col);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/** Multiply every entry of `a` by the 1x1 tensor `s`. */
Var scale_by(const Var& a, const Var& s);

Var tanh(const Var& a);
/** tanh approximation of GELU. */
Var gelu(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var square(const Var& a);
/** Elementwise power; entries must be positive unless p is an integer. */
Var pow(const Var& a, double p);

Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);
Var row_mean(const Var& a);
Var col_sum(const Var& a);
Var col_mean(const Var& a);

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var transpose(const Var& a);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
/** out.row(i) = a.row(index[i]). */
Var gather_rows(const Var& a, const std::vector<int>& index);
/** out.row(index[i]) += a.row(i); out has `rows` rows. */
Var scatter_add_rows(const Var& a, const std::vector<int>& index, Eigen::Index rows);
/** Rx1 tensor with out(r) = a(r, labels[r]). */
Var pick(const Var& a, const std::vector<int>& labels);

/** Inverted dropout; identity unless the tape is in training mode. */
Var dropout(const Var& a, double p, Rng& rng);

/** Row-wise layer normalization built from primitives (twice differentiable). */
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

/**
 * Single-head scaled dot-product attention softmax(q k^T / sqrt(d) + mask) v.
 * `mask` is an additive constant (use a large negative value to block).
 */
Var attention(const Var& q, const Var& k, const Var& v, const Matrix* mask = nullptr);

/** Attention restricted to consecutive row blocks of length `len` (one block per example). */
Var block_attention(const Var& q, const Var& k, const Var& v, Eigen::Index len);

/**
 * Fixed linear operator applied to `a`. `adjoint` must be the transpose of
 * `forward` as a linear map; it is used for the backward pass.
 */
Var linear_map(const Var& a, std::function<Matrix(const Matrix&)> forward,
               std::function<Matrix(const Matrix&)> adjoint);

}  // namespace trotterdiff::nn
