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

#include "trotterdiff/nn/dual.hpp"

#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/nn/ops.hpp"

namespace trotterdiff::nn {

namespace {
constexpr double kEps = 1e-5;  // matches layer_norm's default
constexpr double kGeluC = 0.7978845608028654;
constexpr double kGeluA = 0.044715;
}  // namespace

Dual linear_dual(Tape& t, const Linear& layer, const Dual& x) {
  const Var w = t.param(layer.weight());
  return {linear(x.v, w, t.param(layer.bias())), matmul(x.d, w)};
}

Dual layer_norm_dual(Tape& t, const LayerNorm& norm, const Dual& x) {
  const Var gamma = t.param(norm.gamma());
  const Var beta = t.param(norm.beta());
  const Var xc = add_col(x.v, scale(row_mean(x.v), -1.0));
  const Var dxc = add_col(x.d, scale(row_mean(x.d), -1.0));
  const Var var = add_scalar(row_mean(square(xc)), kEps);
  const Var inv = pow(var, -0.5);
  const Var dvar = scale(row_mean(mul(xc, dxc)), 2.0);
  const Var dinv = scale(mul(pow(var, -1.5), dvar), -0.5);
  const Var xhat = mul_col(xc, inv);
  const Var dxhat = add(mul_col(dxc, inv), mul_col(xc, dinv));
  return {add_row(mul_row(xhat, gamma), beta), mul_row(dxhat, gamma)};
}

Dual tanh_dual(const Dual& x) {
  const Var y = tanh(x.v);
  return {y, mul(x.d, add_scalar(scale(square(y), -1.0), 1.0))};
}

Dual gelu_dual(const Dual& x) {
  const Var u = scale(add(x.v, scale(pow(x.v, 3.0), kGeluA)), kGeluC);
  const Var th = tanh(u);
  const Var du = scale(add_scalar(scale(square(x.v), 3.0 * kGeluA), 1.0), kGeluC);
  const Var sech2 = add_scalar(scale(square(th), -1.0), 1.0);
  const Var slope = add(scale(add_scalar(th, 1.0), 0.5), scale(mul(mul(x.v, sech2), du), 0.5));
  return {gelu(x.v), mul(x.d, slope)};
}

Dual sin_dual(const Dual& x) { return {sin(x.v), mul(x.d, cos(x.v))}; }

Dual cos_dual(const Dual& x) { return {cos(x.v), scale(mul(x.d, sin(x.v)), -1.0)}; }

Dual activate_dual(Activation act, const Dual& x) {
  return act == Activation::Tanh ? tanh_dual(x) : gelu_dual(x);
}

Dual mlp_dual(Tape& t, const MLP& mlp, const Dual& x) {
  Dual h = x;
  const auto& linears = mlp.linears();
  for (std::size_t i = 0; i < linears.size(); ++i) {
    h = linear_dual(t, linears[i], h);
    if (i + 1 == linears.size()) break;
    if (mlp.spec().layer_norm) h = layer_norm_dual(t, mlp.norms()[i], h);
    h = activate_dual(mlp.spec().activation, h);
  }
  return h;
}

Matrix fourier_features(const Eigen::VectorXd& s, const Matrix& b) {
  if (b.cols() != 1) throw InputError("Fourier matrix must be m x 1");
  const Eigen::Index m = b.rows();
  Matrix out(s.size(), 2 * m);
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double phase = 2.0 * std::numbers::pi * b(j, 0) * s[r];
      out(r, j) = std::cos(phase);
      out(r, m + j) = std::sin(phase);
    }
  }
  return out;
}

Matrix fourier_features_ds(const Eigen::VectorXd& s, const Matrix& b) {
  if (b.cols() != 1) throw InputError("Fourier matrix must be m x 1");
  const Eigen::Index m = b.rows();
  Matrix out(s.size(), 2 * m);
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double w = 2.0 * std::numbers::pi * b(j, 0);
      const double phase = w * s[r];
      out(r, j) = -w * std::sin(phase);
      out(r, m + j) = w * std::cos(phase);
    }
  }
  return out;
}

Matrix time_derivative(const DualNet& net, const Eigen::VectorXd& s) {
  Tape t(false);
  const Dual in{t.constant(Matrix(s)), t.constant(Matrix::Ones(s.size(), 1))};
  return net(t, in).d.value();
}

}  // namespace trotterdiff::nn
