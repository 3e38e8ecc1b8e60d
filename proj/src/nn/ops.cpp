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

#include "trotterdiff/nn/ops.hpp"

#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"

namespace trotterdiff::nn {

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw InputError("operation on an empty Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw InputError("operation on an empty Var");
  if (a.tape() != b.tape()) throw InputError("operands recorded on different tapes");
  return *a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(op) + ": shape mismatch");
  }
}

void require_row(const Var& a, const Var& row, const char* op) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw InputError(std::string(op) + ": expected a 1x" + std::to_string(a.cols()) + " row");
  }
}

void require_col(const Var& a, const Var& col, const char* op) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw InputError(std::string(op) + ": expected a " + std::to_string(a.rows()) + "x1 column");
  }
}

template <typename F, typename D>
Var unary(const Var& a, F f, D dfdx) {
  Tape& t = tape_of(a);
  Matrix out = a.value().unaryExpr(f);
  return t.record(std::move(out), {a}, [a, dfdx](Tape& tp, const Matrix& g, const Matrix& y) {
    tp.accumulate(a, dfdx(a.value(), y, g));
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) throw InputError("matmul: inner dimensions differ");
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    if (a.requires_grad()) tp.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) tp.accumulate(b, a.value().transpose() * g);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  Tape& t = tape_of(x, w);
  tape_of(x, b);
  if (x.cols() != w.rows()) throw InputError("linear: input width does not match weight rows");
  if (b.rows() != 1 || b.cols() != w.cols()) throw InputError("linear: bias shape mismatch");
  Matrix out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return t.record(std::move(out), {x, w, b}, [x, w, b](Tape& tp, const Matrix& g, const Matrix&) {
    if (x.requires_grad()) tp.accumulate(x, g * w.value().transpose());
    if (w.requires_grad()) tp.accumulate(w, x.value().transpose() * g);
    if (b.requires_grad()) tp.accumulate(b, g.colwise().sum());
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    if (b.requires_grad()) tp.accumulate(b, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b},
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    if (a.requires_grad()) tp.accumulate(a, g.cwiseProduct(b.value()));
                    if (b.requires_grad()) tp.accumulate(b, g.cwiseProduct(a.value()));
                  });
}

Var add_row(const Var& a, const Var& row) {
  Tape& t = tape_of(a, row);
  require_row(a, row, "add_row");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return t.record(std::move(out), {a, row}, [a, row](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    if (row.requires_grad()) tp.accumulate(row, g.colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  Tape& t = tape_of(a, row);
  require_row(a, row, "mul_row");
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return t.record(std::move(out), {a, row}, [a, row](Tape& tp, const Matrix& g, const Matrix&) {
    if (a.requires_grad()) {
      Matrix ga = g.array().rowwise() * row.value().row(0).array();
      tp.accumulate(a, ga);
    }
    if (row.requires_grad()) tp.accumulate(row, g.cwiseProduct(a.value()).colwise().sum());
  });
}

Var add_col(const Var& a, const Var& col) {
  Tape& t = tape_of(a, col);
  require_col(a, col, "add_col");
  Matrix out = a.value();
  out.colwise() += col.value().col(0);
  return t.record(std::move(out), {a, col}, [a, col](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    if (col.requires_grad()) tp.accumulate(col, g.rowwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  Tape& t = tape_of(a, col);
  require_col(a, col, "mul_col");
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.record(std::move(out), {a, col}, [a, col](Tape& tp, const Matrix& g, const Matrix&) {
    if (a.requires_grad()) {
      Matrix ga = g.array().colwise() * col.value().col(0).array();
      tp.accumulate(a, ga);
    }
    if (col.requires_grad()) tp.accumulate(col, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var scale(const Var& a, double s) {
  Tape& t = tape_of(a);
  return t.record(a.value() * s, {a},
                  [a, s](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, g * s); });
}

Var add_scalar(const Var& a, double s) {
  Tape& t = tape_of(a);
  Matrix out = a.value().array() + s;
  return t.record(std::move(out), {a},
                  [a](Tape& tp, const Matrix& g, const Matrix&) { tp.accumulate(a, g); });
}

Var scale_by(const Var& a, const Var& s) {
  Tape& t = tape_of(a, s);
  if (s.value().size() != 1) throw InputError("scale_by: expected a 1x1 scale");
  return t.record(a.value() * s.scalar(), {a, s}, [a, s](Tape& tp, const Matrix& g, const Matrix&) {
    if (a.requires_grad()) tp.accumulate(a, g * s.scalar());
    if (s.requires_grad()) tp.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(a.value()).sum()));
  });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return g.array() * (1.0 - y.array().square());
      });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(const Var& a) {
  return unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.binaryExpr(x, [](double gv, double xv) {
          const double u = kGeluC * (xv + kGeluA * xv * xv * xv);
          const double th = std::tanh(u);
          const double du = kGeluC * (1.0 + 3.0 * kGeluA * xv * xv);
          return gv * (0.5 * (1.0 + th) + 0.5 * xv * (1.0 - th * th) * du);
        });
      });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return g.array() * y.array() * (1.0 - y.array());
      });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix { return g.cwiseProduct(y); });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.array() / x.array();
      });
}

Var sin(const Var& a) {
  return unary(
      a, [](double x) { return std::sin(x); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.array() * x.array().cos();
      });
}

Var cos(const Var& a) {
  return unary(
      a, [](double x) { return std::cos(x); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return -(g.array() * x.array().sin());
      });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return 2.0 * g.array() * x.array();
      });
}

Var pow(const Var& a, double p) {
  return unary(
      a, [p](double x) { return std::pow(x, p); },
      [p](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.array() * p * x.array().pow(p - 1.0);
      });
}

Var sum(const Var& a) {
  Tape& t = tape_of(a);
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(Matrix::Constant(1, 1, a.value().sum()), {a},
                  [a, r, c](Tape& tp, const Matrix& g, const Matrix&) {
                    tp.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
                  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw InputError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_sum(const Var& a) {
  Tape& t = tape_of(a);
  const Eigen::Index c = a.cols();
  Matrix out = a.value().rowwise().sum();
  return t.record(std::move(out), {a}, [a, c](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g.col(0).replicate(1, c));
  });
}

Var row_mean(const Var& a) {
  if (a.cols() == 0) throw InputError("row_mean of a tensor with no columns");
  return scale(row_sum(a), 1.0 / static_cast<double>(a.cols()));
}

Var col_sum(const Var& a) {
  Tape& t = tape_of(a);
  const Eigen::Index r = a.rows();
  Matrix out = a.value().colwise().sum();
  return t.record(std::move(out), {a}, [a, r](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g.row(0).replicate(r, 1));
  });
}

Var col_mean(const Var& a) {
  if (a.rows() == 0) throw InputError("col_mean of a tensor with no rows");
  return scale(col_sum(a), 1.0 / static_cast<double>(a.rows()));
}

Var softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp();
    out.row(r) /= out.row(r).sum();
  }
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix& y) {
    Matrix dot = g.cwiseProduct(y).rowwise().sum();
    Matrix ga = y.array() * (g.colwise() - dot.col(0)).array();
    tp.accumulate(a, ga);
  });
}

Var log_softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    const double lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix& y) {
    Matrix p = y.array().exp();
    Matrix gs = g.rowwise().sum();
    Matrix ga = g - (p.array().colwise() * gs.col(0).array()).matrix();
    tp.accumulate(a, ga);
  });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().transpose();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g.transpose());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index r = parts.front().rows();
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    if (p.rows() != r) throw InputError("concat_cols: row counts differ");
    c += p.cols();
  }
  Matrix out(r, c);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return t.record(std::move(out), parts, [parts](Tape& tp, const Matrix& g, const Matrix&) {
    Eigen::Index off = 0;
    for (const Var& p : parts) {
      if (p.requires_grad()) tp.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    if (p.cols() != c) throw InputError("concat_rows: column counts differ");
    r += p.rows();
  }
  Matrix out(r, c);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return t.record(std::move(out), parts, [parts](Tape& tp, const Matrix& g, const Matrix&) {
    Eigen::Index off = 0;
    for (const Var& p : parts) {
      if (p.requires_grad()) tp.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) throw InputError("slice_cols out of range");
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(a.value().middleCols(start, count), {a},
                  [a, start, count, r, c](Tape& tp, const Matrix& g, const Matrix&) {
                    Matrix ga = Matrix::Zero(r, c);
                    ga.middleCols(start, count) = g;
                    tp.accumulate(a, ga);
                  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.rows()) throw InputError("slice_rows out of range");
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(a.value().middleRows(start, count), {a},
                  [a, start, count, r, c](Tape& tp, const Matrix& g, const Matrix&) {
                    Matrix ga = Matrix::Zero(r, c);
                    ga.middleRows(start, count) = g;
                    tp.accumulate(a, ga);
                  });
}

Var gather_rows(const Var& a, const std::vector<int>& index) {
  Tape& t = tape_of(a);
  Matrix out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw InputError("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(std::move(out), {a}, [a, index, r, c](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = Matrix::Zero(r, c);
    for (std::size_t i = 0; i < index.size(); ++i) ga.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(a, ga);
  });
}

Var scatter_add_rows(const Var& a, const std::vector<int>& index, Eigen::Index rows) {
  Tape& t = tape_of(a);
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) {
    throw InputError("scatter_add_rows: one index per input row required");
  }
  Matrix out = Matrix::Zero(rows, a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= rows) throw InputError("scatter_add_rows index out of range");
    out.row(index[i]) += a.value().row(static_cast<Eigen::Index>(i));
  }
  return t.record(std::move(out), {a}, [a, index](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga(static_cast<Eigen::Index>(index.size()), g.cols());
    for (std::size_t i = 0; i < index.size(); ++i) ga.row(static_cast<Eigen::Index>(i)) = g.row(index[i]);
    tp.accumulate(a, ga);
  });
}

Var pick(const Var& a, const std::vector<int>& labels) {
  Tape& t = tape_of(a);
  if (static_cast<Eigen::Index>(labels.size()) != a.rows()) throw InputError("pick: one label per row");
  Matrix out(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const int l = labels[static_cast<std::size_t>(r)];
    if (l < 0 || l >= a.cols()) throw InputError("pick: label out of range");
    out(r, 0) = a.value()(r, l);
  }
  const Eigen::Index c = a.cols();
  return t.record(std::move(out), {a}, [a, labels, c](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix ga = Matrix::Zero(g.rows(), c);
    for (Eigen::Index r = 0; r < g.rows(); ++r) ga(r, labels[static_cast<std::size_t>(r)]) = g(r, 0);
    tp.accumulate(a, ga);
  });
}

Var dropout(const Var& a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InputError("dropout rate must lie in [0, 1)");
  Tape& t = tape_of(a);
  if (!t.training() || p == 0.0) return a;
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep;
  Matrix out = a.value().cwiseProduct(mask);
  return t.record(std::move(out), {a}, [a, mask = std::move(mask)](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g.cwiseProduct(mask));
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Var centered = add_col(x, scale(row_mean(x), -1.0));
  const Var inv_std = pow(add_scalar(row_mean(square(centered)), eps), -0.5);
  return add_row(mul_row(mul_col(centered, inv_std), gamma), beta);
}

Var attention(const Var& q, const Var& k, const Var& v, const Matrix* mask) {
  if (q.cols() != k.cols()) throw InputError("attention: query/key widths differ");
  if (k.rows() != v.rows()) throw InputError("attention: key/value lengths differ");
  Var scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  if (mask != nullptr) {
    if (mask->rows() != q.rows() || mask->cols() != k.rows()) throw InputError("attention: mask shape");
    scores = add(scores, q.tape()->constant(*mask));
  }
  return matmul(softmax_rows(scores), v);
}

Var block_attention(const Var& q, const Var& k, const Var& v, Eigen::Index len) {
  Tape& t = tape_of(q, k);
  tape_of(q, v);
  if (len < 1 || q.rows() % len != 0) throw InputError("block_attention: rows not a multiple of the block length");
  if (q.cols() != k.cols()) throw InputError("attention: query/key widths differ");
  if (k.rows() != q.rows() || v.rows() != q.rows()) throw InputError("block_attention: q, k, v row counts differ");
  const double s = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Eigen::Index blocks = q.rows() / len;
  auto probs = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(blocks));
  Matrix out(q.rows(), v.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    Matrix p = s * q.value().middleRows(b * len, len) * k.value().middleRows(b * len, len).transpose();
    for (Eigen::Index r = 0; r < len; ++r) {
      p.row(r).array() -= p.row(r).maxCoeff();
      p.row(r) = p.row(r).array().exp();
      p.row(r) /= p.row(r).sum();
    }
    out.middleRows(b * len, len).noalias() = p * v.value().middleRows(b * len, len);
    (*probs)[static_cast<std::size_t>(b)] = std::move(p);
  }
  return t.record(std::move(out), {q, k, v}, [q, k, v, len, s, probs](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix gq = Matrix::Zero(q.rows(), q.cols()), gk = Matrix::Zero(k.rows(), k.cols());
    Matrix gv = Matrix::Zero(v.rows(), v.cols());
    for (std::size_t b = 0; b < probs->size(); ++b) {
      const Eigen::Index o = static_cast<Eigen::Index>(b) * len;
      const Matrix& p = (*probs)[b];
      const auto go = g.middleRows(o, len);
      gv.middleRows(o, len).noalias() = p.transpose() * go;
      const Matrix gp = go * v.value().middleRows(o, len).transpose();
      const Eigen::VectorXd dot = gp.cwiseProduct(p).rowwise().sum();
      const Matrix gs = s * (p.array() * (gp.colwise() - dot).array()).matrix();
      gq.middleRows(o, len).noalias() = gs * k.value().middleRows(o, len);
      gk.middleRows(o, len).noalias() = gs.transpose() * q.value().middleRows(o, len);
    }
    if (q.requires_grad()) tp.accumulate(q, gq);
    if (k.requires_grad()) tp.accumulate(k, gk);
    if (v.requires_grad()) tp.accumulate(v, gv);
  });
}

Var linear_map(const Var& a, std::function<Matrix(const Matrix&)> forward,
               std::function<Matrix(const Matrix&)> adjoint) {
  Tape& t = tape_of(a);
  Matrix out = forward(a.value());
  return t.record(std::move(out), {a}, [a, adjoint = std::move(adjoint)](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, adjoint(g));
  });
}

}  // namespace trotterdiff::nn
