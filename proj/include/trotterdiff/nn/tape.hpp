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
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trotterdiff::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/** Trainable tensor with a gradient accumulator. */
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParamPtr = std::shared_ptr<Parameter>;

class Tape;

/** Handle to a node recorded on a Tape. Cheap to copy. */
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  const Matrix& value() const;
  /** Gradient after Tape::backward; empty when the node was not reached. */
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int index_ = -1;
};

/**
 * Linear record of a computation for reverse-mode differentiation. Nodes are
 * appended in evaluation order, so reverse creation order is a valid
 * topological order for backward().
 */
class Tape {
 public:
  /** Pushes grad_out of the node into its parents via Tape::accumulate. */
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out, const Matrix& out)>;

  /** With record == false no backward closures are kept (inference). */
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /** One leaf per parameter per tape; gradients flush into Parameter::grad. */
  Var param(const ParamPtr& p);

  /** Record a derived node; the closure is dropped unless a parent needs grad. */
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn backward);

  /** Reverse sweep from a 1x1 node; adds into Parameter::grad. */
  void backward(const Var& loss);

  void accumulate(const Var& target, const Matrix& contribution);

  bool recording() const { return record_; }
  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }
  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    ParamPtr param;
  };

  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<std::pair<const Parameter*, int>> param_index_;
  bool record_;
  bool training_ = false;
};

}  // namespace trotterdiff::nn
