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

#include "trotterdiff/nn/tape.hpp"

#include "trotterdiff/errors.hpp"

namespace trotterdiff::nn {

const Matrix& Var::value() const { return tape_->nodes_[static_cast<std::size_t>(index_)]->value; }
const Matrix& Var::grad() const { return tape_->nodes_[static_cast<std::size_t>(index_)]->grad; }
bool Var::requires_grad() const {
  return tape_->nodes_[static_cast<std::size_t>(index_)]->requires_grad;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw InputError("scalar() on a non-scalar tensor");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(const ParamPtr& p) {
  for (const auto& [ptr, idx] : param_index_) {
    if (ptr == p.get()) return Var(this, idx);
  }
  auto node = std::make_unique<Node>();
  node->value = p->value;
  node->requires_grad = record_;
  node->param = p;
  nodes_.push_back(std::move(node));
  const int idx = static_cast<int>(nodes_.size() - 1);
  param_index_.emplace_back(p.get(), idx);
  return Var(this, idx);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn backward) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
    if (node->requires_grad) node->backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(const Var& target, const Matrix& contribution) {
  Node& n = *nodes_[static_cast<std::size_t>(target.index())];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = contribution;
  } else {
    n.grad += contribution;
  }
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw InputError("loss recorded on a different tape");
  if (loss.value().size() != 1) throw InputError("backward needs a scalar loss");
  if (!record_) throw InputError("backward on a non-recording tape");
  Node& root = *nodes_[static_cast<std::size_t>(loss.index())];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t i = static_cast<std::size_t>(loss.index()) + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad, n.value);
    if (n.param) n.param->grad += n.grad;
  }
}

}  // namespace trotterdiff::nn
