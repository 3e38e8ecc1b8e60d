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

#include "trotterdiff/gnn.hpp"

#include <algorithm>
#include <numeric>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/nn/ops.hpp"

namespace trotterdiff {

using nn::Matrix;
using nn::Tape;
using nn::Var;

Matrix standardized_node_features(const HamiltonianGraph& g) {
  Matrix f = g.node_features;
  if (f.rows() == 0) return f;
  f.col(0) = (f.col(0).array() + kLogCoeffShift) * kLogCoeffScale;
  f.col(2) *= kSupportScale;
  f.col(3) *= kSupportScale;
  return f;
}

Matrix standardized_edge_features(const HamiltonianGraph& g) {
  Matrix f = g.edge_features;
  if (f.rows() == 0) return f;
  f.col(0) *= 0.5;
  f.col(1) *= kSupportScale;
  return f;
}

GnnEncoder::GnnEncoder(const GnnConfig& config, Rng& rng)
    : config_(config),
      input_("gnn.in", kNodeFeatureDim, config.hidden > 0 ? config.hidden : 1, rng),
      attn_hidden_("gnn.attn", config.out > 0 ? config.out : 1, config.out > 0 ? config.out : 1, rng) {
  if (config.layers < 1 || config.hidden <= 0 || config.out <= 0) {
    throw InputError("GNN needs at least one layer and positive widths");
  }
  add_child(input_);
  const Eigen::Index hdim = config.hidden;
  for (int l = 0; l < config.layers; ++l) {
    const Eigen::Index out = l + 1 == config.layers ? config.out : config.hidden;
    const std::string tag = "gnn.mp" + std::to_string(l);
    msg_.emplace_back(tag + ".msg",
                      nn::MLPSpec{{2 * hdim + kEdgeFeatureDim, hdim, hdim}, nn::Activation::Gelu, false, 0.0},
                      rng);
    update_.emplace_back(tag + ".upd", nn::MLPSpec{{2 * hdim, hdim, out}, nn::Activation::Gelu, false, 0.0},
                         rng);
    norms_.emplace_back(tag + ".ln", out);
    add_child(msg_.back());
    add_child(update_.back());
    add_child(norms_.back());
  }
  add_child(attn_hidden_);
  Matrix w(config.out, 1);
  const double sd = std::sqrt(2.0 / static_cast<double>(config.out + 1));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i, 0) = sd * rng.normal();
  attn_out_ = add_param("gnn.attn.score", std::move(w));
}

Var GnnEncoder::embed_nodes(Tape& t, const HamiltonianGraph& g) const {
  if (g.num_nodes() == 0) throw InputError("cannot encode an empty graph");
  return nn::tanh(input_(t, t.constant(standardized_node_features(g))));
}

Var GnnEncoder::message_pass(Tape& t, const HamiltonianGraph& g, const Var& h, int layer, Rng* rng) const {
  if (layer < 0 || layer >= config_.layers) throw InputError("message_pass layer out of range");
  const auto l = static_cast<std::size_t>(layer);
  const Eigen::Index m = h.rows();
  Var messages;
  if (g.edges.empty()) {
    messages = t.constant(Matrix::Zero(m, config_.hidden));
  } else {
    // both directions of every undirected edge
    std::vector<int> dst, src;
    const Matrix e = standardized_edge_features(g);
    Matrix edge_in(2 * e.rows(), e.cols());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto [a, b] = g.edges[i];
      dst.push_back(a);
      src.push_back(b);
      dst.push_back(b);
      src.push_back(a);
      edge_in.row(static_cast<Eigen::Index>(2 * i)) = e.row(static_cast<Eigen::Index>(i));
      edge_in.row(static_cast<Eigen::Index>(2 * i + 1)) = e.row(static_cast<Eigen::Index>(i));
    }
    const Var in = nn::concat_cols({nn::gather_rows(h, dst), nn::gather_rows(h, src), t.constant(edge_in)});
    messages = nn::scatter_add_rows(msg_[l](t, in), dst, m);
  }
  Var out = norms_[l](t, update_[l](t, nn::concat_cols({h, messages})));
  if (layer + 1 < config_.layers) out = nn::gelu(out);
  if (config_.dropout > 0 && t.training()) {
    if (rng == nullptr) throw InputError("GNN dropout in training mode needs an Rng");
    out = nn::dropout(out, config_.dropout, *rng);
  }
  return out;
}

std::pair<Var, Var> GnnEncoder::attention_pool(Tape& t, const Var& h) const {
  const Var scores = nn::matmul(nn::tanh(attn_hidden_(t, h)), t.param(attn_out_));
  const Var alpha = nn::softmax_rows(nn::transpose(scores));
  return {nn::matmul(alpha, h), alpha};
}

Var GnnEncoder::encode(Tape& t, const HamiltonianGraph& g, Rng* rng) const {
  Var h = embed_nodes(t, g);
  for (int l = 0; l < config_.layers; ++l) h = message_pass(t, g, h, l, rng);
  return attention_pool(t, h).first;
}

Var GnnEncoder::encode(Tape& t, const Hamiltonian& h, Rng* rng) const {
  return encode(t, build_graph(h), rng);
}

Eigen::VectorXd GnnEncoder::encode(const Hamiltonian& h) const {
  Tape t(false);
  return encode(t, h).value().row(0).transpose();
}

Eigen::RowVectorXd policy_embedding(const Policy& p) {
  Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(kPolicyEmbeddingDim);
  const int k = p.num_groups();
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int g : p.grouping) ++sizes[static_cast<std::size_t>(g)];
  for (int s : sizes) e[std::min(s, 8) - 1] += 1.0 / k;
  for (int o : p.orders) e[8 + (o == 1 ? 0 : o == 2 ? 1 : 2)] += 1.0;
  std::vector<double> tau = p.tau;
  std::sort(tau.begin(), tau.end(), std::greater<>());
  for (std::size_t i = 0; i < std::min<std::size_t>(tau.size(), 8); ++i) e[11 + static_cast<Eigen::Index>(i)] = tau[i];
  return e;
}

FidelityHead::FidelityHead(int condition_dim, int hidden, Rng& rng)
    : mlp_("head", {{condition_dim + kPolicyEmbeddingDim, hidden, 1}, nn::Activation::Gelu, false, 0.0}, rng) {
  add_child(mlp_);
}

Var FidelityHead::operator()(Tape& t, const Var& c, const Policy& p) const {
  const Var pe = t.constant(Matrix(policy_embedding(p)));
  return nn::sigmoid(mlp_(t, nn::concat_cols({c, pe})));
}

Var regression_loss(Tape& t, const GnnEncoder& enc, const FidelityHead& head,
                    const std::vector<const RegressionExample*>& batch, Rng* rng) {
  if (batch.empty()) throw InputError("empty regression batch");
  std::vector<Var> preds;
  Matrix labels(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Var c = enc.encode(t, batch[i]->hamiltonian, rng);
    preds.push_back(head(t, c, batch[i]->policy));
    labels(static_cast<Eigen::Index>(i), 0) = batch[i]->label;
  }
  return nn::mean(nn::square(nn::sub(nn::concat_rows(preds), t.constant(labels))));
}

std::vector<double> train_fidelity_regression(GnnEncoder& enc, FidelityHead& head,
                                              const std::vector<RegressionExample>& data,
                                              const RegressionConfig& config, Rng& rng) {
  if (data.empty()) throw InputError("empty regression corpus");
  std::vector<nn::ParamPtr> params = enc.parameters();
  params.insert(params.end(), head.parameters().begin(), head.parameters().end());
  auto opt = nn::make_optimizer(params, config.optimizer);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      std::vector<const RegressionExample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(config.batch)); ++i) {
        batch.push_back(&data[order[i]]);
      }
      nn::zero_grad(params);
      Tape t;
      t.set_training(true);
      const Var loss = regression_loss(t, enc, head, batch, &rng);
      t.backward(loss);
      if (!nn::grads_finite(params)) throw TrainingDiverged("non-finite gradient in fidelity regression");
      nn::clip_grad_norm(params, config.clip);
      nn::adamw_step(params, opt);
      total += loss.scalar() * static_cast<double>(batch.size());
    }
    history.push_back(total / static_cast<double>(data.size()));
  }
  return history;
}

}  // namespace trotterdiff
